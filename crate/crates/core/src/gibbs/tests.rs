use statrs::function::gamma::gamma_ur;

use super::*;
use crate::error::Error;
use crate::model::{
    joint_loglik, CompletedOutcomes, DyadPanel, HazardSpec, Member, ModelSpec, NormalPrior,
    PanelData, PriorSpec,
};
use crate::rng::stream_rng;
use crate::stats::{ks_distance, mean, variance};

fn panel(j: usize, y1: Vec<Option<f64>>, y2: Vec<Option<f64>>) -> DyadPanel {
    let n = y1.len() / j;
    DyadPanel::new(PanelData {
        dyad_ids: (0..n).map(|i| format!("d{i}")).collect(),
        n_times: j,
        covariate_names: [vec![], vec![]],
        outcomes: [y1, y2],
        covariates: [vec![], vec![]],
    })
    .unwrap()
}

fn fixed(prior: PriorSpec) -> SamplerConfig {
    SamplerConfig {
        prior,
        adaptation: AdaptationConfig {
            enabled: false,
            ..AdaptationConfig::default()
        },
        ..SamplerConfig::default()
    }
}

fn sampler<'a>(p: &'a DyadPanel, cfg: &SamplerConfig, seed: u64) -> Sampler<'a> {
    Sampler::new(
        p,
        &ModelSpec::default(),
        cfg,
        FitMode::Selection,
        stream_rng(seed, 0),
    )
    .unwrap()
}

fn ig_cdf(shape: f64, scale: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x <= 0.0 {
            0.0
        } else {
            gamma_ur(shape, scale / x)
        }
    }
}

fn small_panel_with_dropout() -> DyadPanel {
    panel(
        3,
        vec![
            Some(0.1),
            Some(0.4),
            Some(-0.2),
            Some(1.0),
            None,
            None,
            Some(-0.5),
            Some(0.3),
            None,
            Some(0.7),
            Some(0.2),
            Some(0.9),
        ],
        vec![
            Some(0.3),
            Some(-0.1),
            None,
            Some(0.2),
            Some(0.8),
            Some(0.5),
            Some(0.0),
            None,
            None,
            Some(-0.4),
            Some(0.6),
            Some(0.1),
        ],
    )
}

#[test]
fn draw_b_matches_closed_form_example() {
    // d_i = 2 for both, so one transition each; residuals of 3.
    let p = panel(2, vec![Some(0.0), Some(3.0)], vec![Some(0.0), Some(3.0)]);
    let mut s = sampler(&p, &fixed(PriorSpec::default()), 1);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            s.draw_b();
            s.state.effects.b[0]
        })
        .collect();
    assert!((mean(&draws) - 2.0).abs() < 0.01);
    assert!((variance(&draws) - 1.0 / 3.0).abs() < 0.01);
}

#[test]
fn draw_b_collapses_with_vanishing_prior_variance() {
    let p = panel(2, vec![Some(0.0), Some(3.0)], vec![Some(0.0), Some(3.0)]);
    let mut s = sampler(&p, &fixed(PriorSpec::default()), 2);
    s.state.measurement.tau_b2 = 1e-12;
    for _ in 0..100 {
        s.draw_b();
        assert!(s.state.effects.b[0].abs() < 1e-4);
    }
}

#[test]
fn draw_sigma2_matches_inverse_gamma_example() {
    // Two transitions for member 1 with unit residuals: IG(1.1, 1.1).
    let p = panel(3, vec![Some(0.0), Some(1.0), Some(1.0)], vec![Some(0.0); 3]);
    let mut s = sampler(&p, &fixed(PriorSpec::default()), 3);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            s.draw_sigma2(Member::First);
            s.state.measurement.members[0].sigma2
        })
        .collect();
    assert!(ks_distance(&draws, ig_cdf(1.1, 1.1)) < 0.02);
}

#[test]
fn draw_sigma2_concentrates_at_mode_with_zero_residuals() {
    let p = panel(3, vec![Some(0.0); 3], vec![Some(0.0); 3]);
    let prior = PriorSpec {
        ig_shape: 500.0,
        ig_scale: 0.1,
        ..PriorSpec::default()
    };
    let mut s = sampler(&p, &fixed(prior), 4);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            s.draw_sigma2(Member::Second);
            s.state.measurement.members[1].sigma2
        })
        .collect();
    let mode = 0.1 / 502.0;
    assert!((mean(&draws) / mode - 1.0).abs() < 0.01);
}

#[test]
fn effect_variances_match_inverse_gamma_example() {
    let p = panel(2, vec![Some(0.0); 4], vec![Some(0.0); 4]);
    let mut s = sampler(&p, &fixed(PriorSpec::default()), 5);
    s.state.effects.b = vec![1.0, 1.0];
    s.state.effects.c = vec![1.0, 1.0];
    let b: Vec<f64> = (0..100_000)
        .map(|_| {
            s.draw_tau_b2();
            s.state.measurement.tau_b2
        })
        .collect();
    let c: Vec<f64> = (0..100_000)
        .map(|_| {
            s.draw_tau_c2();
            s.state.dropout.tau_c2
        })
        .collect();
    assert!(ks_distance(&b, ig_cdf(1.1, 1.1)) < 0.02);
    assert!(ks_distance(&c, ig_cdf(1.1, 1.1)) < 0.02);
    s.state.effects.b = vec![0.0, 0.0];
    let z: Vec<f64> = (0..100_000)
        .map(|_| {
            s.draw_tau_b2();
            s.state.measurement.tau_b2
        })
        .collect();
    assert!(ks_distance(&z, ig_cdf(1.1, 0.1)) < 0.02);
}

#[test]
fn duplicate_covariate_is_reported_as_singular() {
    let j = 3;
    let n = 6;
    let mut cov = Vec::new();
    for cell in 0..n * j {
        let v = (cell as f64 * 0.37).sin();
        cov.extend([v, v]);
    }
    let y: Vec<Option<f64>> = (0..n * j).map(|c| Some((c as f64 * 1.3).cos())).collect();
    let p = DyadPanel::new(PanelData {
        dyad_ids: (0..n).map(|i| i.to_string()).collect(),
        n_times: j,
        covariate_names: [vec!["x".into(), "x_copy".into()], vec![]],
        outcomes: [
            y,
            (0..n * j).map(|c| Some((c as f64 * 2.1).sin())).collect(),
        ],
        covariates: [cov, vec![]],
    })
    .unwrap();
    let cfg = SamplerConfig {
        n_iter: 10,
        burn_in: 1,
        ..SamplerConfig::default()
    };
    match run_chain(&p, &ModelSpec::default(), &cfg) {
        Err(Error::Singular {
            member,
            column,
            with,
        }) => {
            assert_eq!(member, 1);
            assert_eq!(column, "beta_x.x_copy");
            assert_eq!(with, vec!["beta_x.x".to_string()]);
        }
        other => panic!("expected singular design, got {other:?}"),
    }
}

#[test]
fn completers_need_no_augmentation() {
    let p = panel(
        3,
        vec![Some(0.1), Some(0.2), Some(0.3)],
        vec![Some(0.5), Some(0.4), Some(0.2)],
    );
    let mut s = sampler(&p, &fixed(PriorSpec::default()), 6);
    let before = s.state.outcomes.clone();
    for _ in 0..20 {
        s.augment_missing();
    }
    assert_eq!(s.state.outcomes, before);
    assert_eq!(s.aug_counter.proposed, 0);
}

#[test]
fn zero_phi_accepts_every_augmentation_proposal() {
    let p = small_panel_with_dropout();
    let mut s = sampler(&p, &fixed(PriorSpec::default()), 7);
    s.state.dropout.members[0].xi = 0.7;
    s.state.dropout.members[1].delta[0] = -0.4;
    for _ in 0..2000 {
        s.augment_missing();
    }
    assert!(s.aug_counter.proposed > 0);
    assert_eq!(s.aug_counter.rate(), 1.0);
}

#[test]
fn tiny_block_proposal_is_almost_always_accepted() {
    let p = small_panel_with_dropout();
    let mut cfg = fixed(PriorSpec::default());
    cfg.adaptation.initial_block_sd = 1e-9;
    let mut s = sampler(&p, &cfg, 8);
    for _ in 0..2000 {
        s.draw_dropout_params(Member::First);
    }
    assert!(s.block_counter[0].rate() > 0.99);
}

#[test]
fn informative_phi_prior_dominates_without_signal() {
    // All outcomes zero, so the current-outcome term never moves the hazard.
    let p = panel(
        3,
        vec![Some(0.0), Some(0.0), None, Some(0.0), Some(0.0), Some(0.0)],
        vec![Some(0.0); 6],
    );
    let prior = PriorSpec {
        phi_prior: Some(NormalPrior {
            mean: 1.7,
            variance: 0.01,
        }),
        dropout_coef_prior: Some(NormalPrior {
            mean: 0.0,
            variance: 4.0,
        }),
        ..PriorSpec::default()
    };
    let mut cfg = fixed(prior);
    cfg.adaptation.initial_block_sd = 0.15;
    let mut s = sampler(&p, &cfg, 9);
    let mut phi = Vec::new();
    for it in 0..40_000 {
        s.state.outcomes.set(Member::First, 0, 3, 0.0);
        s.draw_dropout_params(Member::First);
        if it >= 2000 {
            phi.push(s.state.dropout.members[0].phi);
        }
    }
    assert!((mean(&phi) - 1.7).abs() < 0.05, "mean {}", mean(&phi));
}

#[test]
fn dropout_effect_follows_prior_when_hazards_vanish() {
    let p = panel(3, vec![Some(0.1); 3], vec![Some(0.2); 3]);
    let mut cfg = fixed(PriorSpec::default());
    cfg.adaptation.initial_c_sd = 2.0;
    let mut s = sampler(&p, &cfg, 10);
    for m in &mut s.state.dropout.members {
        m.xi = -60.0;
    }
    s.state.dropout.tau_c2 = 0.5;
    let draws: Vec<f64> = (0..50_000)
        .map(|_| {
            s.draw_c();
            s.state.effects.c[0]
        })
        .collect();
    assert!(mean(&draws).abs() < 0.03);
    assert!((variance(&draws) / 0.5 - 1.0).abs() < 0.06);

    let mut cfg = fixed(PriorSpec::default());
    cfg.adaptation.initial_c_sd = 1e-4;
    let mut s = sampler(&p, &cfg, 11);
    s.state.dropout.tau_c2 = 1e-10;
    s.state.effects.c[0] = 0.01;
    for _ in 0..2000 {
        s.draw_c();
    }
    assert!(s.state.effects.c[0].abs() < 1e-3);
}

#[test]
fn fast_joint_loglik_agrees_with_model_density() {
    let p = small_panel_with_dropout();
    let cfg = SamplerConfig {
        n_iter: 60,
        burn_in: 10,
        ..SamplerConfig::default()
    };
    let mut s = sampler(&p, &cfg, 11);
    for _ in 0..50 {
        s.sweep().unwrap();
    }
    let st = &s.state;
    let reference =
        joint_loglik(&p, &st.outcomes, &st.measurement, &st.dropout, &st.effects).unwrap();
    assert!((s.joint_loglik() - reference).abs() < 1e-9 * reference.abs().max(1.0));
}

#[test]
fn same_seed_gives_identical_draws() {
    let p = small_panel_with_dropout();
    let cfg = SamplerConfig {
        n_iter: 300,
        burn_in: 100,
        seed: 42,
        ..SamplerConfig::default()
    };
    let a = run_chain(&p, &ModelSpec::default(), &cfg);
    let b = run_chain(&p, &ModelSpec::default(), &cfg);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            assert_eq!(a.draws, b.draws);
            assert_eq!(a.loglik_trace, b.loglik_trace);
        }
        (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
        _ => panic!("runs disagree"),
    }
}

#[test]
fn retained_draws_and_summaries_are_consistent() {
    let p = small_panel_with_dropout();
    let prior = PriorSpec {
        coef_prior: Some(NormalPrior {
            mean: 0.0,
            variance: 1.0,
        }),
        dropout_coef_prior: Some(NormalPrior {
            mean: 0.0,
            variance: 1.0,
        }),
        ..PriorSpec::default()
    };
    let cfg = SamplerConfig {
        n_iter: 1000,
        burn_in: 200,
        thin: 3,
        prior,
        ..SamplerConfig::default()
    };
    let out = run_chain(&p, &ModelSpec::default(), &cfg).unwrap();
    assert_eq!(out.draws.len(), cfg.n_retained());
    assert_eq!(out.loglik_trace.len(), out.draws.len());
    assert_eq!(out.names.len(), out.summaries.len());
    for s in &out.summaries {
        assert!(s.q025 <= s.mean.max(s.q025) && s.q025 <= s.q975);
    }
    for r in out.acceptance.values() {
        assert!((0.0..=1.0).contains(r));
    }
    assert!(out.names.contains(&"drop.k2.phi".to_string()));
    assert!(out.names.contains(&"meas.tau_b2".to_string()));
}

#[test]
fn higher_order_models_are_rejected() {
    let p = small_panel_with_dropout();
    let model = ModelSpec {
        order: 2,
        hazard: HazardSpec::default(),
    };
    let cfg = SamplerConfig {
        n_iter: 10,
        burn_in: 1,
        ..SamplerConfig::default()
    };
    assert!(matches!(
        run_chain(&p, &model, &cfg),
        Err(Error::UnsupportedOrder(2))
    ));
}

#[test]
fn divergence_aborts_with_iteration_and_block() {
    let p = small_panel_with_dropout();
    let cfg = SamplerConfig {
        n_iter: 10,
        burn_in: 1,
        divergence_bound: 1e-9,
        ..SamplerConfig::default()
    };
    match run_chain(&p, &ModelSpec::default(), &cfg) {
        Err(Error::Divergence {
            iteration, block, ..
        }) => {
            assert_eq!(iteration, 0);
            assert_eq!(block, "eta.k1");
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn initial_state_carries_last_observation_forward() {
    let p = small_panel_with_dropout();
    let s = sampler(&p, &fixed(PriorSpec::default()), 12);
    assert_eq!(s.state.outcomes.get(Member::First, 1, 2), 1.0);
    assert_eq!(s.state.outcomes.get(Member::First, 1, 3), 1.0);
    assert_eq!(s.state.outcomes.get(Member::Second, 2, 2), 0.0);
    let _ = CompletedOutcomes::from_panel(&p);
}
