use dyadmnar::diagnostics::{sensitivity_sweep, SensitivityGrid};
use dyadmnar::gibbs::run_measurement_only;
use dyadmnar::model::{CompletedOutcomes, NormalPrior, OutcomeSource};
use dyadmnar::sim::{
    fit_available_case, fit_complete_case, generate_dataset, run_replicates, Method, SimDesign,
    Variant,
};
use dyadmnar::{run_chain, Error, Member, ModelSpec, SamplerConfig};
use proptest::prelude::*;

fn quick(n_iter: usize) -> SamplerConfig {
    SamplerConfig {
        n_iter,
        burn_in: n_iter / 5,
        seed: 99,
        ..SamplerConfig::default()
    }
}

#[test]
fn recovers_simulation_a_coefficients() {
    let d = SimDesign::new(Variant::A);
    let data = generate_dataset(&d, 0);
    assert!(data.panel.has_dropout());
    let out = run_chain(&data.panel, &ModelSpec::default(), &quick(6000)).unwrap();
    for (name, truth) in [
        ("meas.k1.beta", 0.5),
        ("meas.k1.gamma", 0.5),
        ("meas.k1.beta_x.x", 1.0),
        ("meas.k1.gamma_x.x", 1.0),
        ("meas.k2.beta", 0.6),
        ("meas.k2.gamma", 0.6),
        ("meas.k2.beta_x.x", 1.0),
        ("meas.k2.gamma_x.x", 1.0),
    ] {
        let s = out.summary(name).unwrap();
        assert!(
            (s.mean - truth).abs() < 3.0 * s.sd,
            "{name}: mean {} sd {} truth {truth}",
            s.mean,
            s.sd
        );
    }
    let phi = out.summary("drop.k1.phi").unwrap();
    assert!(phi.q975 < 0.0, "phi interval {:?}", (phi.q025, phi.q975));
}

fn no_dropout_design() -> SimDesign {
    let mut d = SimDesign::new(Variant::A);
    d.n_dyads = 80;
    for m in &mut d.dropout.members {
        m.xi = -800.0;
    }
    d
}

#[test]
fn zero_dropout_complete_and_available_case_agree_exactly() {
    let data = generate_dataset(&no_dropout_design(), 0);
    assert!(!data.panel.has_dropout());
    let cfg = quick(1500);
    let cc = fit_complete_case(&data.panel, &cfg).unwrap();
    let ac = fit_available_case(&data.panel, &cfg).unwrap();
    assert_eq!(cc.names, ac.names);
    assert_eq!(cc.draws, ac.draws);
}

#[test]
fn selection_fit_without_missing_data_matches_measurement_model() {
    let data = generate_dataset(&no_dropout_design(), 1);
    let model = ModelSpec::default();
    let mut cfg = quick(20_000);
    cfg.prior.dropout_coef_prior = Some(NormalPrior {
        mean: 0.0,
        variance: 4.0,
    });
    let sel = run_chain(&data.panel, &model, &cfg).unwrap();
    let meas = run_measurement_only(&data.panel, &model, &cfg).unwrap();
    for (name, m) in meas.names.iter().zip(&meas.summaries) {
        let s = sel.summary(name).unwrap();
        let se = (s.mcse.powi(2) + m.mcse.powi(2)).sqrt();
        assert!(
            (s.mean - m.mean).abs() < 4.0 * se,
            "{name}: {} vs {} (se {se})",
            s.mean,
            m.mean
        );
    }
}

#[test]
fn flat_hazard_prior_without_dropout_is_flagged_as_divergent() {
    let data = generate_dataset(&no_dropout_design(), 1);
    match run_chain(&data.panel, &ModelSpec::default(), &quick(20_000)) {
        Err(Error::Divergence { block, .. }) => assert!(block.starts_with("drop.")),
        other => panic!(
            "expected divergence, got {:?}",
            other.map(|o| o.summaries.len())
        ),
    }
}

#[test]
fn saturated_hazard_drops_everyone_at_wave_two() {
    let mut d = SimDesign::new(Variant::A);
    d.n_dyads = 50;
    for m in &mut d.dropout.members {
        m.xi = 1e6;
    }
    let data = generate_dataset(&d, 0);
    for i in 0..50 {
        for m in Member::BOTH {
            assert_eq!(data.panel.dropout_time(m, i), 2);
            assert!(data.panel.outcome(m, i, 1).is_some());
            assert!(data.panel.outcome(m, i, 2).is_none());
        }
    }
}

fn small_study(n_iter: usize) -> (SimDesign, SamplerConfig) {
    let mut d = SimDesign::new(Variant::A);
    d.n_dyads = 60;
    d.n_replicates = 4;
    (d, quick(n_iter))
}

#[test]
fn replicate_report_ignores_thread_count() {
    let (d, cfg) = small_study(400);
    let methods = [
        Method::CompleteCase,
        Method::AvailableCase,
        Method::SelectionLinear,
    ];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_replicates(&d, &methods, &cfg).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.to_json().unwrap(), three.to_json().unwrap());
    assert_eq!(one.estimates, three.estimates);
    assert_eq!(one.rows.len(), 24);
}

#[test]
fn replicate_study_needs_two_replicates() {
    let (mut d, cfg) = small_study(200);
    d.n_replicates = 1;
    assert!(run_replicates(&d, &[Method::AvailableCase], &cfg).is_err());
}

#[test]
fn empty_method_list_still_reports_dropout() {
    let (d, cfg) = small_study(200);
    let report = run_replicates(&d, &[], &cfg).unwrap();
    assert!(report.rows.is_empty());
    assert_eq!(report.dropout.len(), 2);
    assert!(report.dropout[0].dyad > 0.0);
}

#[test]
fn sweep_points_do_not_depend_on_the_rest_of_the_grid() {
    let mut d = SimDesign::new(Variant::A);
    d.n_dyads = 60;
    let panel = generate_dataset(&d, 0).panel;
    let cfg = quick(600);
    let grid = |means: Vec<f64>| SensitivityGrid {
        phi_means: means,
        ..SensitivityGrid::default()
    };
    let alone = sensitivity_sweep(&panel, &ModelSpec::default(), &grid(vec![0.5]), &cfg).unwrap();
    let mixed =
        sensitivity_sweep(&panel, &ModelSpec::default(), &grid(vec![-1.0, 0.5]), &cfg).unwrap();
    for p in alone.parameters() {
        assert_eq!(alone.get("phi_mean=0.5", &p), mixed.get("phi_mean=0.5", &p));
    }
    let phi = mixed.get("phi_mean=-1", "drop.k1.phi").unwrap();
    assert!((phi.mean + 1.0).abs() < 0.3, "phi mean {}", phi.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_panels_have_monotone_dropout(seed in any::<u64>(), b in any::<bool>(), rep in 0u64..50) {
        let mut d = SimDesign::new(if b { Variant::B } else { Variant::A });
        d.n_dyads = 30;
        d.seed = seed;
        let data = generate_dataset(&d, rep);
        let p = &data.panel;
        let latent: &CompletedOutcomes = &data.latent;
        for i in 0..p.n_dyads() {
            for m in Member::BOTH {
                let dk = p.dropout_time(m, i);
                prop_assert!((2..=p.n_times() + 1).contains(&dk));
                for t in 1..=p.n_times() {
                    match p.outcome(m, i, t) {
                        Some(y) => {
                            prop_assert!(t < dk);
                            prop_assert_eq!(y, latent.get(m, i, t));
                        }
                        None => prop_assert!(t >= dk),
                    }
                }
            }
        }
    }

    #[test]
    fn datasets_depend_only_on_seed_and_replicate(seed in any::<u64>(), rep in 0u64..1000) {
        let mut d = SimDesign::new(Variant::A);
        d.n_dyads = 10;
        d.seed = seed;
        prop_assert_eq!(generate_dataset(&d, rep).panel, generate_dataset(&d, rep).panel);
    }
}
