use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::stats::LN_2PI;

fn panel(
    y1: Vec<Option<f64>>,
    y2: Vec<Option<f64>>,
    j: usize,
    x1: Vec<f64>,
    x2: Vec<f64>,
) -> DyadPanel {
    let n = y1.len() / j;
    DyadPanel::new(PanelData {
        dyad_ids: (0..n).map(|i| format!("d{i}")).collect(),
        n_times: j,
        covariate_names: [vec!["x".into()], vec!["x".into()]],
        outcomes: [y1, y2],
        covariates: [x1, x2],
    })
    .unwrap()
}

fn sim_a_measurement() -> MeasurementParams {
    let mut m = MeasurementParams {
        members: [
            MemberMeasurement::zeros(1, 1, 1),
            MemberMeasurement::zeros(1, 1, 1),
        ],
        tau_b2: 1.0,
    };
    m.members[0].set_coefficients(&[0.0, 0.5, 0.5, 1.0, 1.0]);
    m.members[1].set_coefficients(&[0.0, 0.6, 0.6, 1.0, 1.0]);
    m
}

fn dropout_params(xi: f64, delta: f64, phi: f64, g: LagTransform) -> DropoutParams {
    let mut d = DropoutParams::zeros(
        HazardSpec {
            lag_transform: g,
            ..HazardSpec::default()
        },
        3,
    );
    for m in &mut d.members {
        m.xi = xi;
        m.delta = vec![delta];
        m.phi = phi;
    }
    d
}

#[test]
fn transition_mean_zero_model() {
    let p = panel(
        vec![Some(5.0), Some(1.0)],
        vec![Some(7.0), Some(1.0)],
        2,
        vec![0.0; 2],
        vec![0.0; 2],
    );
    let mut m = sim_a_measurement();
    for k in &mut m.members {
        k.set_coefficients(&[0.0; 5]);
    }
    let mu = transition_mean(Member::First, 0, 2, &m, 0.0, &p, &p).unwrap();
    assert_eq!(mu, 0.0);
}

#[test]
fn transition_mean_simulation_a_coefficients() {
    let m = sim_a_measurement();
    let p = panel(
        vec![Some(5.0), Some(1.0)],
        vec![Some(7.0), Some(1.0)],
        2,
        vec![0.0; 2],
        vec![0.0; 2],
    );
    assert_eq!(
        transition_mean(Member::First, 0, 2, &m, 0.0, &p, &p).unwrap(),
        6.0
    );
    let p = panel(
        vec![Some(5.0), Some(1.0)],
        vec![Some(7.0), Some(1.0)],
        2,
        vec![1.0; 2],
        vec![-1.0; 2],
    );
    assert_eq!(
        transition_mean(Member::First, 0, 2, &m, 0.0, &p, &p).unwrap(),
        6.0
    );
}

#[test]
fn transition_mean_refuses_missing_lag() {
    let m = sim_a_measurement();
    let p = panel(
        vec![Some(5.0), Some(1.0), Some(2.0)],
        vec![Some(7.0), None, None],
        3,
        vec![0.0; 3],
        vec![0.0; 3],
    );
    let err = transition_mean(Member::First, 0, 3, &m, 0.0, &p, &p).unwrap_err();
    assert!(matches!(
        err,
        Error::AugmentationIncomplete {
            member: 2,
            dyad: 0,
            time: 2
        }
    ));
    assert!(matches!(
        transition_mean(Member::First, 0, 1, &m, 0.0, &p, &p),
        Err(Error::Domain(_))
    ));
}

#[test]
fn measurement_loglik_at_mode() {
    let mut m = sim_a_measurement();
    for k in &mut m.members {
        k.set_coefficients(&[0.0; 5]);
    }
    // both transitions have zero residual
    let p = panel(
        vec![Some(5.0), Some(0.0)],
        vec![Some(7.0), Some(0.0)],
        2,
        vec![0.0; 2],
        vec![0.0; 2],
    );
    let ll = measurement_loglik(&p, &p, &m, &[0.0]).unwrap();
    assert!((ll - 2.0 * (-0.5 * LN_2PI)).abs() < 1e-14);
}

#[test]
fn single_member_term_with_unit_residual() {
    let mut m = sim_a_measurement();
    for k in &mut m.members {
        k.set_coefficients(&[0.0; 5]);
    }
    let p = panel(
        vec![Some(5.0), Some(1.0)],
        vec![Some(7.0), Some(0.0)],
        2,
        vec![0.0; 2],
        vec![0.0; 2],
    );
    let term = transition_loglik_term(Member::First, 0, 2, &m, 0.0, &p, &p).unwrap();
    assert!((term - (-0.5 * LN_2PI - 0.5)).abs() < 1e-14);
}

#[test]
fn measurement_loglik_rejects_bad_variance() {
    let mut m = sim_a_measurement();
    m.members[0].sigma2 = -1.0;
    let p = panel(
        vec![Some(5.0), Some(1.0)],
        vec![Some(7.0), Some(0.0)],
        2,
        vec![0.0; 2],
        vec![0.0; 2],
    );
    assert!(matches!(
        measurement_loglik(&p, &p, &m, &[0.0]),
        Err(Error::Domain(_))
    ));
}

/// Independent evaluator: explicit loops and the Gaussian density written out.
fn naive_measurement_loglik(
    y: &[[Vec<f64>; 2]],
    x: &[[f64; 2]],
    coef: &[[f64; 5]; 2],
    s2: [f64; 2],
    b: &[f64],
) -> f64 {
    let mut total = 0.0;
    for (i, yi) in y.iter().enumerate() {
        for k in 0..2 {
            let o = 1 - k;
            for t in 1..yi[k].len() {
                let c = coef[k];
                let mu = b[i]
                    + c[0]
                    + c[1] * yi[k][t - 1]
                    + c[2] * yi[o][t - 1]
                    + c[3] * x[i][k]
                    + c[4] * x[i][o];
                let r = yi[k][t] - mu;
                total += -0.5 * (2.0 * std::f64::consts::PI * s2[k]).ln() - r * r / (2.0 * s2[k]);
            }
        }
    }
    total
}

#[test]
fn measurement_loglik_matches_naive_loop() {
    use rand::Rng;
    let mut rng = crate::rng::stream_rng(99, 0);
    let (n, j) = (4, 3);
    let y: Vec<[Vec<f64>; 2]> = (0..n)
        .map(|_| {
            [
                (0..j).map(|_| rng.random_range(-2.0..2.0)).collect(),
                (0..j).map(|_| rng.random_range(-2.0..2.0)).collect(),
            ]
        })
        .collect();
    let x: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let coef = [[0.3, 0.5, -0.2, 1.1, 0.4], [-0.1, 0.7, 0.2, -0.5, 0.9]];
    let s2 = [0.7, 1.9];
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let flat = |k: usize| {
        y.iter()
            .flat_map(|yi| yi[k].iter().map(|&v| Some(v)))
            .collect::<Vec<_>>()
    };
    let cov = |k: usize| {
        x.iter()
            .flat_map(|xi| std::iter::repeat_n(xi[k], j))
            .collect::<Vec<_>>()
    };
    let p = panel(flat(0), flat(1), j, cov(0), cov(1));
    let mut m = sim_a_measurement();
    for k in 0..2 {
        m.members[k].set_coefficients(&coef[k]);
        m.members[k].sigma2 = s2[k];
    }
    let got = measurement_loglik(&p, &p, &m, &b).unwrap();
    let want = naive_measurement_loglik(&y, &x, &coef, s2, &b);
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
}

#[test]
fn hazard_examples() {
    let zero = dropout_params(0.0, 0.0, 0.0, LagTransform::Identity);
    assert_eq!(hazard(Member::First, &zero, 0.0, 3.0, &[2.0], &[]), 0.5);

    let a = dropout_params(-6.0, -0.5, -1.0, LagTransform::Identity);
    let h = hazard(Member::First, &a, 0.0, 5.0, &[5.0], &[]);
    let want = 1.0 / (1.0 + 13.5f64.exp());
    assert!((h - want).abs() < 1e-18);
    assert!((h - 1.37e-6).abs() < 0.01e-6);

    let b = dropout_params(-15.0, 1.0, 0.0, LagTransform::Square);
    let h = hazard(Member::Second, &b, 0.0, 100.0, &[4.0], &[]);
    assert!((h - 0.731_058_578_630_004_9).abs() < 1e-15);
}

#[test]
fn hazard_saturates_without_overflow() {
    let d = dropout_params(0.0, 0.0, 1.0, LagTransform::Identity);
    assert_eq!(hazard(Member::First, &d, 0.0, 1e308, &[0.0], &[]), 1.0);
    assert!(hazard(Member::First, &d, 0.0, -1e308, &[0.0], &[]) >= 0.0);
}

#[test]
fn dropout_logprob_examples() {
    assert_eq!(dropout_logprob(4, 3, &[0.0, 0.0]).unwrap(), 0.0);
    let h = [0.3, 0.4];
    let p2 = dropout_logprob(2, 3, &h[..1]).unwrap().exp();
    let p3 = dropout_logprob(3, 3, &h).unwrap().exp();
    let p4 = dropout_logprob(4, 3, &h).unwrap().exp();
    assert!((p2 - 0.3).abs() < 1e-15);
    assert!((p3 - 0.28).abs() < 1e-15);
    assert!((p4 - 0.42).abs() < 1e-15);
    assert!((p2 + p3 + p4 - 1.0).abs() < 1e-15);
    assert_eq!(dropout_logprob(2, 3, &[1.0]).unwrap(), 0.0);
    assert!(matches!(dropout_logprob(1, 3, &[]), Err(Error::Domain(_))));
    assert!(matches!(dropout_logprob(5, 3, &h), Err(Error::Domain(_))));
}

fn toy_state() -> (DyadPanel, MeasurementParams, DropoutParams, RandomEffects) {
    let p = panel(
        vec![Some(5.0), Some(6.5), Some(7.0)],
        vec![Some(7.0), Some(8.0), None],
        3,
        vec![0.3; 3],
        vec![-0.4; 3],
    );
    let m = sim_a_measurement();
    let d = dropout_params(-2.0, 0.1, -0.3, LagTransform::Identity);
    let e = RandomEffects {
        b: vec![0.2],
        c: vec![-0.5],
    };
    (p, m, d, e)
}

#[test]
fn joint_loglik_is_component_sum() {
    let (p, m, d, e) = toy_state();
    let mut g = CompletedOutcomes::from_panel(&p);
    g.set(Member::Second, 0, 3, 9.0);
    let joint = joint_loglik(&p, &g, &m, &d, &e).unwrap();

    let meas = measurement_loglik(&p, &g, &m, &e.b).unwrap();
    // member 1 completes: survives waves 2 and 3; member 2 drops at wave 3.
    let h = |k: Member, t: usize| hazard(k, &d, e.c[0], g.get(k, 0, t), &[g.get(k, 0, t - 1)], &[]);
    let drop1 = dropout_logprob(4, 3, &[h(Member::First, 2), h(Member::First, 3)]).unwrap();
    let drop2 = dropout_logprob(3, 3, &[h(Member::Second, 2), h(Member::Second, 3)]).unwrap();
    let re =
        crate::stats::normal_logpdf(0.2, 0.0, 1.0) + crate::stats::normal_logpdf(-0.5, 0.0, 1.0);
    assert!((joint - (meas + drop1 + drop2 + re)).abs() < 1e-10);
}

#[test]
fn joint_loglik_empty_panel_is_zero() {
    let p = panel(vec![], vec![], 3, vec![], vec![]);
    let m = sim_a_measurement();
    let d = dropout_params(0.0, 0.0, 0.0, LagTransform::Identity);
    let e = RandomEffects::zeros(0);
    assert_eq!(joint_loglik(&p, &p, &m, &d, &e).unwrap(), 0.0);
}

#[test]
fn joint_loglik_requires_augmented_values() {
    let (p, m, d, e) = toy_state();
    assert!(matches!(
        joint_loglik(&p, &p, &m, &d, &e),
        Err(Error::AugmentationIncomplete { member: 2, .. })
    ));
}

#[test]
fn perturbing_final_outcome_is_local() {
    // y_{2,3} only enters its own transition term and member 2's wave-3 hazard.
    let (p, m, d, e) = toy_state();
    let mut g = CompletedOutcomes::from_panel(&p);
    g.set(Member::Second, 0, 3, 9.0);
    let before = joint_loglik(&p, &g, &m, &d, &e).unwrap();
    let local = |g: &CompletedOutcomes| {
        transition_loglik_term(Member::Second, 0, 3, &m, e.b[0], &p, g).unwrap()
            + member_dropout_loglik(&p, g, &d, e.c[0], Member::Second, 0).unwrap()
    };
    let local_before = local(&g);
    g.set(Member::Second, 0, 3, 4.0);
    let after = joint_loglik(&p, &g, &m, &d, &e).unwrap();
    assert!(((after - before) - (local(&g) - local_before)).abs() < 1e-10);
}

proptest! {
    #[test]
    fn dropout_probabilities_sum_to_one(hs in prop::collection::vec(0.0f64..1.0, 1..6)) {
        let j = hs.len() + 1;
        let total: f64 = (2..=j + 1)
            .map(|d| dropout_logprob(d, j, &hs[..d.min(j) - 1]).unwrap().exp())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hazard_strictly_inside_unit_interval(
        xi in -10.0f64..10.0, delta in -2.0f64..2.0, phi in -2.0f64..2.0,
        c in -3.0f64..3.0, y in -5.0f64..5.0, lag in -5.0f64..5.0,
    ) {
        let d = dropout_params(xi, delta, phi, LagTransform::Identity);
        let h = hazard(Member::First, &d, c, y, &[lag], &[]);
        prop_assert!(h > 0.0 && h < 1.0);
    }

    #[test]
    fn hazard_ignores_current_outcome_when_phi_zero(
        xi in -10.0f64..10.0, delta in -2.0f64..2.0, y in -5.0f64..5.0, lag in -5.0f64..5.0,
    ) {
        let d = dropout_params(xi, delta, 0.0, LagTransform::Identity);
        let a = hazard(Member::Second, &d, 0.1, y, &[lag], &[]);
        let b = hazard(Member::Second, &d, 0.1, y + 1e-3, &[lag], &[]);
        prop_assert_eq!(a - b, 0.0);
    }

    #[test]
    fn loglik_decreases_with_residual_magnitude(r in -5.0f64..5.0, extra in 0.01f64..3.0) {
        let mut m = sim_a_measurement();
        for k in &mut m.members { k.set_coefficients(&[0.0; 5]); }
        let mk = |res: f64| panel(vec![Some(0.0), Some(res)], vec![Some(0.0), Some(0.0)], 2, vec![0.0; 2], vec![0.0; 2]);
        let a = mk(r);
        let away = if r >= 0.0 { extra } else { -extra };
        let b = mk(r + away);
        prop_assert!(measurement_loglik(&b, &b, &m, &[0.0]).unwrap() < measurement_loglik(&a, &a, &m, &[0.0]).unwrap());
    }

    #[test]
    fn joint_loglik_permutation_invariant(seed in 0u64..1000) {
        use rand::Rng;
        use rand::seq::SliceRandom;
        let mut rng = crate::rng::stream_rng(seed, 1);
        let n = 5;
        let j = 3;
        let y = |rng: &mut crate::rng::SimRng| (0..n * j).map(|_| Some(rng.random_range(-2.0..2.0))).collect::<Vec<_>>();
        let (y1, y2) = (y(&mut rng), y(&mut rng));
        let x1: Vec<f64> = (0..n * j).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x2: Vec<f64> = (0..n * j).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = panel(y1, y2, j, x1, x2);
        let m = sim_a_measurement();
        let d = dropout_params(-1.0, 0.2, 0.3, LagTransform::Identity);
        let e = RandomEffects {
            b: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            c: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let q = p.subset(&perm);
        let eq = RandomEffects {
            b: perm.iter().map(|&i| e.b[i]).collect(),
            c: perm.iter().map(|&i| e.c[i]).collect(),
        };
        let a = joint_loglik(&p, &p, &m, &d, &e).unwrap();
        let b = joint_loglik(&q, &q, &m, &d, &eq).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }
}
