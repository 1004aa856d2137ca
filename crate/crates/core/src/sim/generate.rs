use rand::Rng;

use crate::model::{
    hazard_covariates, hazard_lags, hazard_linear_predictor, CompletedOutcomes, DropoutParams,
    DyadPanel, MeasurementParams, Member, PanelData, RandomEffects,
};
use crate::rng::SimRng;
use crate::stats::{logistic, std_normal};

/// Exogenous part of a panel: ids, covariates and baseline outcomes.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub dyad_ids: Vec<String>,
    pub n_times: usize,
    pub covariate_names: [Vec<String>; 2],
    /// Same layout as [`PanelData::covariates`].
    pub covariates: [Vec<f64>; 2],
    /// Wave-1 outcome per member and dyad.
    pub baseline: [Vec<f64>; 2],
}

impl Skeleton {
    pub fn n_dyads(&self) -> usize {
        self.dyad_ids.len()
    }
}

/// A simulated panel together with the latent quantities behind it.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub panel: DyadPanel,
    /// Outcomes at every wave, including those hidden by dropout.
    pub latent: CompletedOutcomes,
    pub effects: RandomEffects,
}

/// Draws random effects, outcome trajectories and dropout times from the
/// model with the given parameters.
pub fn simulate(
    skeleton: &Skeleton,
    measurement: &MeasurementParams,
    dropout: &DropoutParams,
    rng: &mut SimRng,
) -> SimulatedData {
    let n = skeleton.n_dyads();
    let j = skeleton.n_times;
    let mut effects = RandomEffects::zeros(n);
    for i in 0..n {
        effects.b[i] = measurement.tau_b2.sqrt() * std_normal(rng);
        effects.c[i] = dropout.tau_c2.sqrt() * std_normal(rng);
    }
    // Outcomes are drawn through a panel with no dropout so that the
    // covariate accessors and transition mean can be reused.
    let full = DyadPanel::new(PanelData {
        dyad_ids: skeleton.dyad_ids.clone(),
        n_times: j,
        covariate_names: skeleton.covariate_names.clone(),
        outcomes: [0, 1].map(|k| {
            (0..n * j)
                .map(|cell| {
                    Some(if cell % j == 0 {
                        skeleton.baseline[k][cell / j]
                    } else {
                        0.0
                    })
                })
                .collect()
        }),
        covariates: skeleton.covariates.clone(),
    })
    .expect("skeleton forms a valid complete panel");
    let mut latent = CompletedOutcomes::from_panel(&full);
    for i in 0..n {
        for t in 2..=j {
            for m in Member::BOTH {
                let mean = crate::model::transition_mean(
                    m,
                    i,
                    t,
                    measurement,
                    effects.b[i],
                    &full,
                    &latent,
                )
                .expect("earlier waves are filled");
                let sd = measurement.member(m).sigma2.sqrt();
                latent.set(m, i, t, mean + sd * std_normal(rng));
            }
        }
    }

    let mut outcomes = [vec![None; n * j], vec![None; n * j]];
    for i in 0..n {
        for m in Member::BOTH {
            let mut d = j + 1;
            for t in 2..=j {
                let lags = hazard_lags(dropout, j, &latent, m, i, t).expect("latent grid is full");
                let x = hazard_covariates(dropout, &full, m, i, t);
                let eta = hazard_linear_predictor(
                    dropout.member(m),
                    dropout,
                    effects.c[i],
                    latent.get(m, i, t),
                    &lags,
                    &x,
                );
                if rng.random::<f64>() < logistic(eta) {
                    d = t;
                    break;
                }
            }
            for t in 1..d {
                outcomes[m.index()][i * j + t - 1] = Some(latent.get(m, i, t));
            }
        }
    }
    let panel = DyadPanel::new(PanelData {
        dyad_ids: skeleton.dyad_ids.clone(),
        n_times: j,
        covariate_names: skeleton.covariate_names.clone(),
        outcomes,
        covariates: skeleton.covariates.clone(),
    })
    .expect("simulated dropout is monotone");
    SimulatedData {
        panel,
        latent,
        effects,
    }
}
