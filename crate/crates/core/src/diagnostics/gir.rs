//! Joint-distribution ("getting it right") test of the whole sampler.
//!
//! The marginal-conditional simulator draws parameters from the prior and
//! data given the parameters. The successive-conditional simulator
//! alternates sampler sweeps with regenerating the data (and latent
//! quantities) from the current parameters. Both target the same joint
//! distribution, so every parameter's moments must agree.

use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::mcmc::mcse;
use crate::error::{Error, Result};
use crate::gibbs::{
    flatten_state, parameter_names, AdaptationConfig, FaultInjection, FitMode, Sampler,
    SamplerConfig, SamplerState,
};
use crate::model::{DropoutParams, MeasurementParams, ModelSpec, NormalPrior, PriorSpec};
use crate::rng::{stream_rng, SimRng};
use crate::sim::{simulate, SimulatedData, Skeleton};
use crate::stats::{inv_gamma, mean, std_normal};

#[derive(Debug, Clone, PartialEq)]
pub struct GirConfig {
    pub n_dyads: usize,
    pub n_times: usize,
    pub n_samples: usize,
    /// Sampler sweeps between data regenerations; 0 leaves the successive
    /// chain as a sequence of prior draws.
    pub sweeps_per_step: usize,
    pub seed: u64,
    pub prior: PriorSpec,
    pub model: ModelSpec,
    pub fault: Option<FaultInjection>,
    pub block_sd: f64,
    pub c_sd: f64,
}

impl Default for GirConfig {
    fn default() -> Self {
        GirConfig {
            n_dyads: 20,
            n_times: 3,
            n_samples: 10_000,
            sweeps_per_step: 1,
            seed: 7,
            prior: PriorSpec {
                ig_shape: 3.0,
                ig_scale: 2.0,
                phi_prior: None,
                coef_prior: Some(NormalPrior {
                    mean: 0.0,
                    variance: 0.25,
                }),
                dropout_coef_prior: Some(NormalPrior {
                    mean: -0.5,
                    variance: 0.25,
                }),
            },
            model: ModelSpec::default(),
            fault: None,
            block_sd: 0.3,
            c_sd: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GirRow {
    pub parameter: String,
    /// `mean` compares E[θ], `square` compares E[θ²].
    pub statistic: &'static str,
    pub marginal: f64,
    pub successive: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GirReport {
    pub rows: Vec<GirRow>,
}

impl GirReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

fn skeleton(cfg: &GirConfig, rng: &mut SimRng) -> Skeleton {
    let (n, j) = (cfg.n_dyads, cfg.n_times);
    let mut covariates = [Vec::new(), Vec::new()];
    let mut baseline = [Vec::new(), Vec::new()];
    for _ in 0..n {
        for k in 0..2 {
            baseline[k].push(std_normal(rng));
            for _ in 0..j {
                covariates[k].push(std_normal(rng));
            }
        }
    }
    Skeleton {
        dyad_ids: (0..n).map(|i| format!("g{i}")).collect(),
        n_times: j,
        covariate_names: [vec!["x".into()], vec!["x".into()]],
        covariates,
        baseline,
    }
}

fn draw_normal(rng: &mut SimRng, p: NormalPrior) -> f64 {
    Normal::new(p.mean, p.variance.sqrt())
        .expect("validated prior")
        .sample(rng)
}

fn prior_draw(
    cfg: &GirConfig,
    template: &SamplerState,
    rng: &mut SimRng,
) -> (MeasurementParams, DropoutParams) {
    let p = &cfg.prior;
    let coef = p.coef_prior.expect("checked proper");
    let dcoef = p.dropout_coef_prior.expect("checked proper");
    let mut meas = template.measurement.clone();
    for c in &mut meas.members {
        let eta: Vec<f64> = (0..c.n_coefficients())
            .map(|_| draw_normal(rng, coef))
            .collect();
        c.set_coefficients(&eta);
        c.sigma2 = inv_gamma(rng, p.ig_shape, p.ig_scale);
    }
    meas.tau_b2 = inv_gamma(rng, p.ig_shape, p.ig_scale);
    let mut drop = template.dropout.clone();
    let with_phi = drop.hazard.current_outcome;
    for c in &mut drop.members {
        let d = c.coefficients(with_phi).len();
        let w: Vec<f64> = (0..d)
            .map(|a| {
                let pr = if with_phi && a == d - 1 {
                    p.phi_prior.unwrap_or(dcoef)
                } else {
                    dcoef
                };
                draw_normal(rng, pr)
            })
            .collect();
        c.set_coefficients(&w, with_phi);
    }
    drop.tau_c2 = inv_gamma(rng, p.ig_shape, p.ig_scale);
    (meas, drop)
}

fn state_from(
    data: SimulatedData,
    meas: MeasurementParams,
    drop: DropoutParams,
) -> (SamplerState, crate::model::DyadPanel) {
    (
        SamplerState {
            measurement: meas,
            dropout: drop,
            effects: data.effects,
            outcomes: data.latent,
        },
        data.panel,
    )
}

pub fn getting_it_right(cfg: &GirConfig) -> Result<GirReport> {
    cfg.prior.validate()?;
    if !cfg.prior.is_proper() {
        return Err(Error::ImproperPrior(
            "the joint-distribution test needs proper priors on every coefficient".into(),
        ));
    }
    if cfg.n_samples < 2 {
        return Err(Error::Config("need at least 2 samples".into()));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let skel = skeleton(cfg, &mut rng);
    let sampler_cfg = SamplerConfig {
        prior: cfg.prior.clone(),
        adaptation: AdaptationConfig {
            enabled: false,
            initial_block_sd: cfg.block_sd,
            initial_c_sd: cfg.c_sd,
            ..AdaptationConfig::default()
        },
        fault: cfg.fault,
        ..SamplerConfig::default()
    };

    // A template state fixes parameter shapes and names.
    let first = simulate(
        &skel,
        &MeasurementParams {
            members: [0, 1].map(|_| crate::model::MemberMeasurement::zeros(1, 1, 1)),
            tau_b2: 1.0,
        },
        &DropoutParams::zeros(cfg.model.hazard.clone(), cfg.n_times),
        &mut rng,
    );
    let names = parameter_names(&first.panel, &cfg.model, FitMode::Selection);
    let template = SamplerState {
        measurement: MeasurementParams {
            members: [0, 1].map(|_| crate::model::MemberMeasurement::zeros(1, 1, 1)),
            tau_b2: 1.0,
        },
        dropout: DropoutParams::zeros(cfg.model.hazard.clone(), cfg.n_times),
        effects: first.effects.clone(),
        outcomes: first.latent.clone(),
    };

    let mut row = Vec::new();
    let mut marginal = Vec::with_capacity(cfg.n_samples);
    let mut mc_rng = stream_rng(cfg.seed, 1);
    for _ in 0..cfg.n_samples {
        let (meas, drop) = prior_draw(cfg, &template, &mut mc_rng);
        let st = SamplerState {
            measurement: meas,
            dropout: drop,
            ..template.clone()
        };
        flatten_state(&st, FitMode::Selection, &mut row);
        marginal.push(row.clone());
    }

    let mut sc_rng = stream_rng(cfg.seed, 2);
    let mut chain_rng = stream_rng(cfg.seed, 3);
    let (meas, drop) = prior_draw(cfg, &template, &mut sc_rng);
    let data = simulate(&skel, &meas, &drop, &mut sc_rng);
    let (mut state, mut panel) = state_from(data, meas, drop);
    let mut successive = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        if cfg.sweeps_per_step == 0 {
            let (meas, drop) = prior_draw(cfg, &template, &mut sc_rng);
            state.measurement = meas;
            state.dropout = drop;
        }
        let mut s = Sampler::with_state(
            &panel,
            &cfg.model,
            &sampler_cfg,
            FitMode::Selection,
            chain_rng,
            state,
        )?;
        for _ in 0..cfg.sweeps_per_step {
            s.sweep()?;
        }
        let (st, r) = s.into_parts();
        chain_rng = r;
        flatten_state(&st, FitMode::Selection, &mut row);
        successive.push(row.clone());
        let data = simulate(&skel, &st.measurement, &st.dropout, &mut sc_rng);
        (state, panel) = state_from(data, st.measurement, st.dropout);
    }

    let mut rows = Vec::new();
    for (j, name) in names.iter().enumerate() {
        for (stat, f) in [
            ("mean", (|x: f64| x) as fn(f64) -> f64),
            ("square", |x: f64| x * x),
        ] {
            let a: Vec<f64> = marginal.iter().map(|r| f(r[j])).collect();
            let b: Vec<f64> = successive.iter().map(|r| f(r[j])).collect();
            let (ma, mb) = (mean(&a), mean(&b));
            let se = (mcse(&a).powi(2) + mcse(&b).powi(2)).sqrt();
            let z = if ma == mb { 0.0 } else { (ma - mb) / se };
            rows.push(GirRow {
                parameter: name.clone(),
                statistic: stat,
                marginal: ma,
                successive: mb,
                z,
            });
        }
    }
    Ok(GirReport { rows })
}
