use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::config::SamplerConfig;
use super::layout::FitMode;
use super::sampler::{Sampler, SamplerState};
use crate::diagnostics::{effective_sample_size, mcse};
use crate::error::{Error, Result};
use crate::model::{DyadPanel, HazardForm, Member, ModelSpec};
use crate::rng::stream_rng;
use crate::stats::{mean, quantile_sorted, sorted_copy, variance};

/// Posterior summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub ess: f64,
    pub mcse: f64,
}

impl ParamSummary {
    pub fn from_draws(xs: &[f64]) -> ParamSummary {
        let sorted = sorted_copy(xs);
        let sd = if xs.len() > 1 {
            variance(xs).sqrt()
        } else {
            0.0
        };
        ParamSummary {
            mean: mean(xs),
            sd,
            q025: quantile_sorted(&sorted, 0.025),
            q975: quantile_sorted(&sorted, 0.975),
            ess: effective_sample_size(xs),
            mcse: mcse(xs),
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub names: Vec<String>,
    /// Retained draws, one row per kept iteration.
    pub draws: Vec<Vec<f64>>,
    pub summaries: Vec<ParamSummary>,
    /// Acceptance rate per Metropolis block.
    pub acceptance: BTreeMap<String, f64>,
    /// Complete-data joint log density at each retained iteration.
    pub loglik_trace: Vec<f64>,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    parameters: BTreeMap<&'a str, &'a ParamSummary>,
    acceptance: &'a BTreeMap<String, f64>,
    n_draws: usize,
}

impl ChainOutput {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.index_of(name)?;
        Some(self.draws.iter().map(|row| row[j]).collect())
    }

    pub fn summary(&self, name: &str) -> Option<&ParamSummary> {
        self.index_of(name).map(|j| &self.summaries[j])
    }

    pub fn summary_json(&self) -> Result<String> {
        let doc = SummaryDoc {
            parameters: self
                .names
                .iter()
                .map(String::as_str)
                .zip(&self.summaries)
                .collect(),
            acceptance: &self.acceptance,
            n_draws: self.draws.len(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn write_draws_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("joint_loglik".into());
        w.write_record(&header)?;
        for (r, row) in self.draws.iter().enumerate() {
            let mut rec = vec![r.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            rec.push(format!("{:e}", self.loglik_trace[r]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parameter names in the order they appear in [`ChainOutput::names`].
pub fn parameter_names(panel: &DyadPanel, model: &ModelSpec, mode: FitMode) -> Vec<String> {
    let mut names = Vec::new();
    for m in Member::BOTH {
        let k = m.number();
        for n in ["alpha", "beta", "gamma"] {
            names.push(format!("meas.k{k}.{n}"));
        }
        for c in panel.covariate_names(m) {
            names.push(format!("meas.k{k}.beta_x.{c}"));
        }
        for c in panel.covariate_names(m.other()) {
            names.push(format!("meas.k{k}.gamma_x.{c}"));
        }
        names.push(format!("meas.k{k}.sigma2"));
    }
    names.push("meas.tau_b2".into());
    if mode == FitMode::Selection {
        let h = &model.hazard;
        let n_lags = h.n_lags(panel.n_times());
        for m in Member::BOTH {
            let k = m.number();
            names.push(format!("drop.k{k}.xi"));
            for &c in &h.covariates[m.index()] {
                names.push(format!("drop.k{k}.psi.{}", panel.covariate_names(m)[c]));
            }
            if h.form == HazardForm::FullHistory {
                for l in 1..=n_lags {
                    names.push(format!("drop.k{k}.delta.lag{l}"));
                }
            } else if n_lags == 1 {
                names.push(format!("drop.k{k}.delta"));
            }
            if h.current_outcome {
                names.push(format!("drop.k{k}.phi"));
            }
        }
        names.push("drop.tau_c2".into());
    }
    names
}

pub(crate) fn flatten_state(state: &SamplerState, mode: FitMode, out: &mut Vec<f64>) {
    out.clear();
    for c in &state.measurement.members {
        out.extend(c.coefficients());
        out.push(c.sigma2);
    }
    out.push(state.measurement.tau_b2);
    if mode == FitMode::Selection {
        let with_phi = state.dropout.hazard.current_outcome;
        for c in &state.dropout.members {
            out.extend(c.coefficients(with_phi));
        }
        out.push(state.dropout.tau_c2);
    }
}

/// Runs the full selection-model sampler.
pub fn run_chain(
    panel: &DyadPanel,
    model: &ModelSpec,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    run_with_mode(panel, model, config, FitMode::Selection)
}

/// Runs the measurement model alone on rows whose outcome and lags are
/// observed. No dropout model and no augmentation.
pub fn run_measurement_only(
    panel: &DyadPanel,
    model: &ModelSpec,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    run_with_mode(panel, model, config, FitMode::MeasurementOnly)
}

pub fn run_with_mode(
    panel: &DyadPanel,
    model: &ModelSpec,
    config: &SamplerConfig,
    mode: FitMode,
) -> Result<ChainOutput> {
    if model.order != 1 {
        return Err(Error::UnsupportedOrder(model.order));
    }
    config.validate()?;
    let rng = stream_rng(config.seed, config.stream);
    let mut sampler = Sampler::new(panel, model, config, mode, rng)?;
    let names = parameter_names(panel, model, mode);
    let mut draws = Vec::with_capacity(config.n_retained());
    let mut trace = Vec::with_capacity(config.n_retained());
    let mut row = Vec::with_capacity(names.len());
    for it in 0..config.n_iter {
        sampler.sweep()?;
        if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thin) {
            flatten_state(&sampler.state, mode, &mut row);
            debug_assert_eq!(row.len(), names.len());
            draws.push(row.clone());
            trace.push(sampler.joint_loglik());
        }
    }
    let summaries = (0..names.len())
        .map(|j| {
            let col: Vec<f64> = draws.iter().map(|r: &Vec<f64>| r[j]).collect();
            ParamSummary::from_draws(&col)
        })
        .collect();
    let mut acceptance = BTreeMap::new();
    if mode == FitMode::Selection {
        acceptance.insert("augmentation".into(), sampler.aug_counter.rate());
        for m in Member::BOTH {
            acceptance.insert(
                format!("drop.k{}", m.number()),
                sampler.block_counter[m.index()].rate(),
            );
        }
        acceptance.insert("c".into(), sampler.c_counter.rate());
    }
    Ok(ChainOutput {
        names,
        draws,
        summaries,
        acceptance,
        loglik_trace: trace,
    })
}
