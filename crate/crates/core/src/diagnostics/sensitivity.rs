//! Refits under alternative priors: informative priors centred on a grid
//! of values for the current-outcome hazard coefficients, and alternative
//! inverse-gamma hyperparameters for the variance components.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{run_chain, ChainOutput, SamplerConfig};
use crate::model::{DyadPanel, ModelSpec, NormalPrior};

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityGrid {
    pub phi_means: Vec<f64>,
    pub phi_prior_variance: f64,
    /// `(a, b)` pairs for the inverse-gamma priors.
    pub ig_settings: Vec<(f64, f64)>,
}

impl Default for SensitivityGrid {
    fn default() -> Self {
        SensitivityGrid {
            phi_means: (0..=12).map(|i| -3.0 + 0.5 * i as f64).collect(),
            phi_prior_variance: 0.01,
            ig_settings: vec![(0.01, 0.01), (1.0, 1.0), (5.0, 5.0)],
        }
    }
}

impl SensitivityGrid {
    pub fn validate(&self) -> Result<()> {
        if self.phi_means.is_empty() || self.ig_settings.is_empty() {
            return Err(Error::Config("sensitivity grids must be non-empty".into()));
        }
        if !(self.phi_prior_variance > 0.0) {
            return Err(Error::Config("phi prior variance must be positive".into()));
        }
        if self.ig_settings.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0)) {
            return Err(Error::Config(
                "inverse-gamma settings must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Posterior summary of one parameter at one prior setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    /// Prior setting label, e.g. `phi_mean=-1.5` or `a=1,b=1`.
    pub setting: String,
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub mcse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    pub settings: Vec<String>,
    pub rows: Vec<SensitivityRow>,
    /// Settings whose fit failed, with the reason.
    pub failures: Vec<(String, String)>,
}

impl SensitivityTable {
    fn from_fits(fits: Vec<(String, Result<ChainOutput>)>) -> SensitivityTable {
        let mut table = SensitivityTable {
            settings: Vec::new(),
            rows: Vec::new(),
            failures: Vec::new(),
        };
        for (label, fit) in fits {
            table.settings.push(label.clone());
            match fit {
                Ok(out) => {
                    for (name, s) in out.names.iter().zip(&out.summaries) {
                        table.rows.push(SensitivityRow {
                            setting: label.clone(),
                            parameter: name.clone(),
                            mean: s.mean,
                            sd: s.sd,
                            q025: s.q025,
                            q975: s.q975,
                            mcse: s.mcse,
                        });
                    }
                }
                Err(e) => table.failures.push((label, e.to_string())),
            }
        }
        table
    }

    pub fn get(&self, setting: &str, parameter: &str) -> Option<&SensitivityRow> {
        self.rows
            .iter()
            .find(|r| r.setting == setting && r.parameter == parameter)
    }

    pub fn parameters(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.parameter) {
                out.push(r.parameter.clone());
            }
        }
        out
    }

    /// One row per (setting, parameter).
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per setting with mean and interval columns per parameter.
    pub fn write_wide_csv<W: Write>(&self, out: W) -> Result<()> {
        let params = self.parameters();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["setting".to_string()];
        for p in &params {
            header.push(format!("{p}.mean"));
            header.push(format!("{p}.q025"));
            header.push(format!("{p}.q975"));
        }
        w.write_record(&header)?;
        for s in &self.settings {
            if self.failures.iter().any(|(f, _)| f == s) {
                continue;
            }
            let mut rec = vec![s.clone()];
            for p in &params {
                let r = self
                    .get(s, p)
                    .expect("every successful fit has every parameter");
                rec.extend([r.mean, r.q025, r.q975].map(|v| format!("{v:e}")));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn phi_label(m: f64) -> String {
    format!("phi_mean={m}")
}

pub fn ig_label(a: f64, b: f64) -> String {
    format!("a={a},b={b}")
}

/// One fit per grid value `m` with `N(m, v)` priors on both members'
/// current-outcome coefficients. Every point reuses the configured random
/// stream, so repeated grid values give identical rows.
pub fn sensitivity_sweep(
    panel: &DyadPanel,
    model: &ModelSpec,
    grid: &SensitivityGrid,
    config: &SamplerConfig,
) -> Result<SensitivityTable> {
    grid.validate()?;
    config.validate()?;
    if !model.hazard.current_outcome {
        return Err(Error::Config(
            "the phi sweep needs a hazard with a current-outcome term".into(),
        ));
    }
    let fits = grid
        .phi_means
        .par_iter()
        .map(|&m| {
            let mut cfg = config.clone();
            cfg.prior.phi_prior = Some(NormalPrior {
                mean: m,
                variance: grid.phi_prior_variance,
            });
            (phi_label(m), run_chain(panel, model, &cfg))
        })
        .collect();
    Ok(SensitivityTable::from_fits(fits))
}

/// One fit per inverse-gamma setting `(a, b)`, applied to all four
/// variance components.
pub fn ig_prior_sensitivity(
    panel: &DyadPanel,
    model: &ModelSpec,
    settings: &[(f64, f64)],
    config: &SamplerConfig,
) -> Result<SensitivityTable> {
    SensitivityGrid {
        ig_settings: settings.to_vec(),
        ..SensitivityGrid::default()
    }
    .validate()?;
    config.validate()?;
    let fits = settings
        .par_iter()
        .map(|&(a, b)| {
            let mut cfg = config.clone();
            cfg.prior.ig_shape = a;
            cfg.prior.ig_scale = b;
            (ig_label(a, b), run_chain(panel, model, &cfg))
        })
        .collect();
    Ok(SensitivityTable::from_fits(fits))
}

/// Largest change between adjacent grid points of any listed parameter's
/// posterior mean, in units of the larger of the two posterior SDs.
pub fn max_adjacent_jump(table: &SensitivityTable, parameters: &[String]) -> f64 {
    let mut worst: f64 = 0.0;
    for w in table.settings.windows(2) {
        for p in parameters {
            if let (Some(a), Some(b)) = (table.get(&w[0], p), table.get(&w[1], p)) {
                worst = worst.max((a.mean - b.mean).abs() / a.sd.max(b.sd));
            }
        }
    }
    worst
}

/// Largest pairwise difference of posterior means across settings, in
/// units of the combined Monte Carlo standard error.
pub fn max_mcse_discrepancy(table: &SensitivityTable, parameters: &[String]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, s) in table.settings.iter().enumerate() {
        for t in &table.settings[i + 1..] {
            for p in parameters {
                if let (Some(a), Some(b)) = (table.get(s, p), table.get(t, p)) {
                    let se = (a.mcse.powi(2) + b.mcse.powi(2)).sqrt();
                    worst = worst.max((a.mean - b.mean).abs() / se);
                }
            }
        }
    }
    worst
}
