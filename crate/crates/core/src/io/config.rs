//! JSON run configuration. Every section is optional; unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{AdaptationConfig, SamplerConfig};
use crate::model::{
    DyadPanel, HazardForm, HazardSpec, LagTransform, Member, ModelSpec, NormalPrior, PriorSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub q: usize,
    pub hazard_form: HazardForm,
    pub lag_transform: LagTransform,
    pub current_outcome: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let h = HazardSpec::default();
        ModelSection {
            q: 1,
            hazard_form: h.form,
            lag_transform: h.lag_transform,
            current_outcome: h.current_outcome,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub a: f64,
    pub b: f64,
    pub phi_prior: Option<NormalPrior>,
    pub coef_prior: Option<NormalPrior>,
    pub dropout_coef_prior: Option<NormalPrior>,
}

impl Default for PriorSection {
    fn default() -> Self {
        let p = PriorSpec::default();
        PriorSection {
            a: p.ig_shape,
            b: p.ig_scale,
            phi_prior: None,
            coef_prior: None,
            dropout_coef_prior: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adaptation: AdaptationConfig,
    pub divergence_bound: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerConfig::default();
        SamplerSection {
            n_iter: s.n_iter,
            burn_in: s.burn_in,
            thin: s.thin,
            seed: s.seed,
            adaptation: s.adaptation,
            divergence_bound: s.divergence_bound,
        }
    }
}

/// Covariate column names per member role. `None` keeps every column for
/// measurement covariates and none for dropout covariates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoleColumns {
    pub member1: Option<Vec<String>>,
    pub member2: Option<Vec<String>>,
}

impl RoleColumns {
    fn get(&self, m: Member) -> Option<&Vec<String>> {
        match m {
            Member::First => self.member1.as_ref(),
            Member::Second => self.member2.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub priors: PriorSection,
    pub sampler: SamplerSection,
    pub covariates: RoleColumns,
    pub dropout_covariates: RoleColumns,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid run configuration: {e}")))?;
        cfg.sampler_config()?.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn prior(&self) -> PriorSpec {
        PriorSpec {
            ig_shape: self.priors.a,
            ig_scale: self.priors.b,
            phi_prior: self.priors.phi_prior,
            coef_prior: self.priors.coef_prior,
            dropout_coef_prior: self.priors.dropout_coef_prior,
        }
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let s = &self.sampler;
        let cfg = SamplerConfig {
            n_iter: s.n_iter,
            burn_in: s.burn_in,
            thin: s.thin,
            seed: s.seed,
            stream: 0,
            prior: self.prior(),
            adaptation: s.adaptation.clone(),
            divergence_bound: s.divergence_bound,
            fault: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Selects the configured covariate columns and builds the model. Dropout
    /// covariates must be among the member's measurement covariates.
    pub fn resolve(&self, panel: &DyadPanel) -> Result<(DyadPanel, ModelSpec)> {
        if self.model.q != 1 {
            return Err(Error::UnsupportedOrder(self.model.q));
        }
        let chosen: [Vec<String>; 2] = Member::BOTH.map(|m| {
            self.covariates
                .get(m)
                .cloned()
                .unwrap_or_else(|| panel.covariate_names(m).to_vec())
        });
        let selected = panel.select_covariates([&chosen[0], &chosen[1]])?;
        let mut hazard_cols = [Vec::new(), Vec::new()];
        for m in Member::BOTH {
            if let Some(names) = self.dropout_covariates.get(m) {
                for name in names {
                    let idx = chosen[m.index()].iter().position(|c| c == name).ok_or_else(|| {
                        Error::Config(format!(
                            "dropout covariate '{name}' for member {} is not one of its measurement covariates",
                            m.number()
                        ))
                    })?;
                    hazard_cols[m.index()].push(idx);
                }
            }
        }
        let model = ModelSpec {
            order: self.model.q,
            hazard: HazardSpec {
                form: self.model.hazard_form,
                lag_transform: self.model.lag_transform,
                current_outcome: self.model.current_outcome,
                covariates: hazard_cols,
            },
        };
        Ok((selected, model))
    }
}
