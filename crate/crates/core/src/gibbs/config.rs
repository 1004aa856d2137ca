use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PriorSpec;

/// Metropolis proposal tuning. Adaptation runs during burn-in only; the
/// post-burn-in kernel is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationConfig {
    pub enabled: bool,
    /// Iterations between refreshes of the hazard-block proposal covariance.
    pub interval: usize,
    /// Target acceptance for the hazard-coefficient blocks.
    pub block_target: f64,
    /// Target acceptance for the scalar dropout effects `c_i`.
    pub scalar_target: f64,
    /// Proposal standard deviation per hazard coefficient when not adapting.
    pub initial_block_sd: f64,
    /// Proposal standard deviation for each `c_i` before adaptation.
    pub initial_c_sd: f64,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            enabled: true,
            interval: 50,
            block_target: 0.234,
            scalar_target: 0.44,
            initial_block_sd: 0.1,
            initial_c_sd: 1.0,
        }
    }
}

/// Deliberate sampler defects, used to show that the correctness harness
/// detects a broken kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultInjection {
    /// Residual-variance update uses shape `a + N/2 + 1`.
    SigmaShapeOffByOne,
    /// Augmented dropout-time outcomes ignore the hazard factor.
    DropHazardFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Stream id within `seed`; replicates and grid points use distinct streams.
    pub stream: u64,
    pub prior: PriorSpec,
    pub adaptation: AdaptationConfig,
    /// Abort when any regression or hazard coefficient exceeds this magnitude.
    pub divergence_bound: f64,
    pub fault: Option<FaultInjection>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_iter: 11_000,
            burn_in: 1_000,
            thin: 1,
            seed: 1,
            stream: 0,
            prior: PriorSpec::default(),
            adaptation: AdaptationConfig::default(),
            divergence_bound: 1e4,
            fault: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.adaptation.interval == 0 {
            return Err(Error::Config("adaptation interval must be positive".into()));
        }
        self.prior.validate()
    }

    pub fn n_retained(&self) -> usize {
        (self.n_iter - self.burn_in).div_ceil(self.thin)
    }
}
