use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{run_chain, run_measurement_only, ChainOutput, SamplerConfig};
use crate::model::{DyadPanel, HazardSpec, LagTransform, ModelSpec};

/// Analyses compared in the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Measurement model on dyads where both members completed follow-up.
    CompleteCase,
    /// Measurement model on every observed transition.
    AvailableCase,
    /// Selection model with a hazard linear in the previous outcome.
    SelectionLinear,
    /// Selection model with a hazard quadratic in the previous outcome.
    SelectionQuadratic,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::CompleteCase,
        Method::AvailableCase,
        Method::SelectionLinear,
        Method::SelectionQuadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CompleteCase => "complete-case",
            Method::AvailableCase => "available-case",
            Method::SelectionLinear => "selection-linear",
            Method::SelectionQuadratic => "selection-quadratic",
        }
    }

    /// Model fitted by this method, given the panel's hazard covariates.
    pub fn model(self) -> ModelSpec {
        let hazard = match self {
            Method::SelectionQuadratic => HazardSpec {
                lag_transform: LagTransform::Square,
                ..HazardSpec::default()
            },
            _ => HazardSpec::default(),
        };
        ModelSpec { order: 1, hazard }
    }

    /// Parses a comma-separated list such as `complete-case,proposed`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out: Vec<Method> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "complete-case" | "cc" => Ok(Method::CompleteCase),
            "available-case" | "ac" => Ok(Method::AvailableCase),
            "selection-linear" | "proposed" | "misspecified" => Ok(Method::SelectionLinear),
            "selection-quadratic" | "flexible" => Ok(Method::SelectionQuadratic),
            _ => Err(Error::Config(format!(
                "unknown method '{s}' (expected complete-case, available-case, \
                 selection-linear/proposed/misspecified or selection-quadratic/flexible)"
            ))),
        }
    }
}

pub fn fit_complete_case(panel: &DyadPanel, config: &SamplerConfig) -> Result<ChainOutput> {
    let completers = panel.completers();
    if completers.n_dyads() == 0 {
        return Err(Error::NoCompleters);
    }
    run_measurement_only(&completers, &ModelSpec::default(), config)
}

pub fn fit_available_case(panel: &DyadPanel, config: &SamplerConfig) -> Result<ChainOutput> {
    run_measurement_only(panel, &ModelSpec::default(), config)
}

pub fn fit_method(
    method: Method,
    panel: &DyadPanel,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    match method {
        Method::CompleteCase => fit_complete_case(panel, config),
        Method::AvailableCase => fit_available_case(panel, config),
        Method::SelectionLinear | Method::SelectionQuadratic => {
            run_chain(panel, &method.model(), config)
        }
    }
}
