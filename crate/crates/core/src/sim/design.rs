use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::generate::{simulate, SimulatedData, Skeleton};
use crate::error::{Error, Result};
use crate::model::{
    DropoutParams, HazardSpec, LagTransform, MeasurementParams, MemberDropout, MemberMeasurement,
};
use crate::rng::{replicate_stream, stream_rng};
use crate::stats::std_normal;

/// Stream tag for data generation; fits use tags from 1 upwards.
pub const DATA_TAG: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Dropout depends on the current (possibly unobserved) outcome.
    A,
    /// Dropout depends on the squared previous outcome only (MAR).
    B,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A => "A",
            Variant::B => "B",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            _ => Err(Error::Config(format!(
                "unknown simulation variant '{s}' (expected A or B)"
            ))),
        }
    }
}

/// Generating parameters of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub variant: Variant,
    pub n_dyads: usize,
    pub n_times: usize,
    pub n_replicates: usize,
    pub seed: u64,
    /// Mean of the wave-1 outcome per member; both have unit variance.
    pub baseline_means: [f64; 2],
    pub measurement: MeasurementParams,
    pub dropout: DropoutParams,
}

impl SimDesign {
    pub fn new(variant: Variant) -> SimDesign {
        let member = |beta: f64, gamma: f64| MemberMeasurement {
            alpha: 0.0,
            beta: vec![beta],
            gamma: vec![gamma],
            beta_x: vec![1.0],
            gamma_x: vec![1.0],
            sigma2: 1.0,
        };
        let measurement = MeasurementParams {
            members: [member(0.5, 0.5), member(0.6, 0.6)],
            tau_b2: 1.0,
        };
        let (baseline_means, hazard, coef) = match variant {
            Variant::A => (
                [5.0, 7.0],
                HazardSpec::default(),
                MemberDropout {
                    xi: 6.0,
                    psi: vec![],
                    delta: vec![-0.5],
                    phi: -1.0,
                },
            ),
            Variant::B => (
                [3.0, 3.0],
                HazardSpec {
                    lag_transform: LagTransform::Square,
                    current_outcome: false,
                    ..HazardSpec::default()
                },
                MemberDropout {
                    xi: -15.0,
                    psi: vec![],
                    delta: vec![1.0],
                    phi: 0.0,
                },
            ),
        };
        SimDesign {
            variant,
            n_dyads: 200,
            n_times: 3,
            n_replicates: 100,
            seed: 20_110_401,
            baseline_means,
            measurement,
            dropout: DropoutParams {
                members: [coef.clone(), coef],
                tau_c2: 1.0,
                hazard,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times < 2 {
            return Err(Error::Config("a simulation needs at least 2 waves".into()));
        }
        self.measurement.validate()?;
        self.dropout.validate()
    }

    /// Draws baseline outcomes and a time-invariant standard normal
    /// covariate `x` per subject.
    pub fn skeleton(&self, rng: &mut crate::rng::SimRng) -> Skeleton {
        let n = self.n_dyads;
        let j = self.n_times;
        let mut baseline = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut covariates = [Vec::with_capacity(n * j), Vec::with_capacity(n * j)];
        for _ in 0..n {
            for k in 0..2 {
                baseline[k].push(self.baseline_means[k] + std_normal(rng));
                let x = std_normal(rng);
                covariates[k].extend(std::iter::repeat_n(x, j));
            }
        }
        Skeleton {
            dyad_ids: (1..=n).map(|i| format!("d{i:04}")).collect(),
            n_times: j,
            covariate_names: [vec!["x".into()], vec!["x".into()]],
            covariates,
            baseline,
        }
    }
}

/// Generates replicate `replicate` of the design. The result depends only
/// on the design and the replicate index.
pub fn generate_dataset(design: &SimDesign, replicate: u64) -> SimulatedData {
    let mut rng = stream_rng(design.seed, replicate_stream(replicate, DATA_TAG));
    let skeleton = design.skeleton(&mut rng);
    simulate(&skeleton, &design.measurement, &design.dropout, &mut rng)
}
