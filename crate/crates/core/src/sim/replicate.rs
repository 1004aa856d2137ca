use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::design::{generate_dataset, SimDesign};
use super::methods::{fit_method, Method};
use crate::error::{Error, Result};
use crate::gibbs::SamplerConfig;
use crate::model::{DyadPanel, Member};
use crate::rng::replicate_stream;
use crate::stats::{mean, variance};

/// Measurement coefficients scored against the truth, with their true values.
pub fn reported_parameters(design: &SimDesign) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for m in Member::BOTH {
        let k = m.number();
        let c = design.measurement.member(m);
        out.push((format!("meas.k{k}.beta"), c.beta[0]));
        out.push((format!("meas.k{k}.gamma"), c.gamma[0]));
        out.push((format!("meas.k{k}.beta_x.x"), c.beta_x[0]));
        out.push((format!("meas.k{k}.gamma_x.x"), c.gamma_x[0]));
    }
    out
}

/// Per-wave dropout fractions of one panel: dyads with at least one member
/// leaving at the wave, and each member separately.
pub fn dropout_fractions(panel: &DyadPanel) -> Vec<[f64; 3]> {
    let n = panel.n_dyads().max(1) as f64;
    (2..=panel.n_times())
        .map(|t| {
            let mut c = [0usize; 3];
            for i in 0..panel.n_dyads() {
                let d1 = panel.dropout_time(Member::First, i) == t;
                let d2 = panel.dropout_time(Member::Second, i) == t;
                c[0] += usize::from(d1 || d2);
                c[1] += usize::from(d1);
                c[2] += usize::from(d2);
            }
            c.map(|v| v as f64 / n)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub replicate: usize,
    pub method: String,
    pub parameter: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub parameter: String,
    pub method: String,
    pub truth: f64,
    pub bias: f64,
    /// Standard deviation of the point estimates across replicates.
    pub se: f64,
    pub coverage: f64,
    pub n_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropoutRow {
    pub wave: usize,
    pub dyad: f64,
    pub member1: f64,
    pub member2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateReport {
    pub variant: String,
    pub n_replicates: usize,
    pub rows: Vec<ReportRow>,
    pub dropout: Vec<DropoutRow>,
    /// Replicates excluded per method because the fit failed.
    pub failures: BTreeMap<String, usize>,
    pub failure_messages: Vec<String>,
    #[serde(skip)]
    pub estimates: Vec<Estimate>,
}

impl ReplicateReport {
    pub fn row(&self, method: Method, parameter: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method.name() && r.parameter == parameter)
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.method == method.name())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_dropout_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.dropout {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_estimates_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.estimates {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct ReplicateResult {
    dropout: Vec<[f64; 3]>,
    fits: Vec<std::result::Result<Vec<(f64, f64, f64)>, String>>,
}

fn method_tag(method: Method) -> u8 {
    1 + Method::ALL.iter().position(|&m| m == method).unwrap() as u8
}

fn run_one(
    design: &SimDesign,
    replicate: usize,
    methods: &[Method],
    config: &SamplerConfig,
    params: &[(String, f64)],
) -> ReplicateResult {
    let data = generate_dataset(design, replicate as u64);
    let fits = methods
        .iter()
        .map(|&method| {
            let cfg = SamplerConfig {
                stream: replicate_stream(replicate as u64, method_tag(method)),
                ..config.clone()
            };
            let out = fit_method(method, &data.panel, &cfg).map_err(|e| e.to_string())?;
            Ok(params
                .iter()
                .map(|(name, _)| {
                    let s = out.summary(name).expect("reported parameter is in the fit");
                    (s.mean, s.q025, s.q975)
                })
                .collect())
        })
        .collect();
    ReplicateResult {
        dropout: dropout_fractions(&data.panel),
        fits,
    }
}

/// Generates `design.n_replicates` datasets and fits each method to each.
/// Replicates run in parallel; every replicate and fit owns a fixed random
/// stream, so the report does not depend on scheduling.
pub fn run_replicates(
    design: &SimDesign,
    methods: &[Method],
    config: &SamplerConfig,
) -> Result<ReplicateReport> {
    design.validate()?;
    config.validate()?;
    if design.n_replicates < 2 {
        return Err(Error::Config(format!(
            "a replicate study needs R >= 2, got {}",
            design.n_replicates
        )));
    }
    let params = reported_parameters(design);
    let results: Vec<ReplicateResult> = (0..design.n_replicates)
        .into_par_iter()
        .map(|r| run_one(design, r, methods, config, &params))
        .collect();

    let n_waves = design.n_times - 1;
    let dropout = (0..n_waves)
        .map(|w| {
            let avg = |c: usize| mean(&results.iter().map(|r| r.dropout[w][c]).collect::<Vec<_>>());
            DropoutRow {
                wave: w + 2,
                dyad: avg(0),
                member1: avg(1),
                member2: avg(2),
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = BTreeMap::new();
    let mut failure_messages = Vec::new();
    let mut estimates = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        let mut n_failed = 0;
        for (r, res) in results.iter().enumerate() {
            match &res.fits[mi] {
                Ok(v) => {
                    for ((name, _), &(est, lo, hi)) in params.iter().zip(v) {
                        estimates.push(Estimate {
                            replicate: r,
                            method: method.name().into(),
                            parameter: name.clone(),
                            estimate: est,
                            lower: lo,
                            upper: hi,
                        });
                    }
                }
                Err(msg) => {
                    n_failed += 1;
                    failure_messages.push(format!("replicate {r}, {method}: {msg}"));
                }
            }
        }
        failures.insert(method.name().to_string(), n_failed);
        for (pi, (name, truth)) in params.iter().enumerate() {
            let ok: Vec<(f64, f64, f64)> = results
                .iter()
                .filter_map(|r| r.fits[mi].as_ref().ok().map(|v| v[pi]))
                .collect();
            let est: Vec<f64> = ok.iter().map(|e| e.0).collect();
            let hits = ok.iter().filter(|e| e.1 <= *truth && *truth <= e.2).count();
            rows.push(ReportRow {
                parameter: name.clone(),
                method: method.name().into(),
                truth: *truth,
                bias: mean(&est) - truth,
                se: if est.len() > 1 {
                    variance(&est).sqrt()
                } else {
                    f64::NAN
                },
                coverage: if ok.is_empty() {
                    f64::NAN
                } else {
                    hits as f64 / ok.len() as f64
                },
                n_ok: ok.len(),
            });
        }
    }
    Ok(ReplicateReport {
        variant: design.variant.to_string(),
        n_replicates: design.n_replicates,
        rows,
        dropout,
        failures,
        failure_messages,
        estimates,
    })
}
