//! Exact log densities of the measurement and dropout models.

use super::panel::{DyadPanel, Member, OutcomeSource};
use super::params::{DropoutParams, MeasurementParams, MemberDropout, RandomEffects};
use crate::error::{Error, Result};
use crate::stats::{log_hazard_pair, logistic, normal_logpdf};

fn lookup<O: OutcomeSource + ?Sized>(
    outcomes: &O,
    member: Member,
    dyad: usize,
    time: usize,
) -> Result<f64> {
    outcomes
        .outcome(member, dyad, time)
        .ok_or(Error::AugmentationIncomplete {
            member: member.number(),
            dyad,
            time,
        })
}

/// Conditional mean of `y_{k,i,t}` under the random-effects transition model.
pub fn transition_mean<O: OutcomeSource + ?Sized>(
    member: Member,
    dyad: usize,
    time: usize,
    params: &MeasurementParams,
    b_i: f64,
    panel: &DyadPanel,
    outcomes: &O,
) -> Result<f64> {
    let q = params.order();
    if time < q + 1 {
        return Err(Error::Domain(format!(
            "transition mean needs time >= q + 1 = {}, got {time}",
            q + 1
        )));
    }
    let partner = member.other();
    let coef = params.member(member);
    let mut mean = b_i + coef.alpha;
    for lag in 1..=q {
        mean += coef.beta[lag - 1] * lookup(outcomes, member, dyad, time - lag)?;
        mean += coef.gamma[lag - 1] * lookup(outcomes, partner, dyad, time - lag)?;
    }
    mean += dot(&coef.beta_x, panel.covariates(member, dyad, time));
    mean += dot(&coef.gamma_x, panel.covariates(partner, dyad, time));
    Ok(mean)
}

/// Log density of a single transition term `log N(y_{k,i,t}; mean, σ_k²)`.
pub fn transition_loglik_term<O: OutcomeSource + ?Sized>(
    member: Member,
    dyad: usize,
    time: usize,
    params: &MeasurementParams,
    b_i: f64,
    panel: &DyadPanel,
    outcomes: &O,
) -> Result<f64> {
    let s2 = params.member(member).sigma2;
    if !(s2 > 0.0) {
        return Err(Error::Domain(format!(
            "residual variance for member {} must be positive",
            member.number()
        )));
    }
    let y = lookup(outcomes, member, dyad, time)?;
    let mean = transition_mean(member, dyad, time, params, b_i, panel, outcomes)?;
    Ok(normal_logpdf(y, mean, s2))
}

/// Complete-data measurement log likelihood given the dyad intercepts.
///
/// Both members contribute transitions for `t = q+1, …, min(max(d_1, d_2), J)`;
/// baseline waves carry no likelihood. Outcomes past a member's dropout must
/// be supplied by `outcomes` (augmented values).
pub fn measurement_loglik<O: OutcomeSource + ?Sized>(
    panel: &DyadPanel,
    outcomes: &O,
    params: &MeasurementParams,
    b: &[f64],
) -> Result<f64> {
    params.validate()?;
    let q = params.order();
    let mut total = 0.0;
    for i in 0..panel.n_dyads() {
        let end = panel.last_needed_time(i);
        for m in Member::BOTH {
            for t in q + 1..=end {
                total += transition_loglik_term(m, i, t, params, b[i], panel, outcomes)?;
            }
        }
    }
    Ok(total)
}

/// Linear predictor of the logistic hazard.
///
/// `lags` holds raw lagged outcomes, lag 1 first; the hazard's lag transform
/// is applied here. `x` holds the member's hazard covariates.
pub fn hazard_linear_predictor(
    coef: &MemberDropout,
    params: &DropoutParams,
    c_i: f64,
    y_current: f64,
    lags: &[f64],
    x: &[f64],
) -> f64 {
    let g = params.hazard.lag_transform;
    let mut eta = c_i + coef.xi + dot(&coef.psi, x);
    for (d, &y) in coef.delta.iter().zip(lags) {
        eta += d * g.apply(y);
    }
    if params.hazard.current_outcome {
        eta += coef.phi * y_current;
    }
    eta
}

/// Discrete dropout hazard for `member`, saturating for extreme predictors.
pub fn hazard(
    member: Member,
    params: &DropoutParams,
    c_i: f64,
    y_current: f64,
    lags: &[f64],
    x: &[f64],
) -> f64 {
    logistic(hazard_linear_predictor(
        params.member(member),
        params,
        c_i,
        y_current,
        lags,
        x,
    ))
}

/// Lagged outcomes used by the hazard at `time`, lag 1 first. Lags before
/// the first wave are zero.
pub fn hazard_lags<O: OutcomeSource + ?Sized>(
    params: &DropoutParams,
    n_times: usize,
    outcomes: &O,
    member: Member,
    dyad: usize,
    time: usize,
) -> Result<Vec<f64>> {
    let n_lags = params.hazard.n_lags(n_times);
    (1..=n_lags)
        .map(|lag| {
            if lag >= time {
                Ok(0.0)
            } else {
                lookup(outcomes, member, dyad, time - lag)
            }
        })
        .collect()
}

pub fn hazard_covariates(
    params: &DropoutParams,
    panel: &DyadPanel,
    member: Member,
    dyad: usize,
    time: usize,
) -> Vec<f64> {
    let row = panel.covariates(member, dyad, time);
    params.hazard.covariates[member.index()]
        .iter()
        .map(|&c| row[c])
        .collect()
}

/// Linear predictor of the hazard at `(member, dyad, time)` read from the panel.
pub fn hazard_eta_at<O: OutcomeSource + ?Sized>(
    panel: &DyadPanel,
    outcomes: &O,
    params: &DropoutParams,
    c_i: f64,
    member: Member,
    dyad: usize,
    time: usize,
) -> Result<f64> {
    if time < 2 {
        return Err(Error::Domain(format!("hazard needs time >= 2, got {time}")));
    }
    let y = lookup(outcomes, member, dyad, time)?;
    let lags = hazard_lags(params, panel.n_times(), outcomes, member, dyad, time)?;
    let x = hazard_covariates(params, panel, member, dyad, time);
    Ok(hazard_linear_predictor(
        params.member(member),
        params,
        c_i,
        y,
        &lags,
        &x,
    ))
}

/// Log probability that a member drops out at wave `d` given hazards
/// `λ_2, …, λ_min(d, J)` (in that order). `d = J + 1` means completion.
pub fn dropout_logprob(d: usize, n_times: usize, hazards: &[f64]) -> Result<f64> {
    if d < 2 || d > n_times + 1 {
        return Err(Error::Domain(format!(
            "dropout time {d} outside 2..={}",
            n_times + 1
        )));
    }
    let needed = d.min(n_times) - 1;
    if hazards.len() != needed {
        return Err(Error::Domain(format!(
            "dropout time {d} needs {needed} hazards, got {}",
            hazards.len()
        )));
    }
    if let Some(h) = hazards.iter().find(|h| !(0.0..=1.0).contains(*h)) {
        return Err(Error::Domain(format!("hazard {h} outside [0, 1]")));
    }
    let survive_to = if d <= n_times { d - 2 } else { needed };
    let mut lp: f64 = hazards[..survive_to].iter().map(|h| (-h).ln_1p()).sum();
    if d <= n_times {
        lp += hazards[needed - 1].ln();
    }
    Ok(lp)
}

/// Dropout log probability of one member computed from linear predictors,
/// which stays accurate when hazards round to 0 or 1.
pub fn member_dropout_loglik<O: OutcomeSource + ?Sized>(
    panel: &DyadPanel,
    outcomes: &O,
    params: &DropoutParams,
    c_i: f64,
    member: Member,
    dyad: usize,
) -> Result<f64> {
    let d = panel.dropout_time(member, dyad);
    let last = d.min(panel.n_times());
    let mut lp = 0.0;
    for t in 2..=last {
        let eta = hazard_eta_at(panel, outcomes, params, c_i, member, dyad, t)?;
        let (log_h, log_s) = log_hazard_pair(eta);
        lp += if t == d { log_h } else { log_s };
    }
    Ok(lp)
}

/// Complete-data joint log density: measurement model, dropout model and
/// the two random-effect densities.
pub fn joint_loglik<O: OutcomeSource + ?Sized>(
    panel: &DyadPanel,
    outcomes: &O,
    measurement: &MeasurementParams,
    dropout: &DropoutParams,
    effects: &RandomEffects,
) -> Result<f64> {
    measurement.validate()?;
    dropout.validate()?;
    let mut total = measurement_loglik(panel, outcomes, measurement, &effects.b)?;
    for i in 0..panel.n_dyads() {
        for m in Member::BOTH {
            total += member_dropout_loglik(panel, outcomes, dropout, effects.c[i], m, i)?;
        }
        total += normal_logpdf(effects.b[i], 0.0, measurement.tau_b2);
        total += normal_logpdf(effects.c[i], 0.0, dropout.tau_c2);
    }
    Ok(total)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
