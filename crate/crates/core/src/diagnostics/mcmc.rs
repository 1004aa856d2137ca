//! Single-chain convergence and efficiency diagnostics.

use crate::stats::{mean, variance};

fn autocovariance(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    xs[..n - lag]
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Effective sample size with the initial monotone sequence estimator of the
/// integrated autocorrelation time. A constant chain reports its length.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(xs);
    let g0 = autocovariance(xs, m, 0);
    if !(g0 > 0.0) {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocovariance(xs, m, lag) + autocovariance(xs, m, lag + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        lag += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / (n as f64).log10());
    n as f64 / tau
}

/// Monte Carlo standard error of the chain mean.
pub fn mcse(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let v = variance(xs);
    if !(v > 0.0) {
        return 0.0;
    }
    (v / effective_sample_size(xs)).sqrt()
}

/// Geweke's convergence z-score comparing the first 10% of the chain with
/// the last 50%, each mean's variance from its own effective sample size.
pub fn geweke_z(xs: &[f64]) -> f64 {
    let n = xs.len();
    let a = &xs[..(n / 10).max(1)];
    let b = &xs[n - (n / 2).max(1)..];
    let diff = mean(a) - mean(b);
    let se2 = mcse(a).powi(2) + mcse(b).powi(2);
    if diff == 0.0 {
        0.0
    } else if se2 > 0.0 {
        diff / se2.sqrt()
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::std_normal;

    #[test]
    fn iid_normal_ess_is_near_length() {
        let mut rng = stream_rng(11, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| std_normal(&mut rng)).collect();
        let ess = effective_sample_size(&xs);
        assert!((ess / 1e4 - 1.0).abs() < 0.15, "ess {ess}");
    }

    #[test]
    fn ar1_ess_matches_closed_form() {
        let rho = 0.9;
        let mut rng = stream_rng(12, 0);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            x = rho * x + (1.0f64 - rho * rho).sqrt() * std_normal(&mut rng);
            xs.push(x);
        }
        let expect = n as f64 * (1.0 - rho) / (1.0 + rho);
        let ess = effective_sample_size(&xs);
        assert!((ess / expect - 1.0).abs() < 0.25, "ess {ess} vs {expect}");
    }

    #[test]
    fn constant_chain() {
        let xs = vec![2.5; 500];
        assert_eq!(effective_sample_size(&xs), 500.0);
        assert_eq!(geweke_z(&xs), 0.0);
        assert_eq!(mcse(&xs), 0.0);
    }

    #[test]
    fn geweke_flags_a_shifted_start() {
        let mut rng = stream_rng(13, 0);
        let mut xs: Vec<f64> = (0..2000).map(|_| std_normal(&mut rng)).collect();
        assert!(geweke_z(&xs).abs() < 4.0);
        for x in &mut xs[..200] {
            *x += 3.0;
        }
        assert!(geweke_z(&xs) > 6.0);
    }
}
