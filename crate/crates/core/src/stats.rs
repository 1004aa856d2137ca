//! Small numeric helpers shared by the sampler and the diagnostics.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Linear predictors are clamped to this magnitude before exponentiating.
pub const ETA_SATURATION: f64 = 700.0;

pub fn logistic(eta: f64) -> f64 {
    let eta = eta.clamp(-ETA_SATURATION, ETA_SATURATION);
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(ln λ, ln(1 - λ))` for `λ = logistic(eta)`, accurate in both tails.
pub fn log_hazard_pair(eta: f64) -> (f64, f64) {
    let eta = eta.clamp(-ETA_SATURATION, ETA_SATURATION);
    (-softplus(-eta), -softplus(eta))
}

pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + var.ln() + r * r / var)
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draw from an inverse gamma with the given shape and scale
/// (density ∝ x^(-shape-1) exp(-scale / x)).
pub fn inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / scale).expect("inverse gamma parameters must be positive");
    1.0 / g.sample(rng)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n-1 denominator.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Quantile of already sorted data, linear interpolation between order
/// statistics (the "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let sorted = sorted_copy(sample);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn logistic_is_symmetric_and_saturates() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(2.0) + logistic(-2.0) - 1.0).abs() < 1e-15);
        assert_eq!(logistic(1e6), 1.0);
        assert!(logistic(-1e6) > 0.0);
        assert!(logistic(f64::INFINITY).is_finite());
    }

    #[test]
    fn log_hazard_pair_tails() {
        let (l, s) = log_hazard_pair(-40.0);
        assert!((s - (-(-40f64).exp())).abs() < 1e-25);
        assert!((l + 40.0).abs() < 1e-12);
        let (l, s) = log_hazard_pair(0.0);
        assert!((l - 0.5f64.ln()).abs() < 1e-15 && (s - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert!((quantile_sorted(&v, 0.125) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn inverse_gamma_mean() {
        let mut rng = stream_rng(11, 0);
        let draws: Vec<f64> = (0..200_000)
            .map(|_| inv_gamma(&mut rng, 5.0, 8.0))
            .collect();
        // mean = scale / (shape - 1) = 2
        assert!((mean(&draws) - 2.0).abs() < 0.02);
    }
}
