//! Binomial estimates, Wilson intervals and weighted line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A Monte Carlo probability estimate from `survivors` out of `n_paths` trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimate {
    pub prob_hat: f64,
    /// `None` when no path survived; the log scale is then undefined.
    pub log_prob_hat: Option<f64>,
    pub n_paths: u64,
    pub survivors: u64,
    pub std_err: f64,
    pub ci95: (f64, f64),
}

impl ProbEstimate {
    pub fn from_counts(survivors: u64, n_paths: u64) -> Self {
        assert!(n_paths > 0 && survivors <= n_paths);
        let n = n_paths as f64;
        let p = survivors as f64 / n;
        Self {
            prob_hat: p,
            log_prob_hat: (survivors > 0).then(|| p.ln()),
            n_paths,
            survivors,
            std_err: (p * (1.0 - p) / n).sqrt(),
            ci95: wilson_interval(survivors, n_paths, Z95),
        }
    }

    pub fn zero_survivors(&self) -> bool {
        self.survivors == 0
    }

    /// Delta-method variance of `ln p̂`.
    pub fn log_variance(&self) -> Option<f64> {
        (self.survivors > 0).then(|| (1.0 - self.prob_hat) / (self.n_paths as f64 * self.prob_hat))
    }
}

pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope assuming independent points with the given weights.
    pub slope_stderr: f64,
    /// Root mean square of the unweighted residuals.
    pub residual_rms: f64,
}

/// Weighted least squares fit of `y = slope * x + intercept`.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::invalid("fit inputs differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", x.len())));
    }
    if w.iter().any(|&wi| !(wi.is_finite() && wi > 0.0)) {
        return Err(Error::Fit("weights must be finite and positive".into()));
    }
    let s: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let xm = sx / s;
    let ym = sy / s;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| w * (x - xm) * (y - ym))
        .sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (1.0 / sxx).sqrt(),
        residual_rms: (rss / x.len() as f64).sqrt(),
    })
}

/// Delete-one-group jackknife standard error.
pub fn jackknife_stderr(replicates: &[f64]) -> Option<f64> {
    let g = replicates.len();
    if g < 2 || replicates.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mean = replicates.iter().sum::<f64>() / g as f64;
    let ss: f64 = replicates.iter().map(|v| (v - mean).powi(2)).sum();
    Some(((g - 1) as f64 / g as f64 * ss).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_hand_computation() {
        // 50/100 with z = 1.96: center 0.5, half = 1.96/1.0384*sqrt(0.0025+0.000096)
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.403_831).abs() < 1e-5, "{lo}");
        assert!((hi - 0.596_169).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
    }

    #[test]
    fn zero_survivors_have_no_log() {
        let e = ProbEstimate::from_counts(0, 500);
        assert!(e.zero_survivors());
        assert!(e.log_prob_hat.is_none());
        assert!(e.log_variance().is_none());
    }

    #[test]
    fn exact_line_is_recovered() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|x| 2.5 * x - 1.0).collect();
        let fit = weighted_line_fit(&x, &y, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn jackknife_of_constant_is_zero() {
        assert_eq!(jackknife_stderr(&[1.0, 1.0, 1.0]), Some(0.0));
        assert_eq!(jackknife_stderr(&[1.0]), None);
    }
}
