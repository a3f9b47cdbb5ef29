//! Probability ladders and the exponent fits built on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{jackknife_stderr, weighted_line_fit, ProbEstimate};

/// Number of contiguous path blocks used for jackknife standard errors.
pub(crate) const JACKKNIFE_GROUPS: usize = 20;

/// One rung of a ladder: a scale (horizon `T` or radius `ε`) and its estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub scale: f64,
    pub n_steps: usize,
    pub estimate: ProbEstimate,
}

/// A point entering a regression, after transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub scale: f64,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent_hat: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Jackknife standard error over path blocks; the weighted least squares
    /// value when the jackknife is unavailable.
    pub stderr: f64,
    pub points: Vec<FitPoint>,
    /// Scales dropped from the fit, with the reason.
    pub dropped: Vec<(f64, String)>,
}

/// Survivor counts for a ladder, total and per jackknife block.
#[derive(Debug, Clone)]
pub(crate) struct LadderCounts {
    pub n_paths: u64,
    pub survivors: Vec<u64>,
    pub block_sizes: Vec<u64>,
    /// `block_survivors[g][i]`
    pub block_survivors: Vec<Vec<u64>>,
}

impl LadderCounts {
    /// Tallies `alive(path_result, rung)` over paths split into contiguous blocks.
    pub(crate) fn tally<T>(results: &[T], rungs: usize, alive: impl Fn(&T, usize) -> bool) -> Self {
        let n = results.len();
        let groups = JACKKNIFE_GROUPS.min(n.max(1));
        let mut block_sizes = vec![0u64; groups];
        let mut block_survivors = vec![vec![0u64; rungs]; groups];
        for (j, r) in results.iter().enumerate() {
            let g = j * groups / n;
            block_sizes[g] += 1;
            for (i, c) in block_survivors[g].iter_mut().enumerate() {
                if alive(r, i) {
                    *c += 1;
                }
            }
        }
        let survivors = (0..rungs).map(|i| block_survivors.iter().map(|b| b[i]).sum()).collect();
        Self {
            n_paths: n as u64,
            survivors,
            block_sizes,
            block_survivors,
        }
    }

    pub(crate) fn estimates(&self) -> Vec<ProbEstimate> {
        self.survivors
            .iter()
            .map(|&s| ProbEstimate::from_counts(s, self.n_paths))
            .collect()
    }
}

/// How ladder probabilities enter a line fit.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Transform {
    /// `y = ln p̂`.
    LogProb,
    /// `y = ln(−ln p̂)`.
    LogNegLog,
    /// `y = −ln p̂`.
    NegLog,
}

impl Transform {
    /// `(y, var y)` by the delta method, or a reason to drop the point.
    fn apply(self, e: &ProbEstimate) -> std::result::Result<(f64, f64), &'static str> {
        let Some(lp) = e.log_prob_hat else {
            return Err("no survivors");
        };
        // all paths surviving carries no information about the spread; keep
        // such points finite with a one-path floor
        let n = e.n_paths as f64;
        let var = e.log_variance().unwrap_or(0.0).max(1.0 / (n * n));
        match self {
            Transform::LogProb => Ok((lp, var)),
            Transform::NegLog => Ok((-lp, var)),
            Transform::LogNegLog => {
                if lp >= 0.0 {
                    return Err("every path survived");
                }
                Ok(((-lp).ln(), var / (lp * lp)))
            }
        }
    }
}

/// Fits `transform(p̂)` against `x_of(scale)`; the exponent is `sign · slope`.
pub(crate) fn fit_ladder(
    scales: &[f64],
    counts: &LadderCounts,
    transform: Transform,
    x_of: impl Fn(f64) -> f64,
    sign: f64,
    keep: impl Fn(usize) -> std::result::Result<(), String>,
) -> Result<ExponentFit> {
    let estimates = counts.estimates();
    let mut used = Vec::new();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (i, (s, e)) in scales.iter().zip(&estimates).enumerate() {
        if let Err(why) = keep(i) {
            dropped.push((*s, why));
            continue;
        }
        match transform.apply(e) {
            Ok((y, var)) => {
                used.push(i);
                points.push(FitPoint {
                    scale: *s,
                    x: x_of(*s),
                    y,
                    weight: 1.0 / var,
                });
            }
            Err(why) => dropped.push((*s, why.to_string())),
        }
    }
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} usable ladder points (need 3); dropped: {:?}",
            points.len(),
            dropped
        )));
    }
    let line = |pts: &[FitPoint]| {
        let x: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let w: Vec<f64> = pts.iter().map(|p| p.weight).collect();
        weighted_line_fit(&x, &y, &w)
    };
    let fit = line(&points)?;

    // Replicates reuse the full-sample weights so that only the responses move.
    let replicate = |g: usize| -> Option<f64> {
        let n = counts.n_paths - counts.block_sizes[g];
        if n == 0 {
            return None;
        }
        let pts: Vec<FitPoint> = used
            .iter()
            .zip(&points)
            .map(|(&i, p)| {
                let s = counts.survivors[i] - counts.block_survivors[g][i];
                let (y, _) = transform.apply(&ProbEstimate::from_counts(s, n)).ok()?;
                Some(FitPoint { y, ..*p })
            })
            .collect::<Option<_>>()?;
        line(&pts).ok().map(|f| f.slope)
    };
    let reps: Option<Vec<f64>> = (0..counts.block_sizes.len()).map(replicate).collect();
    let stderr = reps
        .as_deref()
        .and_then(jackknife_stderr)
        .unwrap_or(fit.slope_stderr);
    Ok(ExponentFit {
        exponent_hat: sign * fit.slope,
        intercept: fit.intercept,
        residual_rms: fit.residual_rms,
        stderr,
        points,
        dropped,
    })
}

/// Writes a ladder as CSV; `scale_name` heads the first column.
pub fn write_ladder_csv<W: Write>(
    mut w: W,
    scale_name: &str,
    ladder: &[LadderPoint],
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{scale_name},n_steps,n_paths,survivors,prob_hat,log_prob_hat,std_err,ci_lo,ci_hi")?;
    for p in ladder {
        let e = &p.estimate;
        let lp = e.log_prob_hat.map_or_else(|| "nan".to_string(), |v| v.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            p.scale, p.n_steps, e.n_paths, e.survivors, e.prob_hat, lp, e.std_err, e.ci95.0, e.ci95.1
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(n: u64, surv: &[u64]) -> LadderCounts {
        // spread survivors evenly over the blocks
        let g = JACKKNIFE_GROUPS as u64;
        LadderCounts {
            n_paths: n,
            survivors: surv.to_vec(),
            block_sizes: vec![n / g; g as usize],
            block_survivors: (0..g).map(|_| surv.iter().map(|s| s / g).collect()).collect(),
        }
    }

    #[test]
    fn recovers_a_power_law() {
        let n = 2_000_000u64;
        let t = [10.0, 20.0, 40.0, 80.0];
        let surv: Vec<u64> = t.iter().map(|t: &f64| (n as f64 * 0.8 * t.powf(-0.5)).round() as u64).collect();
        let fit = fit_ladder(&t, &counts(n, &surv), Transform::LogProb, f64::ln, -1.0, |_| Ok(())).unwrap();
        assert!((fit.exponent_hat - 0.5).abs() < 1e-4, "{}", fit.exponent_hat);
        assert!(fit.dropped.is_empty());
    }

    #[test]
    fn zero_survivor_points_are_dropped() {
        let n = 20_000u64;
        let t = [1.0, 2.0, 4.0, 8.0, 16.0];
        let fit = fit_ladder(&t, &counts(n, &[10000, 5000, 2500, 1250, 0]), Transform::LogProb, f64::ln, -1.0, |_| Ok(()))
            .unwrap();
        assert_eq!(fit.points.len(), 4);
        assert_eq!(fit.dropped[0].0, 16.0);
        assert!((fit.exponent_hat - 1.0).abs() < 1e-9);
        let err = fit_ladder(&t, &counts(n, &[10000, 5000, 0, 0, 0]), Transform::LogProb, f64::ln, -1.0, |_| Ok(()));
        assert!(matches!(err, Err(Error::Fit(_))));
    }

    #[test]
    fn stretched_exponential_transform() {
        let n = 10_000_000u64;
        let t = [4.0, 8.0, 16.0, 32.0];
        let surv: Vec<u64> = t
            .iter()
            .map(|t: &f64| (n as f64 * (-0.7 * t.powf(1.0 / 3.0)).exp()).round() as u64)
            .collect();
        let fit = fit_ladder(&t, &counts(n, &surv), Transform::LogNegLog, f64::ln, 1.0, |_| Ok(())).unwrap();
        assert!((fit.exponent_hat - 1.0 / 3.0).abs() < 1e-3, "{}", fit.exponent_hat);
        assert!((fit.intercept - 0.7f64.ln()).abs() < 1e-2);
    }

    #[test]
    fn csv_columns() {
        let lp = LadderPoint {
            scale: 2.0,
            n_steps: 16,
            estimate: ProbEstimate::from_counts(0, 10),
        };
        let mut buf = Vec::new();
        write_ladder_csv(&mut buf, "T", &[lp], &[]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "T,n_steps,n_paths,survivors,prob_hat,log_prob_hat,std_err,ci_lo,ci_hi");
        assert!(lines[1].starts_with("2,16,10,0,0,nan,0,0,"));
    }
}
