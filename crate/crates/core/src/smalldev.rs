//! Small-deviation constants `κ_{H,d} = lim_{ε→0} −ε^{1/H} ln P(sup_{[0,1]} ‖W‖ ≤ ε)`.
//!
//! Estimated from a ladder of radii by fitting `−ln p̂(ε) = κ ε^{−1/H} + c`.
//! Every path is simulated on a grid of `2n` steps; the sup over the even
//! points gives the `n`-step estimate used in the fit and the full grid gives
//! the refinement check.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::engine::{Plan, SlotProcess};
use crate::error::{Error, Result};
use crate::exit::McSettings;
use crate::fbm::{HurstParam, TimeGrid};
use crate::ladder::{fit_ladder, ExponentFit, LadderCounts, LadderPoint, Transform};
use crate::rng::SeedSpec;
use crate::stats::ProbEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallDevProcess {
    #[default]
    Fbm,
    /// `c_H ∫₀ᵗ (t−u)^{H−1/2} dW(u)`, scaled by [`mandelbrot_van_ness_constant`].
    RiemannLiouville,
}

/// `c_H` with `c_H ∫ [(t−u)_+^{H−1/2} − (−u)_+^{H−1/2}] dW(u)` a standard FBM.
///
/// The Riemann–Liouville part carries the same factor, and it is with this
/// normalization that its small-deviation constant coincides with the FBM one.
pub fn mandelbrot_van_ness_constant(h: HurstParam) -> f64 {
    let h = h.value();
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// Closed-form `κ_{1/2,d}` for `d ∈ {1, 2}`: `j²/2` with `j` the first zero of
/// the Bessel function `J_{d/2−1}`.
pub fn brownian_kappa(d: usize) -> Option<f64> {
    match d {
        1 => Some(std::f64::consts::PI * std::f64::consts::PI / 8.0),
        2 => Some(0.5 * 2.404_825_557_695_773_f64.powi(2)),
        _ => None,
    }
}

fn slots(h: HurstParam, d: usize, process: SmallDevProcess) -> Vec<SlotProcess> {
    let one = match process {
        SmallDevProcess::Fbm => SlotProcess::Fbm(h),
        SmallDevProcess::RiemannLiouville => SlotProcess::RiemannLiouville(h, mandelbrot_van_ness_constant(h)),
    };
    vec![one; d]
}

fn check_common(d: usize, n_steps: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("need at least one grid step"));
    }
    Ok(())
}

/// `P(max_i ‖W(t_i)‖ ≤ ε)` over an `n_steps` grid on `[0, 1]`.
pub fn smalldev_prob(
    h: HurstParam,
    d: usize,
    eps: f64,
    n_steps: usize,
    mc: &McSettings,
    process: SmallDevProcess,
) -> Result<ProbEstimate> {
    check_common(d, n_steps)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {eps}")));
    }
    if mc.n_paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let plan = Plan::new(TimeGrid::unit(n_steps)?, &slots(h, d, process))?;
    let eps2 = eps * eps;
    let inside = plan.run(mc.n_paths as usize, mc.seed, mc.workers, |cur| {
        while let Some(v) = cur.step() {
            if v.iter().map(|x| x * x).sum::<f64>() > eps2 {
                return false;
            }
        }
        true
    })?;
    let survivors = inside.iter().filter(|&&b| b).count() as u64;
    Ok(ProbEstimate::from_counts(survivors, mc.n_paths))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallDevEstimate {
    pub hurst: HurstParam,
    pub d: usize,
    pub process: SmallDevProcess,
    pub kappa_hat: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub residual_rms: f64,
    pub n_steps: usize,
    pub epsilons: Vec<f64>,
    /// Estimates on the `n_steps` grid.
    pub per_eps: Vec<ProbEstimate>,
    /// Estimates on the `2 n_steps` grid from the same paths.
    pub refined: Vec<ProbEstimate>,
    /// `−ε^{1/H} ln p̂(ε)`; roughly constant once the asymptotics set in.
    pub scaled_log_prob: Vec<Option<f64>>,
    pub fit: ExponentFit,
}

impl SmallDevEstimate {
    pub fn ladder(&self) -> Vec<LadderPoint> {
        self.epsilons
            .iter()
            .zip(&self.per_eps)
            .map(|(&scale, &estimate)| LadderPoint {
                scale,
                n_steps: self.n_steps,
                estimate,
            })
            .collect()
    }

    /// Spread `(max − min) / mean` of `−ε^{1/H} ln p̂` over the smaller half of the ladder.
    pub fn scaling_spread(&self) -> Option<f64> {
        let m = self.scaled_log_prob.len();
        let tail: Vec<f64> = self.scaled_log_prob[m / 2..].iter().flatten().copied().collect();
        if tail.len() < 2 {
            return None;
        }
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        Some((hi - lo) / mean)
    }
}

/// Fits `κ_{H,d}` over a strictly decreasing ladder of radii.
pub fn estimate_kappa_hd(
    h: HurstParam,
    d: usize,
    eps_ladder: &[f64],
    n_steps: usize,
    mc: &McSettings,
    process: SmallDevProcess,
) -> Result<SmallDevEstimate> {
    check_common(d, n_steps)?;
    if eps_ladder.len() < 3 {
        return Err(Error::invalid("the radius ladder needs at least 3 values"));
    }
    if eps_ladder.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps_ladder.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::invalid("radii must be positive and strictly decreasing"));
    }
    if mc.n_paths < 100 {
        return Err(Error::invalid(format!("need at least 100 paths, got {}", mc.n_paths)));
    }
    let fine = 2 * n_steps;
    let plan = Plan::new(TimeGrid::unit(fine)?, &slots(h, d, process))?;
    let eps_max2 = eps_ladder[0] * eps_ladder[0];
    // squared sups over the coarse (even) and full grids; a path leaving the
    // largest radius on the coarse grid is cut short and reported as infinite
    let sups = plan.run(mc.n_paths as usize, mc.seed, mc.workers, |cur| {
        let (mut coarse, mut full) = (0.0f64, 0.0f64);
        while let Some(v) = cur.step() {
            let r2: f64 = v.iter().map(|x| x * x).sum();
            full = full.max(r2);
            if cur.index() % 2 == 0 {
                coarse = coarse.max(r2);
                if coarse > eps_max2 {
                    return (f64::INFINITY, f64::INFINITY);
                }
            }
        }
        (coarse, full)
    })?;
    let m = eps_ladder.len();
    let eps2: Vec<f64> = eps_ladder.iter().map(|e| e * e).collect();
    let coarse = LadderCounts::tally(&sups, m, |s, i| s.0 <= eps2[i]);
    let refined_counts = LadderCounts::tally(&sups, m, |s, i| s.1 <= eps2[i]);
    let per_eps = coarse.estimates();
    let refined = refined_counts.estimates();

    let inv_h = 1.0 / h.value();
    let fit = fit_ladder(
        eps_ladder,
        &coarse,
        Transform::NegLog,
        |e| e.powf(-inv_h),
        1.0,
        |i| {
            let (a, b) = (&per_eps[i], &refined[i]);
            let diff = a.prob_hat - b.prob_hat;
            if diff >= 2.0 * a.std_err {
                Err(format!(
                    "grid refinement moves p̂ by {diff:.3e} ≥ 2 standard errors ({:.3e})",
                    a.std_err
                ))
            } else {
                Ok(())
            }
        },
    )?;
    if fit.exponent_hat <= 0.0 {
        return Err(Error::Fit(format!(
            "fitted constant {} is not positive; the ladder is too coarse or too noisy",
            fit.exponent_hat
        )));
    }
    let scaled_log_prob = eps_ladder
        .iter()
        .zip(&per_eps)
        .map(|(e, p)| p.log_prob_hat.map(|lp| -lp * e.powf(inv_h)))
        .collect();
    Ok(SmallDevEstimate {
        hurst: h,
        d,
        process,
        kappa_hat: fit.exponent_hat,
        intercept: fit.intercept,
        stderr: fit.stderr,
        residual_rms: fit.residual_rms,
        n_steps,
        epsilons: eps_ladder.to_vec(),
        per_eps,
        refined,
        scaled_log_prob,
        fit,
    })
}

/// Persisted small-deviation constant with the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaConstant {
    #[serde(rename = "H")]
    pub hurst: HurstParam,
    pub d: usize,
    pub kappa_hat: f64,
    pub stderr: f64,
    pub ladder: LadderMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderMeta {
    pub process: SmallDevProcess,
    pub epsilons: Vec<f64>,
    /// Radii that entered the fit.
    pub used: Vec<f64>,
    pub n_steps: usize,
    pub n_paths: u64,
    pub seed: SeedSpec,
    pub residual_rms: f64,
}

impl KappaConstant {
    pub fn from_estimate(est: &SmallDevEstimate, mc: &McSettings) -> Self {
        Self {
            hurst: est.hurst,
            d: est.d,
            kappa_hat: est.kappa_hat,
            stderr: est.stderr,
            ladder: LadderMeta {
                process: est.process,
                epsilons: est.epsilons.clone(),
                used: est.fit.points.iter().map(|p| p.scale).collect(),
                n_steps: est.n_steps,
                n_paths: mc.n_paths,
                seed: mc.seed,
                residual_rms: est.residual_rms,
            },
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let c: Self = serde_json::from_reader(r).map_err(|e| Error::Format(format!("constants file: {e}")))?;
        if !(c.kappa_hat.is_finite() && c.kappa_hat > 0.0) {
            return Err(Error::Format(format!("constants file: kappa_hat = {} is not positive", c.kappa_hat)));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_json(std::io::BufReader::new(f))
    }
}
