use serde::{Deserialize, Serialize};

use super::{ProblemParams, Regime};
use crate::engine::{Plan, SlotProcess};
use crate::error::{Error, Result};
use crate::fbm::{HurstParam, TimeGrid};
use crate::ladder::{fit_ladder, ExponentFit, LadderCounts, LadderPoint, Transform};
use crate::parallel::Workers;
use crate::rng::SeedSpec;
use crate::stats::ProbEstimate;

/// Sample size, random streams and parallelism for one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_paths: u64,
    pub seed: SeedSpec,
    pub workers: Workers,
}

impl McSettings {
    pub fn new(n_paths: u64, seed: SeedSpec) -> Self {
        Self {
            n_paths,
            seed,
            workers: Workers::default(),
        }
    }

    pub fn with_workers(self, workers: Workers) -> Self {
        Self { workers, ..self }
    }

    fn check(&self) -> Result<usize> {
        if self.n_paths < 100 {
            return Err(Error::invalid(format!("need at least 100 paths, got {}", self.n_paths)));
        }
        usize::try_from(self.n_paths).map_err(|_| Error::invalid("too many paths"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderFit {
    pub ladder: Vec<LadderPoint>,
    pub fit: ExponentFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaPoint {
    pub t: f64,
    /// `−ln p̂(T) / T^β` with the theoretical `β`; `None` without survivors.
    pub kappa_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta_theory: f64,
    pub ladder: Vec<LadderPoint>,
    pub fit: ExponentFit,
    pub kappa_trend: Vec<KappaPoint>,
}

fn exit_slots(params: &ProblemParams) -> Vec<SlotProcess> {
    let mut slots = vec![SlotProcess::Fbm(params.hurst); params.d];
    slots.push(SlotProcess::Fbm(params.hurst_tilde));
    slots
}

/// Runs paths up to `n_max` steps and returns each path's first exit index
/// (`u32::MAX` for survivors).
fn exit_indices(plan: &Plan, n_paths: usize, mc: &McSettings, alive: impl Fn(&[f64]) -> bool + Sync) -> Result<Vec<u32>> {
    plan.run(n_paths, mc.seed, mc.workers, |cur| {
        while let Some(v) = cur.step() {
            if !alive(v) {
                return cur.index() as u32;
            }
        }
        u32::MAX
    })
}

/// Probability that the `(d+1)`-dimensional process stays in the domain up to `horizon`.
pub fn estimate_survival(params: &ProblemParams, horizon: f64, n_steps: usize, mc: &McSettings) -> Result<ProbEstimate> {
    params.validate()?;
    let n = mc.check()?;
    let grid = TimeGrid::new(horizon, n_steps)?;
    let plan = Plan::new(grid, &exit_slots(params))?;
    let d = params.d;
    let idx = exit_indices(&plan, n, mc, |v| params.inside(&v[..d], v[d]))?;
    let survivors = idx.iter().filter(|&&i| i == u32::MAX).count() as u64;
    Ok(ProbEstimate::from_counts(survivors, mc.n_paths))
}

/// Grid sizes for a ladder monitored at a fixed step `1 / steps_per_unit`.
fn ladder_steps(t_ladder: &[f64], steps_per_unit: f64, min_len: usize) -> Result<Vec<usize>> {
    if t_ladder.len() < min_len {
        return Err(Error::invalid(format!(
            "ladder needs at least {min_len} horizons, got {}",
            t_ladder.len()
        )));
    }
    if !(steps_per_unit.is_finite() && steps_per_unit > 0.0) {
        return Err(Error::invalid("steps per unit time must be positive"));
    }
    let steps: Vec<usize> = t_ladder
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(format!("horizon {t} must be positive")));
            }
            let n = (t * steps_per_unit).round();
            if n < 1.0 || n > u32::MAX as f64 - 1.0 {
                return Err(Error::invalid(format!("horizon {t} gives {n} grid steps")));
            }
            Ok(n as usize)
        })
        .collect::<Result<_>>()?;
    if steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("ladder horizons must be strictly increasing on the grid"));
    }
    Ok(steps)
}

struct LadderRun {
    scales: Vec<f64>,
    steps: Vec<usize>,
    counts: LadderCounts,
}

impl LadderRun {
    fn points(&self) -> Vec<LadderPoint> {
        self.scales
            .iter()
            .zip(&self.steps)
            .zip(self.counts.estimates())
            .map(|((&scale, &n_steps), estimate)| LadderPoint {
                scale,
                n_steps,
                estimate,
            })
            .collect()
    }
}

/// One simulation up to the largest horizon; the survival event at `T_i` is
/// "no exit among the first `n_i` steps", so the ladder is exactly monotone.
fn coupled_ladder(
    processes: &[SlotProcess],
    t_ladder: &[f64],
    steps_per_unit: f64,
    mc: &McSettings,
    min_len: usize,
    alive: impl Fn(&[f64]) -> bool + Sync,
) -> Result<LadderRun> {
    let n = mc.check()?;
    let steps = ladder_steps(t_ladder, steps_per_unit, min_len)?;
    let n_max = *steps.last().expect("non-empty ladder");
    let grid = TimeGrid::new(n_max as f64 / steps_per_unit, n_max)?;
    let plan = Plan::new(grid, processes)?;
    let idx = exit_indices(&plan, n, mc, alive)?;
    let counts = LadderCounts::tally(&idx, steps.len(), |&e, i| e as usize > steps[i]);
    let scales = steps.iter().map(|&s| grid.time(s)).collect();
    Ok(LadderRun { scales, steps, counts })
}

/// Survival probabilities on a ladder of horizons from coupled paths.
pub fn survival_ladder(
    params: &ProblemParams,
    t_ladder: &[f64],
    steps_per_unit: f64,
    mc: &McSettings,
) -> Result<Vec<LadderPoint>> {
    params.validate()?;
    let d = params.d;
    let run = coupled_ladder(&exit_slots(params), t_ladder, steps_per_unit, mc, 1, |v| {
        params.inside(&v[..d], v[d])
    })?;
    Ok(run.points())
}

/// Fits `ln(−ln p̂(T)) = β ln T + c` in the stretched-exponential regime.
pub fn estimate_beta(
    params: &ProblemParams,
    t_ladder: &[f64],
    steps_per_unit: f64,
    mc: &McSettings,
) -> Result<BetaEstimate> {
    params.validate()?;
    if params.regime() != Regime::StretchedExponential {
        return Err(Error::invalid(format!(
            "β is only defined for pH > H̃ (here pH = {}, H̃ = {}); use the polynomial exponent instead",
            params.p * params.hurst.value(),
            params.hurst_tilde.value()
        )));
    }
    let d = params.d;
    let run = coupled_ladder(&exit_slots(params), t_ladder, steps_per_unit, mc, 4, |v| {
        params.inside(&v[..d], v[d])
    })?;
    let fit = fit_ladder(&run.scales, &run.counts, Transform::LogNegLog, f64::ln, 1.0, |_| Ok(()))?;
    let beta = params.exponents().beta;
    let ladder = run.points();
    let kappa_trend = ladder
        .iter()
        .map(|p| KappaPoint {
            t: p.scale,
            kappa_hat: p.estimate.log_prob_hat.map(|lp| -lp / p.scale.powf(beta)),
        })
        .collect();
    Ok(BetaEstimate {
        beta_theory: beta,
        ladder,
        fit,
        kappa_trend,
    })
}

/// Fits `ln p̂(T) = −γ ln T + c`; refuses the stretched-exponential regime
/// unless `override_regime` is set.
pub fn estimate_polynomial_exponent(
    params: &ProblemParams,
    t_ladder: &[f64],
    steps_per_unit: f64,
    mc: &McSettings,
    override_regime: bool,
) -> Result<LadderFit> {
    params.validate()?;
    if params.regime() == Regime::StretchedExponential && !override_regime {
        return Err(Error::invalid(
            "pH > H̃: survival decays stretched-exponentially; use β or override the regime check",
        ));
    }
    let d = params.d;
    let run = coupled_ladder(&exit_slots(params), t_ladder, steps_per_unit, mc, 3, |v| {
        params.inside(&v[..d], v[d])
    })?;
    let fit = fit_ladder(&run.scales, &run.counts, Transform::LogProb, f64::ln, -1.0, |_| Ok(()))?;
    Ok(LadderFit {
        ladder: run.points(),
        fit,
    })
}

/// Decay exponent of `P(W^{H̃}(t) ≥ −a for all t ≤ T)`, expected to be `1 − H̃`.
pub fn estimate_persistence_exponent(
    hurst_tilde: HurstParam,
    a: f64,
    t_ladder: &[f64],
    steps_per_unit: f64,
    mc: &McSettings,
) -> Result<LadderFit> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("barrier offset a must be positive, got {a}")));
    }
    let run = coupled_ladder(&[SlotProcess::Fbm(hurst_tilde)], t_ladder, steps_per_unit, mc, 3, |v| v[0] >= -a)?;
    let fit = fit_ladder(&run.scales, &run.counts, Transform::LogProb, f64::ln, -1.0, |_| Ok(()))?;
    Ok(LadderFit {
        ladder: run.points(),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    fn brownian(p: f64) -> ProblemParams {
        ProblemParams::isotropic(h(0.5), 1, p, 1.0, 1.0).unwrap()
    }

    #[test]
    fn tiny_horizon_survives() {
        let mc = McSettings::new(1000, SeedSpec::new(1, 0));
        let e = estimate_survival(&brownian(2.0), 1e-6, 10, &mc).unwrap();
        assert_eq!(e.prob_hat, 1.0);
    }

    #[test]
    fn survival_is_reproducible() {
        let params = ProblemParams::isotropic(h(0.7), 2, 2.0, 1.0, 1.0).unwrap();
        let mc = McSettings::new(300, SeedSpec::new(5, 3));
        let a = estimate_survival(&params, 3.0, 64, &mc).unwrap();
        let b = estimate_survival(&params, 3.0, 64, &mc).unwrap();
        assert_eq!(a, b);
        assert!(a.prob_hat > 0.0 && a.prob_hat < 1.0);
    }

    #[test]
    fn ladder_end_matches_direct_estimate() {
        // the last rung uses the same grid and streams as a direct run
        let params = brownian(2.0);
        let mc = McSettings::new(400, SeedSpec::new(2, 0));
        let ladder = survival_ladder(&params, &[1.0, 2.0, 4.0], 8.0, &mc).unwrap();
        let direct = estimate_survival(&params, 4.0, 32, &mc).unwrap();
        assert_eq!(ladder[2].estimate, direct);
        assert!(ladder.windows(2).all(|w| w[0].estimate.survivors >= w[1].estimate.survivors));
    }

    #[test]
    fn too_few_paths_rejected() {
        let mc = McSettings::new(10, SeedSpec::new(1, 0));
        assert!(estimate_survival(&brownian(2.0), 1.0, 10, &mc).is_err());
    }

    #[test]
    fn regime_checks() {
        let mc = McSettings::new(200, SeedSpec::new(1, 0));
        let t = [1.0, 2.0, 4.0, 8.0];
        assert!(matches!(
            estimate_beta(&brownian(1.0), &t, 4.0, &mc),
            Err(Error::InvalidArgument(_))
        ));
        assert!(estimate_polynomial_exponent(&brownian(2.0), &t, 4.0, &mc, false).is_err());
        assert!(estimate_beta(&brownian(2.0), &t[..3], 4.0, &mc).is_err());
    }

    #[test]
    fn ladder_validation() {
        assert!(ladder_steps(&[2.0, 1.0, 3.0], 4.0, 3).is_err());
        assert!(ladder_steps(&[1.0, 1.01, 3.0], 4.0, 3).is_err());
        assert_eq!(ladder_steps(&[1.0, 2.0, 4.0], 4.0, 3).unwrap(), vec![4, 8, 16]);
    }

    #[test]
    fn brownian_persistence_matches_reflection() {
        // P(min_{t≤T} W ≥ −1) = erf(1/√(2T)) in continuous time; discrete
        // monitoring only raises it
        let mc = McSettings::new(20_000, SeedSpec::new(11, 0));
        let fit = estimate_persistence_exponent(h(0.5), 1.0, &[4.0, 8.0, 16.0], 16.0, &mc).unwrap();
        for p in &fit.ladder {
            let exact = erf(1.0 / (2.0 * p.scale).sqrt());
            assert!(p.estimate.prob_hat > exact - 3.0 * p.estimate.std_err);
            assert!(p.estimate.prob_hat < exact + 0.1);
        }
    }

    fn erf(x: f64) -> f64 {
        // Abramowitz–Stegun 7.1.26 is too coarse here; sum the Taylor series
        let mut term = x;
        let mut sum = x;
        for k in 1..60 {
            term *= -x * x / k as f64;
            sum += term / (2 * k + 1) as f64;
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }
}
