use serde::{Deserialize, Serialize};

use super::{VariationalProblem, VariationalSolution, DEFAULT_MAX_ITER, DEFAULT_TOL, FLOOR};
use crate::error::{Error, Result};
use crate::exit::{ProblemParams, Regime};
use crate::fbm::{HurstParam, TimeGrid};
use crate::rkhs::{GridFunction, KernelMatrix};

/// `A = κ_{H,d} K^{−1/(pH)}`, `α = 1/(pH)`, kernel at `H̃`.
fn assemble(params: &ProblemParams, kappa_hd: f64, n: usize) -> Result<VariationalProblem> {
    params.validate()?;
    if params.regime() != Regime::StretchedExponential {
        return Err(Error::invalid(format!(
            "the rate constant is defined for pH > H̃ only (pH = {}, H̃ = {})",
            params.p * params.hurst.value(),
            params.hurst_tilde.value()
        )));
    }
    if !(kappa_hd.is_finite() && kappa_hd > 0.0) {
        return Err(Error::invalid(format!("small-deviation constant must be positive, got {kappa_hd}")));
    }
    let alpha = 1.0 / (params.p * params.hurst.value());
    let a = kappa_hd * params.k.powf(-alpha);
    let kernel = KernelMatrix::new(params.hurst_tilde, TimeGrid::unit(n)?)?;
    VariationalProblem::new(a, alpha, kernel)
}

/// The rate constant `κ` on an `n`-point grid, started from the best multiple
/// of `t^{H̃ + 0.01}`.
pub fn theorem_constant(params: &ProblemParams, kappa_hd: f64, n: usize) -> Result<VariationalSolution> {
    let prob = assemble(params, kappa_hd, n)?;
    let e = params.hurst_tilde.value() + 0.01;
    let shape = GridFunction::from_fn(*prob.kernel().grid(), |t| t.powf(e).max(FLOOR))?;
    let (lambda, _) = prob.optimal_scale(&shape)?;
    prob.solve(&shape.scaled(lambda), DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Extrapolates `κ_n → κ_∞` assuming an error `∝ n^{−order}`, from grids `n` and `2n`.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> f64 {
    let r = 2f64.powf(order);
    (r * fine - coarse) / (r - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub n: usize,
    pub kappa_value: f64,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Solutions on `n/4`, `n/2`, `n` and the extrapolated constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub levels: Vec<RefinementLevel>,
    /// Assumed convergence order of `κ_n`; equal to `β̃`.
    pub order_assumed: f64,
    /// `log₂` of the ratio of successive differences.
    pub order_observed: f64,
    pub monotone: bool,
    /// Richardson value from the two finest grids.
    pub extrapolated: f64,
}

pub fn theorem_constant_refined(
    params: &ProblemParams,
    kappa_hd: f64,
    n: usize,
) -> Result<(VariationalSolution, RefinementStudy)> {
    if n < 16 || n % 4 != 0 {
        return Err(Error::invalid(format!("refinement needs n divisible by 4 and at least 16, got {n}")));
    }
    let coarse = theorem_constant(params, kappa_hd, n / 4)?;
    let mid = theorem_constant(params, kappa_hd, n / 2)?;
    let fine = theorem_constant(params, kappa_hd, n)?;
    let level = |n: usize, s: &VariationalSolution| RefinementLevel {
        n,
        kappa_value: s.kappa_value,
        kkt_residual: s.kkt_residual,
        converged: s.converged,
    };
    let (k1, k2, k3) = (coarse.kappa_value, mid.kappa_value, fine.kappa_value);
    let d1 = k2 - k1;
    let d2 = k3 - k2;
    let order_assumed = params.exponents().beta;
    let study = RefinementStudy {
        levels: vec![level(n / 4, &coarse), level(n / 2, &mid), level(n, &fine)],
        order_assumed,
        order_observed: (d1 / d2).log2(),
        monotone: d1 * d2 > 0.0,
        extrapolated: richardson(k2, k3, order_assumed),
    };
    Ok((fine, study))
}

/// JSON export of a solved problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub params: Option<ProblemParams>,
    pub kappa_hd: Option<f64>,
    pub kernel_hurst: HurstParam,
    #[serde(rename = "A")]
    pub a: f64,
    pub alpha: f64,
    pub n: usize,
    /// Best available value of the constant: the extrapolated one when a
    /// refinement study is attached, otherwise the discrete minimum.
    pub kappa_value: f64,
    /// Minimum of the discrete problem on this grid.
    pub kappa_discrete: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `t_1..t_n`.
    pub grid: Vec<f64>,
    pub h_star: Vec<f64>,
    pub refinement: Option<RefinementStudy>,
}

impl SolutionRecord {
    pub fn new(prob: &VariationalProblem, sol: &VariationalSolution) -> Self {
        let grid = sol.h_star.grid();
        Self {
            params: None,
            kappa_hd: None,
            kernel_hurst: prob.kernel().hurst(),
            a: prob.a(),
            alpha: prob.alpha(),
            n: grid.n_steps(),
            kappa_value: sol.kappa_value,
            kappa_discrete: sol.kappa_value,
            kkt_residual: sol.kkt_residual,
            iterations: sol.iterations,
            converged: sol.converged,
            grid: (1..=grid.n_steps()).map(|i| grid.time(i)).collect(),
            h_star: sol.h_star.values().to_vec(),
            refinement: None,
        }
    }

    /// Record for [`theorem_constant`] output.
    pub fn for_theorem(params: &ProblemParams, kappa_hd: f64, sol: &VariationalSolution) -> Result<Self> {
        let alpha = 1.0 / (params.p * params.hurst.value());
        let grid = sol.h_star.grid();
        Ok(Self {
            params: Some(*params),
            kappa_hd: Some(kappa_hd),
            kernel_hurst: params.hurst_tilde,
            a: kappa_hd * params.k.powf(-alpha),
            alpha,
            n: grid.n_steps(),
            kappa_value: sol.kappa_value,
            kappa_discrete: sol.kappa_value,
            kkt_residual: sol.kkt_residual,
            iterations: sol.iterations,
            converged: sol.converged,
            grid: (1..=grid.n_steps()).map(|i| grid.time(i)).collect(),
            h_star: sol.h_star.values().to_vec(),
            refinement: None,
        })
    }

    pub fn with_refinement(self, study: RefinementStudy) -> Self {
        Self {
            kappa_value: study.extrapolated,
            refinement: Some(study),
            ..self
        }
    }
}
