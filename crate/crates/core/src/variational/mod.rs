//! Discretized rate-constant problem
//! `κ = inf_{h ≥ 0} [ A ∫₀¹ h(t)^{−α} dt + ½ ‖h‖²_H ]`.
//!
//! The integral uses the right-endpoint rule on the kernel's grid, and the
//! RKHS norm is the quadratic form `hᵀ Σ⁻¹ h`.

mod oracle;
mod theorem;

use nalgebra::{DMatrix, DVector};

pub use oracle::{euler_lagrange_oracle_brownian, ElOracle};
pub use theorem::{
    richardson, theorem_constant, theorem_constant_refined, RefinementLevel, RefinementStudy, SolutionRecord,
};

use crate::error::{Error, Result};
use crate::linalg::cholesky_with_jitter;
use crate::rkhs::{rkhs_norm_sq, GridFunction, KernelMatrix};

/// Lower bound kept by the solver on every grid value.
pub const FLOOR: f64 = 1e-8;
/// Default stopping tolerance on [`VariationalSolution::kkt_residual`].
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct VariationalProblem {
    a: f64,
    alpha: f64,
    kernel: KernelMatrix,
    precision: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    pub h_star: GridFunction,
    pub kappa_value: f64,
    pub iterations: usize,
    /// `max |projected gradient| / Δt` at `h_star`.
    pub kkt_residual: f64,
    pub converged: bool,
}

impl VariationalProblem {
    pub fn new(a: f64, alpha: f64, kernel: KernelMatrix) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid(format!("A must be finite and non-negative, got {a}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        let precision = kernel.precision();
        Ok(Self {
            a,
            alpha,
            kernel,
            precision,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    /// Same kernel, different `A`.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid(format!("A must be finite and non-negative, got {a}")));
        }
        Ok(Self { a, ..self.clone() })
    }

    fn check(&self, h: &GridFunction) -> Result<()> {
        if h.grid() != self.kernel.grid() {
            return Err(Error::invalid(format!(
                "grid mismatch: function has n = {}, problem has n = {}",
                h.len(),
                self.kernel.grid().n_steps()
            )));
        }
        Ok(())
    }

    /// `Σ Δt h_i^{−α}`; infinite unless every value is positive.
    pub fn integral_term(&self, h: &GridFunction) -> f64 {
        let dt = h.grid().dt();
        let mut acc = 0.0;
        for &v in h.values() {
            if !(v > 0.0 && v.is_finite()) {
                return f64::INFINITY;
            }
            acc += dt * v.powf(-self.alpha);
        }
        acc
    }

    /// `A Σ Δt h_i^{−α} + ½ hᵀ Σ⁻¹ h`, or `+∞` when some `h_i ≤ 0`.
    pub fn objective(&self, h: &GridFunction) -> Result<f64> {
        self.check(h)?;
        let integral = self.integral_term(h);
        if integral.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(self.a * integral + 0.5 * rkhs_norm_sq(h, &self.kernel)?)
    }

    /// `−α A Δt h^{−α−1} + Σ⁻¹ h`.
    pub fn gradient(&self, h: &GridFunction) -> Result<Vec<f64>> {
        self.check(h)?;
        let dt = h.grid().dt();
        let quad = self.kernel.solve(h.values());
        Ok(h.values()
            .iter()
            .zip(quad)
            .map(|(&v, q)| -self.alpha * self.a * dt * v.powf(-self.alpha - 1.0) + q)
            .collect())
    }

    /// Exact minimum of the objective along the ray `{λ g : λ > 0}`.
    pub fn optimal_scale(&self, shape: &GridFunction) -> Result<(f64, f64)> {
        self.check(shape)?;
        let i = self.integral_term(shape);
        let q = rkhs_norm_sq(shape, &self.kernel)?;
        if !(i.is_finite() && i > 0.0 && q.is_finite() && q > 0.0) {
            return Err(Error::invalid(format!(
                "shape needs finite positive integral ({i}) and norm ({q}) terms"
            )));
        }
        Ok(scale_minimum(self.a, self.alpha, i, q))
    }

    /// Projected Newton iteration with backtracking on `{h ≥ FLOOR}`.
    pub fn solve(&self, init: &GridFunction, tol: f64, max_iter: usize) -> Result<VariationalSolution> {
        self.check(init)?;
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if init.values().iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("initial guess must be positive"));
        }
        let grid = *init.grid();
        let dt = grid.dt();
        let n = init.len();
        let mut h: Vec<f64> = init.values().iter().map(|&v| v.max(FLOOR)).collect();
        let as_fn = |v: &[f64]| GridFunction::new(grid, v.to_vec()).expect("grid fixed above");
        let mut f = self.objective(&as_fn(&h))?;
        let mut g = self.gradient(&as_fn(&h))?;
        let mut kkt = projected_residual(&h, &g) / dt;
        let mut iterations = 0;

        while kkt > tol && iterations < max_iter {
            iterations += 1;
            // free variables: off the floor, or on it with a descent direction inward
            let free: Vec<usize> = (0..n).filter(|&i| h[i] > FLOOR || g[i] < 0.0).collect();
            let m = free.len();
            let mut hess = DMatrix::<f64>::zeros(m, m);
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    hess[(r, c)] = self.precision[(i, j)];
                }
                hess[(r, r)] += self.alpha * (self.alpha + 1.0) * self.a * dt * h[i].powf(-self.alpha - 2.0);
            }
            let rhs = DVector::from_iterator(m, free.iter().map(|&i| -g[i]));
            let step = cholesky_with_jitter(hess)?.solve(&rhs);
            let mut dir = vec![0.0; n];
            for (r, &i) in free.iter().enumerate() {
                dir[i] = step[r];
            }
            let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
            if slope >= 0.0 {
                break;
            }
            // stay strictly inside the barrier, then backtrack
            let mut t: f64 = 1.0;
            for i in 0..n {
                if dir[i] < 0.0 {
                    t = t.min(0.99 * h[i] / -dir[i]);
                }
            }
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = h.iter().zip(&dir).map(|(v, d)| (v + t * d).max(FLOOR)).collect();
                let ft = self.objective(&as_fn(&trial))?;
                // near the optimum objective differences drown in rounding; a
                // full Newton step is then taken on the strength of the model
                let tiny = -slope < 1e-13 * f.abs().max(1.0);
                if ft <= f + 1e-4 * t * slope || (tiny && ft.is_finite() && ft <= f + 1e-12 * f.abs().max(1.0)) {
                    accepted = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, ft)) = accepted else {
                break;
            };
            h = trial;
            f = ft;
            g = self.gradient(&as_fn(&h))?;
            kkt = projected_residual(&h, &g) / dt;
        }
        Ok(VariationalSolution {
            h_star: as_fn(&h),
            kappa_value: f,
            iterations,
            kkt_residual: kkt,
            converged: kkt <= tol,
        })
    }
}

/// Minimizer and minimum of `A λ^{−α} I + ½ λ² Q` over `λ > 0`.
fn scale_minimum(a: f64, alpha: f64, i: f64, q: f64) -> (f64, f64) {
    let lambda = (alpha * a * i / q).powf(1.0 / (alpha + 2.0));
    (lambda, a * lambda.powf(-alpha) * i + 0.5 * lambda * lambda * q)
}

fn projected_residual(h: &[f64], g: &[f64]) -> f64 {
    h.iter()
        .zip(g)
        .map(|(&v, &gi)| if v <= FLOOR && gi > 0.0 { 0.0 } else { gi.abs() })
        .fold(0.0, f64::max)
}

/// `Σ_k Δτ / (sup_{[τ_{k−1}, τ_k]} f)_+^α` on the uniform partition of `f`'s grid.
///
/// The sup over a cell is taken over its two endpoints, with `f(0) = 0`.
/// Cells whose sup is not positive contribute `+∞`.
pub fn discretized_functional_s(f: &GridFunction, alpha: f64) -> f64 {
    let dt = f.grid().dt();
    let mut prev = 0.0f64;
    let mut acc = 0.0;
    for &v in f.values() {
        let sup = prev.max(v);
        if !(sup > 0.0) {
            return f64::INFINITY;
        }
        acc += dt * sup.powf(-alpha);
        prev = v;
    }
    acc
}
