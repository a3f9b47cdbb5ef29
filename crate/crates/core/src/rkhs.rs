//! RKHS quadratic forms of the FBM kernel for functions sampled on a grid.
//!
//! The squared norm of a grid function is that of its minimal-norm kernel
//! interpolant, `hᵀ Σ⁻¹ h` with `Σ_ij = cov(t_i, t_j)` over `t_1..t_n`. The
//! origin is left out of `Σ`: every RKHS member vanishes there.

use std::io::{BufRead, Write};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::fbm::{fbm_cov_unchecked, HurstParam, TimeGrid};
use crate::linalg::cholesky_with_jitter;

/// Default largest grid for kernel matrices; FBM kernels lose conditioning quickly.
pub const DEFAULT_KERNEL_CAP: usize = 1024;

/// Values of a function at `t_1..t_n` of a unit-horizon grid; `h(0) = 0` is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if grid.horizon() != 1.0 {
            return Err(Error::invalid("grid functions live on the unit interval"));
        }
        if values.len() != grid.n_steps() {
            return Err(Error::invalid(format!(
                "grid function needs {} values (t_1..t_n), got {}",
                grid.n_steps(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let values = (1..=grid.n_steps()).map(|i| f(grid.time(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: TimeGrid) -> Result<Self> {
        Self::new(grid, vec![0.0; grid.n_steps()])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Values on every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Option<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().skip(factor - 1).step_by(factor).copied().collect();
        Some(Self { grid, values })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,h")?;
        writeln!(w, "0,0")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.time(i + 1), v)?;
        }
        Ok(())
    }

    /// Reads `t,h` rows written by [`write_csv`](Self::write_csv); the grid is inferred.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::io("reading grid function", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Format(format!("short row '{line}'")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number in '{line}': {e}")))
            };
            rows.push((next()?, next()?));
        }
        if rows.first().map(|r| r.0) == Some(0.0) {
            rows.remove(0);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::Format("no grid points".into()));
        }
        let grid = TimeGrid::unit(n)?;
        for (i, (t, _)) in rows.iter().enumerate() {
            if (t - grid.time(i + 1)).abs() > 1e-9 {
                return Err(Error::Format(format!("row {i}: t = {t} is not on a uniform unit grid")));
            }
        }
        Self::new(grid, rows.into_iter().map(|r| r.1).collect())
    }
}

/// FBM covariance over `t_1..t_n` with its Cholesky factor computed up front.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    hurst: HurstParam,
    grid: TimeGrid,
    entries: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl KernelMatrix {
    pub fn new(hurst: HurstParam, grid: TimeGrid) -> Result<Self> {
        Self::with_cap(hurst, grid, DEFAULT_KERNEL_CAP)
    }

    pub fn with_cap(hurst: HurstParam, grid: TimeGrid, cap: usize) -> Result<Self> {
        if grid.horizon() != 1.0 {
            return Err(Error::invalid("kernel matrices live on the unit interval"));
        }
        let n = grid.n_steps();
        if n > cap {
            return Err(Error::invalid(format!("kernel matrix limited to n = {cap}, got {n}")));
        }
        let t = grid.times();
        let entries = DMatrix::from_fn(n, n, |i, j| fbm_cov_unchecked(hurst.value(), t[i + 1], t[j + 1]));
        let chol = cholesky_with_jitter(entries.clone())?;
        Ok(Self {
            hurst,
            grid,
            entries,
            chol,
        })
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `Σ v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.entries * DVector::from_column_slice(v)).as_slice().to_vec()
    }

    /// `Σ⁻¹ v` through the cached factorization.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.chol.solve(&DVector::from_column_slice(v)).as_slice().to_vec()
    }

    /// Explicit `Σ⁻¹`.
    pub fn precision(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    fn check(&self, h: &GridFunction) -> Result<()> {
        if *h.grid() != self.grid {
            return Err(Error::invalid(format!(
                "grid mismatch: function has n = {}, kernel has n = {}",
                h.grid().n_steps(),
                self.grid.n_steps()
            )));
        }
        Ok(())
    }
}

/// `hᵀ Σ⁻¹ h`, the squared RKHS norm of the minimal-norm interpolant of `h`.
pub fn rkhs_norm_sq(h: &GridFunction, kernel: &KernelMatrix) -> Result<f64> {
    kernel.check(h)?;
    // ‖L⁻¹h‖² with Σ = L Lᵀ
    let mut y = DVector::from_column_slice(h.values());
    kernel.chol.l_dirty().solve_lower_triangular_mut(&mut y);
    Ok(y.norm_squared())
}

/// Discrete Dirichlet energy `Σ (h_i − h_{i−1})² / Δt` with `h_0 = 0`.
pub fn dirichlet_energy(h: &GridFunction) -> f64 {
    let dt = h.grid().dt();
    let mut prev = 0.0;
    let mut acc = 0.0;
    for &v in h.values() {
        acc += (v - prev) * (v - prev);
        prev = v;
    }
    acc / dt
}
