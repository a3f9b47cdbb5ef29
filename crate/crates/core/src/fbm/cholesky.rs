use nalgebra::DMatrix;

use super::{fbm_cov_unchecked, HurstParam, SampledPath, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::cholesky_with_jitter;
use crate::rng::{fill_normals, SeedSpec};

/// Largest grid accepted by default; setup cost is cubic in `n_steps`.
pub const DEFAULT_CHOLESKY_CAP: usize = 4096;

/// Exact FBM sampler from the Cholesky factor of the grid covariance.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: TimeGrid,
    /// Row-major packed lower triangle of the factor over `t_1..t_n`.
    factor: Vec<f64>,
}

impl CholeskySampler {
    pub fn new(h: HurstParam, grid: TimeGrid) -> Result<Self> {
        Self::with_cap(h, grid, DEFAULT_CHOLESKY_CAP)
    }

    pub fn with_cap(h: HurstParam, grid: TimeGrid, cap: usize) -> Result<Self> {
        let n = grid.n_steps();
        if n > cap {
            return Err(Error::invalid(format!(
                "Cholesky sampler limited to {cap} steps, got {n}"
            )));
        }
        let t = grid.times();
        let cov = DMatrix::from_fn(n, n, |i, j| fbm_cov_unchecked(h.value(), t[i + 1], t[j + 1]));
        let l = cholesky_with_jitter(cov)?.unpack();
        let mut factor = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                factor.push(l[(i, j)]);
            }
        }
        Ok(Self { grid, factor })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample(&self, seed: SeedSpec) -> SampledPath {
        let n = self.grid.n_steps();
        let mut z = vec![0.0; n];
        fill_normals(&mut seed.rng(), &mut z);
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut row = 0;
        for i in 0..n {
            let r = &self.factor[row..row + i + 1];
            values.push(r.iter().zip(&z).map(|(a, b)| a * b).sum());
            row += i + 1;
        }
        SampledPath {
            grid: self.grid,
            values,
        }
    }
}
