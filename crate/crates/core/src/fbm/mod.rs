//! Fractional Brownian motion and Riemann–Liouville processes on uniform grids.
//!
//! Three samplers are provided:
//!
//! * [`CholeskySampler`]: exact, O(n³) setup, reference implementation.
//! * [`CirculantSampler`]: exact Davies–Harte circulant embedding, O(n log n).
//! * [`RiemannLiouvilleSampler`]: discretized one-sided moving average
//!   `R(t) = ∫₀ᵗ (t-u)^{H-1/2} dW(u)`.
//!
//! Samplers are immutable plans; `sample(seed)` is a pure function of the seed.

mod cholesky;
mod circulant;
pub mod io;
mod rl;

use serde::{Deserialize, Serialize};

pub use cholesky::{CholeskySampler, DEFAULT_CHOLESKY_CAP};
pub use circulant::{CirculantSampler, CirculantScratch, EIGEN_CLAMP_REL};
pub use rl::{RiemannLiouvilleSampler, RlScratch};

use crate::error::{Error, Result};
use crate::rng::SeedSpec;

/// Hurst index, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::invalid(format!(
                "Hurst parameter must lie strictly in (0, 1), got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

/// Uniform grid `t_i = i * horizon / n_steps`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn unit(n_steps: usize) -> Result<Self> {
        Self::new(1.0, n_steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Every `factor`-th point of this grid, or `None` when `factor` does not divide `n_steps`.
    pub fn coarsen(&self, factor: usize) -> Option<Self> {
        (factor > 0 && self.n_steps % factor == 0).then(|| Self {
            horizon: self.horizon,
            n_steps: self.n_steps / factor,
        })
    }

    /// The first `n_steps` steps of this grid.
    pub fn truncate(&self, n_steps: usize) -> Option<Self> {
        (n_steps > 0 && n_steps <= self.n_steps).then(|| Self {
            horizon: self.time(n_steps),
            n_steps,
        })
    }
}

/// One realization of a scalar process on a grid; `values[0] == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return Err(Error::invalid(format!(
                "path has {} values, grid needs {}",
                values.len(),
                grid.n_steps() + 1
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::invalid("paths must start at the origin"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coarsen(&self, factor: usize) -> Option<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Some(Self { grid, values })
    }

    pub fn truncate(&self, n_steps: usize) -> Option<Self> {
        let grid = self.grid.truncate(n_steps)?;
        Some(Self {
            grid,
            values: self.values[..=n_steps].to_vec(),
        })
    }
}

/// `d` independent coordinate paths on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPath {
    grid: TimeGrid,
    coords: Vec<SampledPath>,
}

impl MultiPath {
    pub fn new(coords: Vec<SampledPath>) -> Result<Self> {
        let first = coords
            .first()
            .ok_or_else(|| Error::invalid("a multipath needs at least one coordinate"))?;
        let grid = *first.grid();
        if coords.iter().any(|c| *c.grid() != grid) {
            return Err(Error::invalid("coordinate paths must share one grid"));
        }
        Ok(Self { grid, coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn coords(&self) -> &[SampledPath] {
        &self.coords
    }

    /// Euclidean norm of the vector at grid index `i`.
    pub fn norm_at(&self, i: usize) -> f64 {
        self.coords
            .iter()
            .map(|c| c.values[i] * c.values[i])
            .sum::<f64>()
            .sqrt()
    }

    pub fn coarsen(&self, factor: usize) -> Option<Self> {
        let coords = self
            .coords
            .iter()
            .map(|c| c.coarsen(factor))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            grid: *coords[0].grid(),
            coords,
        })
    }

    pub fn truncate(&self, n_steps: usize) -> Option<Self> {
        let coords = self
            .coords
            .iter()
            .map(|c| c.truncate(n_steps))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            grid: *coords[0].grid(),
            coords,
        })
    }
}

/// Covariance `½(s^{2H} + t^{2H} − |s−t|^{2H})` of one FBM coordinate.
pub fn fbm_covariance(h: HurstParam, s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::invalid(format!("times must be non-negative, got ({s}, {t})")));
    }
    Ok(fbm_cov_unchecked(h.value(), s, t))
}

pub(crate) fn fbm_cov_unchecked(h: f64, s: f64, t: f64) -> f64 {
    let e = 2.0 * h;
    0.5 * (s.powf(e) + t.powf(e) - (s - t).abs().powf(e))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(h: HurstParam, lag: usize) -> f64 {
    let e = 2.0 * h.value();
    let k = lag as f64;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Which exact FBM sampler to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FbmMethod {
    Cholesky,
    #[default]
    Circulant,
}

pub fn sample_fbm_cholesky(h: HurstParam, grid: TimeGrid, seed: SeedSpec) -> Result<SampledPath> {
    Ok(CholeskySampler::new(h, grid)?.sample(seed))
}

pub fn sample_fbm_circulant(h: HurstParam, grid: TimeGrid, seed: SeedSpec) -> Result<SampledPath> {
    Ok(CirculantSampler::new(h, grid)?.sample(seed))
}

pub fn sample_riemann_liouville(h: HurstParam, grid: TimeGrid, seed: SeedSpec) -> SampledPath {
    RiemannLiouvilleSampler::new(h, grid).sample(seed)
}

/// A `d`-dimensional FBM; coordinate `c` comes from stream `seed.stream_index + c`.
pub fn sample_multipath(
    h: HurstParam,
    d: usize,
    grid: TimeGrid,
    seed: SeedSpec,
    method: FbmMethod,
) -> Result<MultiPath> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let coords = match method {
        FbmMethod::Cholesky => {
            let s = CholeskySampler::new(h, grid)?;
            (0..d).map(|c| s.sample(seed.offset(c as u64))).collect()
        }
        FbmMethod::Circulant => {
            let s = CirculantSampler::new(h, grid)?;
            (0..d).map(|c| s.sample(seed.offset(c as u64))).collect()
        }
    };
    MultiPath::new(coords)
}
