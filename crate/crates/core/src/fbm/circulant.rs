use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{fgn_autocovariance, HurstParam, SampledPath, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{SeedSpec, StreamRng};
use rand::Rng;
use rand_distr::StandardNormal;

/// Negative embedding eigenvalues down to `-EIGEN_CLAMP_REL * λ_max` are clamped to zero.
pub const EIGEN_CLAMP_REL: f64 = 1e-9;

/// Davies–Harte sampler: fractional Gaussian noise from a circulant embedding
/// of size `2n`, summed and rescaled by `dt^H`.
///
/// Each FFT yields two independent paths (real and imaginary parts);
/// [`sample`](Self::sample) returns the first of the pair.
#[derive(Clone)]
pub struct CirculantSampler {
    grid: TimeGrid,
    hurst: HurstParam,
    /// `sqrt(λ_k / m)` for the embedding eigenvalues `λ_k`.
    sqrt_eig: Vec<f64>,
    min_eigenvalue: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("grid", &self.grid)
            .field("hurst", &self.hurst)
            .field("embedding", &self.sqrt_eig.len())
            .finish()
    }
}

/// Reusable buffers for [`CirculantSampler::fill_pair`].
#[derive(Debug, Default)]
pub struct CirculantScratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl CirculantSampler {
    pub fn new(hurst: HurstParam, grid: TimeGrid) -> Result<Self> {
        let n = grid.n_steps();
        let m = 2 * n;
        let mut row: Vec<Complex64> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex64::new(fgn_autocovariance(hurst, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        if min < -EIGEN_CLAMP_REL * max {
            return Err(Error::EmbeddingFailure {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        let sqrt_eig = eig.iter().map(|&l| (l.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self {
            grid,
            hurst,
            sqrt_eig,
            min_eigenvalue: min,
            fft,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Most negative embedding eigenvalue before clamping.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn sample(&self, seed: SeedSpec) -> SampledPath {
        self.sample_pair(seed).0
    }

    pub fn sample_pair(&self, seed: SeedSpec) -> (SampledPath, SampledPath) {
        let len = self.grid.n_steps() + 1;
        let (mut a, mut b) = (vec![0.0; len], vec![0.0; len]);
        self.fill_pair(&mut seed.rng(), &mut CirculantScratch::default(), &mut a, &mut b);
        (
            SampledPath {
                grid: self.grid,
                values: a,
            },
            SampledPath {
                grid: self.grid,
                values: b,
            },
        )
    }

    /// Writes two independent paths (`n_steps + 1` values each) drawn from `rng`.
    pub fn fill_pair(&self, rng: &mut StreamRng, scratch: &mut CirculantScratch, a: &mut [f64], b: &mut [f64]) {
        let n = self.grid.n_steps();
        let m = self.sqrt_eig.len();
        scratch.buf.resize(m, Complex64::default());
        for z in scratch.buf.iter_mut() {
            z.re = rng.sample(StandardNormal);
        }
        for (z, s) in scratch.buf.iter_mut().zip(&self.sqrt_eig) {
            z.im = rng.sample(StandardNormal);
            *z *= *s;
        }
        scratch
            .fft
            .resize(self.fft.get_inplace_scratch_len(), Complex64::default());
        self.fft.process_with_scratch(&mut scratch.buf, &mut scratch.fft);

        let scale = self.grid.dt().powf(self.hurst.value());
        let (mut sa, mut sb) = (0.0, 0.0);
        a[0] = 0.0;
        b[0] = 0.0;
        for i in 0..n {
            sa += scratch.buf[i].re;
            sb += scratch.buf[i].im;
            a[i + 1] = sa * scale;
            b[i + 1] = sb * scale;
        }
    }
}
