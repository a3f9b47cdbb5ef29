use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{HurstParam, SampledPath, TimeGrid};
use crate::rng::{SeedSpec, StreamRng};

/// Riemann–Liouville process `R(t) = ∫₀ᵗ (t−u)^{H−1/2} dW(u)` on a uniform grid.
///
/// `R(t_i) = Σ_{k=1..i} w_k ξ_{i−k}` with i.i.d. standard normal `ξ`. The
/// kernel is evaluated at the left end of each cell, `w_k = Δt^H k^{H−1/2}`,
/// except for the cell adjacent to `t_i`, where the kernel is singular for
/// `H < 1/2`; there `w_1² = Δt^{2H}/(2H)` is the exact second moment. For
/// `H = 1/2` this is exactly Brownian motion.
///
/// The convolution runs through an FFT of size `2n`; as with the circulant
/// sampler each transform yields two independent paths.
#[derive(Clone)]
pub struct RiemannLiouvilleSampler {
    grid: TimeGrid,
    weights: Vec<f64>,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RiemannLiouvilleSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RiemannLiouvilleSampler")
            .field("grid", &self.grid)
            .finish()
    }
}

#[derive(Debug, Default)]
pub struct RlScratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl RiemannLiouvilleSampler {
    pub fn new(hurst: HurstParam, grid: TimeGrid) -> Self {
        let h = hurst.value();
        let n = grid.n_steps();
        let m = 2 * n;
        let scale = grid.dt().powf(h);
        // weights[k - 1] = w_k
        let weights: Vec<f64> = (1..=n)
            .map(|k| {
                if k == 1 {
                    scale / (2.0 * h).sqrt()
                } else {
                    scale * (k as f64).powf(h - 0.5)
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut kernel_hat = vec![Complex64::default(); m];
        for (k, w) in weights.iter().enumerate() {
            kernel_hat[k + 1].re = *w;
        }
        forward.process(&mut kernel_hat);
        // fold the inverse transform's 1/m into the kernel
        for c in kernel_hat.iter_mut() {
            *c /= m as f64;
        }
        Self {
            grid,
            weights,
            kernel_hat,
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Convolution weights `w_1..w_n`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact covariance of the discretized process at grid indices `i`, `j`.
    pub fn discrete_covariance(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        // Σ_{l < lo} w_{lo-l} w_{hi-l}
        (1..=lo)
            .map(|k| self.weights[k - 1] * self.weights[hi - lo + k - 1])
            .sum()
    }

    pub fn sample(&self, seed: SeedSpec) -> SampledPath {
        self.sample_pair(seed).0
    }

    pub fn sample_pair(&self, seed: SeedSpec) -> (SampledPath, SampledPath) {
        let len = self.grid.n_steps() + 1;
        let (mut a, mut b) = (vec![0.0; len], vec![0.0; len]);
        self.fill_pair(&mut seed.rng(), &mut RlScratch::default(), &mut a, &mut b);
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

    /// Draws `n` normals for the first path, then `n` for the second.
    pub fn fill_pair(&self, rng: &mut StreamRng, scratch: &mut RlScratch, a: &mut [f64], b: &mut [f64]) {
        let n = self.grid.n_steps();
        let m = 2 * n;
        scratch.buf.clear();
        scratch.buf.resize(m, Complex64::default());
        for z in &mut scratch.buf[..n] {
            z.re = rng.sample(StandardNormal);
        }
        for z in &mut scratch.buf[..n] {
            z.im = rng.sample(StandardNormal);
        }
        let need = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        scratch.fft.resize(need, Complex64::default());
        self.forward.process_with_scratch(&mut scratch.buf, &mut scratch.fft);
        for (z, k) in scratch.buf.iter_mut().zip(&self.kernel_hat) {
            *z *= *k;
        }
        self.inverse.process_with_scratch(&mut scratch.buf, &mut scratch.fft);
        a[0] = 0.0;
        b[0] = 0.0;
        for i in 1..=n {
            a[i] = scratch.buf[i].re;
            b[i] = scratch.buf[i].im;
        }
    }
}
