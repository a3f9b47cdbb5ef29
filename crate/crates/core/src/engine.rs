//! Path-by-path Monte Carlo driver shared by the exit and small-deviation estimators.
//!
//! A run simulates `n_paths` independent vectors of coordinate processes
//! ("slots") on one grid and hands each path to a visitor step by step, so
//! estimators can stop a path as soon as its fate is known.
//!
//! Path `j`, slot `s` draws from stream `base + j·k + s` (`k` slots). Samplers
//! that produce two paths per transform serve paths `j` and `j + 1` (with `j`
//! even) from the stream of path `j`. Chunks hold an even number of paths and
//! their boundaries depend only on `n_paths`, so results do not depend on the
//! worker count.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fbm::{CirculantSampler, CirculantScratch, HurstParam, RiemannLiouvilleSampler, RlScratch, TimeGrid};
use crate::parallel::{map_chunks, Workers};
use crate::rng::{SeedSpec, StreamRng};

const CHUNK: usize = 256;

/// Which Gaussian process a slot samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SlotProcess {
    Fbm(HurstParam),
    /// Riemann–Liouville process multiplied by `scale`.
    RiemannLiouville(HurstParam, f64),
}

enum Slot {
    /// Independent Gaussian increments generated on demand.
    Brownian { sd: f64 },
    Circulant(CirculantSampler),
    Rl(RiemannLiouvilleSampler, f64),
}

pub(crate) struct Plan {
    grid: TimeGrid,
    slots: Vec<Slot>,
}

impl Plan {
    pub(crate) fn new(grid: TimeGrid, processes: &[SlotProcess]) -> Result<Self> {
        let slots = processes
            .iter()
            .map(|p| {
                Ok(match *p {
                    SlotProcess::Fbm(h) if h.is_brownian() => Slot::Brownian { sd: grid.dt().sqrt() },
                    SlotProcess::Fbm(h) => Slot::Circulant(CirculantSampler::new(h, grid)?),
                    SlotProcess::RiemannLiouville(h, scale) => Slot::Rl(RiemannLiouvilleSampler::new(h, grid), scale),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, slots })
    }

    /// Runs `visit` on every path and returns its results in path order.
    pub(crate) fn run<R, F>(&self, n_paths: usize, seed: SeedSpec, workers: Workers, visit: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(&mut PathCursor<'_>) -> R + Sync,
    {
        let chunks = map_chunks(n_paths, CHUNK, workers, |range| self.run_chunk(range, seed, &visit))?;
        Ok(chunks.into_iter().flatten().collect())
    }

    fn run_chunk<R, F>(&self, range: std::ops::Range<usize>, seed: SeedSpec, visit: &F) -> Vec<R>
    where
        F: Fn(&mut PathCursor<'_>) -> R,
    {
        let len = self.grid.n_steps() + 1;
        let k = self.slots.len();
        let mut bufs: Vec<[Vec<f64>; 2]> = self
            .slots
            .iter()
            .map(|s| match s {
                Slot::Brownian { .. } => [Vec::new(), Vec::new()],
                _ => [vec![0.0; len], vec![0.0; len]],
            })
            .collect();
        let mut circ = CirculantScratch::default();
        let mut rl = RlScratch::default();
        let mut out = Vec::with_capacity(range.len());
        for j in range {
            let stream = |s: usize| seed.offset((j * k + s) as u64);
            if j % 2 == 0 {
                for (s, slot) in self.slots.iter().enumerate() {
                    let [a, b] = &mut bufs[s];
                    match slot {
                        Slot::Brownian { .. } => {}
                        Slot::Circulant(c) => c.fill_pair(&mut stream(s).rng(), &mut circ, a, b),
                        Slot::Rl(r, scale) => {
                            r.fill_pair(&mut stream(s).rng(), &mut rl, a, b);
                            if *scale != 1.0 {
                                a.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= scale);
                            }
                        }
                    }
                }
            }
            let which = j % 2;
            let sources = self
                .slots
                .iter()
                .enumerate()
                .map(|(s, slot)| match slot {
                    Slot::Brownian { sd } => Source::Increments(stream(s).rng(), *sd),
                    _ => Source::Buffer(&bufs[s][which]),
                })
                .collect();
            let mut cursor = PathCursor {
                n: self.grid.n_steps(),
                i: 0,
                values: vec![0.0; k],
                sources,
            };
            out.push(visit(&mut cursor));
        }
        out
    }
}

enum Source<'a> {
    Increments(StreamRng, f64),
    Buffer(&'a [f64]),
}

/// Step-by-step view of one simulated path.
pub(crate) struct PathCursor<'a> {
    n: usize,
    i: usize,
    values: Vec<f64>,
    sources: Vec<Source<'a>>,
}

impl PathCursor<'_> {
    /// Index of the current grid point (0 before the first step).
    pub(crate) fn index(&self) -> usize {
        self.i
    }

    /// Advances one grid step; `None` past the end of the grid.
    pub(crate) fn step(&mut self) -> Option<&[f64]> {
        if self.i == self.n {
            return None;
        }
        self.i += 1;
        let i = self.i;
        for (v, src) in self.values.iter_mut().zip(&mut self.sources) {
            match src {
                Source::Buffer(b) => *v = b[i],
                Source::Increments(rng, sd) => {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += *sd * z;
                }
            }
        }
        Some(&self.values)
    }
}
