//! Survival in parabola-shaped domains `{ ‖x‖^p ≤ K (a + y) }` and decay exponents.
//!
//! The lateral process `x ∈ ℝ^d` has Hurst index `H`, the axial coordinate `y`
//! has `H̃`. Monitoring is discrete: a path survives if the constraint holds
//! at every grid point.

mod estimate;

use serde::{Deserialize, Serialize};

pub use estimate::{
    estimate_beta, estimate_persistence_exponent, estimate_polynomial_exponent, estimate_survival,
    survival_ladder, BetaEstimate, KappaPoint, LadderFit, McSettings,
};

use crate::error::{Error, Result};
use crate::fbm::{HurstParam, MultiPath, SampledPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub hurst: HurstParam,
    pub hurst_tilde: HurstParam,
    pub d: usize,
    pub p: f64,
    pub a: f64,
    /// Width `K`.
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `pH > H̃`: `log P ~ −κ T^β`.
    StretchedExponential,
    /// `pH = H̃`.
    Critical,
    /// `pH < H̃`: `P = T^{−(1−H̃)+o(1)}`.
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub beta: f64,
    pub q: f64,
}

impl ProblemParams {
    pub fn new(hurst: HurstParam, hurst_tilde: HurstParam, d: usize, p: f64, a: f64, k: f64) -> Result<Self> {
        let params = Self {
            hurst,
            hurst_tilde,
            d,
            p,
            a,
            k,
        };
        params.validate()?;
        Ok(params)
    }

    /// Same Hurst index for all coordinates.
    pub fn isotropic(hurst: HurstParam, d: usize, p: f64, a: f64, k: f64) -> Result<Self> {
        Self::new(hurst, hurst, d, p, a, k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("dimension d must be at least 1"));
        }
        for (name, v) in [("p", self.p), ("a", self.a), ("K", self.k)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `pH` compared with `H̃`, exactly.
    pub fn regime(&self) -> Regime {
        let ph = self.p * self.hurst.value();
        let ht = self.hurst_tilde.value();
        if ph > ht {
            Regime::StretchedExponential
        } else if ph < ht {
            Regime::Polynomial
        } else {
            Regime::Critical
        }
    }

    pub fn exponents(&self) -> DerivedExponents {
        let h = self.hurst.value();
        let ph = self.p * h;
        DerivedExponents {
            beta: 2.0 * (ph - self.hurst_tilde.value()) / (2.0 * ph + 1.0),
            q: (2.0 * h + 1.0) * ph / (2.0 * ph + 1.0),
        }
    }

    /// `‖x‖^p ≤ K (a + y)` for lateral position `x` and axial position `y`.
    #[inline]
    pub fn inside(&self, x: &[f64], y: f64) -> bool {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let lhs = if self.p == 2.0 {
            r2
        } else if self.p == 1.0 {
            r2.sqrt()
        } else {
            r2.powf(0.5 * self.p)
        };
        lhs <= self.k * (self.a + y)
    }
}

/// First grid index at which the path has left the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEvent {
    pub index: usize,
    /// The continuous exit time lies in `(lo, hi]`.
    pub bracket: (f64, f64),
}

fn check_shapes(mp: &MultiPath, axial: &SampledPath, params: &ProblemParams) -> Result<()> {
    if mp.grid() != axial.grid() {
        return Err(Error::invalid("lateral and axial paths live on different grids"));
    }
    if mp.dim() != params.d {
        return Err(Error::invalid(format!(
            "lateral path has dimension {}, parameters say d = {}",
            mp.dim(),
            params.d
        )));
    }
    Ok(())
}

pub fn first_exit_index(mp: &MultiPath, axial: &SampledPath, params: &ProblemParams) -> Result<Option<ExitEvent>> {
    check_shapes(mp, axial, params)?;
    let grid = mp.grid();
    let mut x = vec![0.0; params.d];
    for i in 0..=grid.n_steps() {
        for (xc, c) in x.iter_mut().zip(mp.coords()) {
            *xc = c.values()[i];
        }
        if !params.inside(&x, axial.values()[i]) {
            let lo = if i == 0 { 0.0 } else { grid.time(i - 1) };
            return Ok(Some(ExitEvent {
                index: i,
                bracket: (lo, grid.time(i)),
            }));
        }
    }
    Ok(None)
}

/// True iff the constraint holds at every grid point (closed domain).
pub fn survival_indicator(mp: &MultiPath, axial: &SampledPath, params: &ProblemParams) -> Result<bool> {
    Ok(first_exit_index(mp, axial, params)?.is_none())
}
