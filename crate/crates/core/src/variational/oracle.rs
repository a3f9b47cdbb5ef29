//! Continuum reference for `H = 1/2`, where `‖h‖²_H = ∫ h′²`.
//!
//! The minimizer of `∫₀¹ (A h^{−α} + ½ h′²) dt` with `h(0) = 0`, `h′(1) = 0`
//! and `α = 2/p` solves `h″ = −α A h^{−α−1}`. Since `h′(0) = ∞`, the
//! trajectory is parameterized by its end value `s = h(1)` instead: the first
//! integral `½ h′² − A h^{−α} = −A s^{−α}` gives the time to climb from 0 to
//! `s` and the cost along the way as integrals over `h`. After `h = s u`,
//! `u^α = sin² φ`, `φ = ψ^{1/(p−1)}` both integrands are smooth and are
//! integrated with classical RK4. Bisection on `s` then enforces `t(s) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature steps; halving the step changes the value by far less than 1e−8.
const STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElOracle {
    /// Objective value of the continuum minimizer.
    pub value: f64,
    /// End value `h(1)`.
    pub h_end: f64,
    /// `|t(s) − 1|` at the accepted `s`.
    pub residual: f64,
    pub bisections: usize,
}

/// `(∫ dt/dψ, ∫ dJ/dψ)` over the whole trajectory, without the `s`-dependent prefactors.
fn shape_integrals(p: f64, steps: usize) -> (f64, f64) {
    let k = 1.0 / (p - 1.0);
    let psi_end = std::f64::consts::FRAC_PI_2.powf(1.0 / k);
    // dφ/dψ · sin^{p−2} φ = k (sin φ / φ)^{p−2}, smooth at ψ = 0
    let rate = |psi: f64| -> (f64, f64) {
        let phi = psi.powf(k);
        let sinc = if phi < 1e-8 { 1.0 - phi * phi / 6.0 } else { phi.sin() / phi };
        let core = p * k * sinc.powf(p - 2.0);
        let s2 = phi.sin().powi(2);
        (core * s2, core * (2.0 - s2))
    };
    let dpsi = psi_end / steps as f64;
    let (mut t, mut j) = (0.0, 0.0);
    for i in 0..steps {
        let x = i as f64 * dpsi;
        // the right-hand side does not depend on the state, so each RK4 stage
        // reduces to an evaluation at the start, middle or end of the step
        let k1 = rate(x);
        let k2 = rate(x + 0.5 * dpsi);
        let k4 = rate(x + dpsi);
        t += dpsi / 6.0 * (k1.0 + 4.0 * k2.0 + k4.0);
        j += dpsi / 6.0 * (k1.1 + 4.0 * k2.1 + k4.1);
    }
    (t, j)
}

fn oracle_with_steps(p: f64, a: f64, tol: f64, steps: usize) -> Result<ElOracle> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("the Brownian oracle needs p > 1, got {p}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("A must be positive, got {a}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let alpha = 2.0 / p;
    let (it, ij) = shape_integrals(p, steps);
    let root2a = (2.0 * a).sqrt();
    let time = |s: f64| s.powf(1.0 + alpha / 2.0) / root2a * it;

    let (mut lo, mut hi) = (1e-6, 1.0);
    while time(hi) < 1.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Oracle(format!("no bracket: t({hi}) = {} < 1", time(hi))));
        }
    }
    if time(lo) > 1.0 {
        return Err(Error::Oracle(format!("no bracket: t({lo}) = {} > 1", time(lo))));
    }
    let mut bisections = 0;
    let mut s = 0.5 * (lo + hi);
    while (time(s) - 1.0).abs() > tol {
        if bisections == 200 {
            return Err(Error::Oracle(format!(
                "bisection stalled at s = {s}, residual {:e}",
                (time(s) - 1.0).abs()
            )));
        }
        if time(s) < 1.0 {
            lo = s;
        } else {
            hi = s;
        }
        s = 0.5 * (lo + hi);
        bisections += 1;
    }
    let value = a * s.powf(1.0 - alpha / 2.0) / root2a * ij;
    Ok(ElOracle {
        value,
        h_end: s,
        residual: (time(s) - 1.0).abs(),
        bisections,
    })
}

/// Objective value of the continuum minimizer for `H = 1/2`, `α = 2/p`.
pub fn euler_lagrange_oracle_brownian(p: f64, a: f64, tol: f64) -> Result<ElOracle> {
    oracle_with_steps(p, a, tol, STEPS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;

    const A: f64 = std::f64::consts::PI * std::f64::consts::PI / 8.0;

    #[test]
    fn end_value_matches_beta_integral() {
        // s^{(α+2)/2} = √(2A) / I with I = B(1/α + 1/2, 1/2) / α
        for p in [1.5, 2.0, 3.0] {
            let alpha = 2.0 / p;
            let o = euler_lagrange_oracle_brownian(p, A, 1e-13).unwrap();
            let i = beta(1.0 / alpha + 0.5, 0.5) / alpha;
            let s = ((2.0 * A).sqrt() / i).powf(2.0 / (alpha + 2.0));
            assert!((o.h_end - s).abs() < 1e-9 * s, "p={p}: {} vs {s}", o.h_end);
            assert!(o.residual <= 1e-13);
        }
    }

    #[test]
    fn step_halving_is_invisible() {
        for p in [1.5, 2.0, 3.0] {
            let a = oracle_with_steps(p, A, 1e-13, STEPS).unwrap().value;
            let b = oracle_with_steps(p, A, 1e-13, 2 * STEPS).unwrap().value;
            assert!((a - b).abs() < 1e-4 * a);
        }
    }

    #[test]
    fn brownian_parabola_value() {
        let o = euler_lagrange_oracle_brownian(2.0, A, 1e-12).unwrap();
        assert!((o.value - 3.70110).abs() < 1e-4, "{}", o.value);
    }

    #[test]
    fn homogeneity_in_a() {
        for p in [1.5, 2.0, 3.0] {
            let alpha = 2.0 / p;
            let v1 = euler_lagrange_oracle_brownian(p, 1.0, 1e-13).unwrap().value;
            let v2 = euler_lagrange_oracle_brownian(p, 2.0, 1e-13).unwrap().value;
            assert!((v2 / v1 - 2f64.powf(2.0 / (alpha + 2.0))).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_cone_and_bad_inputs() {
        assert!(euler_lagrange_oracle_brownian(1.0, A, 1e-10).is_err());
        assert!(euler_lagrange_oracle_brownian(2.0, -1.0, 1e-10).is_err());
        assert!(euler_lagrange_oracle_brownian(2.0, 1.0, 0.0).is_err());
    }
}
