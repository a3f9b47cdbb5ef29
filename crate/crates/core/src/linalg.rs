use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Relative jitter added to the diagonal when a first factorization fails.
pub const JITTER_REL: f64 = 1e-12;

/// Cholesky factorization with a single bounded jitter retry.
///
/// On failure the diagonal is shifted by `1e-12 * max(diag)` once; a second
/// failure is reported together with the jitter that was tried.
pub fn cholesky_with_jitter(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    let max_diag = m.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    match Cholesky::new(m.clone()) {
        Some(c) => Ok(c),
        None => {
            let jitter = JITTER_REL * max_diag;
            let mut shifted = m;
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            Cholesky::new(shifted).ok_or(Error::NotPositiveDefinite {
                size: n,
                jitter,
                max_diag,
            })
        }
    }
}
