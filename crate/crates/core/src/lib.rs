//! Numerical laboratory for first-exit problems of multi-dimensional
//! fractional Brownian motion from parabola-shaped domains.

pub(crate) mod engine;
pub mod error;
pub mod exit;
pub mod fbm;
pub mod ladder;
pub(crate) mod linalg;
pub mod parallel;
pub mod rkhs;
pub mod rng;
pub mod smalldev;
pub mod stats;
pub mod variational;

pub use error::{Error, Result};
