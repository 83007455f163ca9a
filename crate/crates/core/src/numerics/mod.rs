//! Shared deterministic numeric kernel: dense matrices, seeded RNG,
//! moment statistics, regularized least squares, nearest-rank percentile.

pub mod matrix;
pub mod ridge;
pub mod rng;
pub mod stats;

pub use matrix::{Cholesky, Matrix};
pub use ridge::{ridge_solve, ridge_solve_dual, ridge_solve_primal};
pub use rng::{derive_seed, Rng};
pub use stats::{moments, percentile, Moments, VARIANCE_EPSILON};

/// Numerically stable logistic sigmoid `1 / (1 + e^(-x))`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Elementwise sigmoid over a matrix.
pub fn sigmoid_map(m: &Matrix) -> Matrix {
    m.map(sigmoid)
}
