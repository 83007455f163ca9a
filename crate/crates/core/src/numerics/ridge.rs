//! Regularized least squares in the two standard forms.
//!
//! Solves `min ||H b - T||^2 + ||b||^2 / C`. The primal normal equations
//! `(H^T H + I/C) b = H^T T` are used when the unknown dimension is at
//! most the sample count; otherwise the dual form
//! `b = H^T (H H^T + I/C)^{-1} T` keeps the solved system at sample size.
//! Both systems are symmetric positive definite for any `C > 0`.

use crate::error::{Error, Result};
use crate::numerics::matrix::{Cholesky, Matrix};

/// Ridge solution of `H b = T` with regularization strength `C`.
///
/// Larger `C` means weaker regularization; as `C -> inf` the solution
/// approaches the least-squares (or minimum-norm interpolating) one.
pub fn ridge_solve(h: &Matrix, t: &Matrix, c: f64) -> Result<Matrix> {
    validate(h, t, c)?;
    if h.cols() <= h.rows() {
        ridge_solve_primal(h, t, c)
    } else {
        ridge_solve_dual(h, t, c)
    }
}

/// Primal form: `(H^T H + I/C) b = H^T T`. Solves an LxL system.
pub fn ridge_solve_primal(h: &Matrix, t: &Matrix, c: f64) -> Result<Matrix> {
    validate(h, t, c)?;
    let mut gram = h.transpose_matmul(h)?;
    gram.add_diagonal(1.0 / c);
    let rhs = h.transpose_matmul(t)?;
    Cholesky::factor(&gram)?.solve(&rhs)
}

/// Dual form: `b = H^T (H H^T + I/C)^{-1} T`. Solves an NxN system.
pub fn ridge_solve_dual(h: &Matrix, t: &Matrix, c: f64) -> Result<Matrix> {
    validate(h, t, c)?;
    let mut gram = h.matmul_transpose(h)?;
    gram.add_diagonal(1.0 / c);
    let z = Cholesky::factor(&gram)?.solve(t)?;
    h.transpose_matmul(&z)
}

fn validate(h: &Matrix, t: &Matrix, c: f64) -> Result<()> {
    if h.rows() != t.rows() {
        return Err(Error::argument(format!(
            "ridge: H has {} rows but T has {}",
            h.rows(),
            t.rows()
        )));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::argument(format!(
            "ridge: regularization C must be a positive finite value, got {c}"
        )));
    }
    h.ensure_finite("ridge H")?;
    t.ensure_finite("ridge T")?;
    Ok(())
}
