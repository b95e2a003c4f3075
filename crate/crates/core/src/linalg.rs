//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, Dyn, SymmetricEigen};

use crate::{Error, Matrix, Result, Vector};

/// Default relative threshold separating zero from positive eigenvalues.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_symmetric(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim("square matrix", m.nrows(), m.ncols()));
    }
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Smallest eigenvalue of `m` strictly above `rank_tol · λ_max`.
///
/// `m` must be symmetric (within 1e-12) and positive semidefinite up to
/// round-off. This is the `σ̃_min(AᵀA)` used by the penalty calculus.
pub fn smallest_positive_eigenvalue(m: &Matrix, rank_tol: f64) -> Result<f64> {
    check_symmetric(m)?;
    let values = symmetric_eigenvalues(m);
    let largest = values.last().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return Err(Error::AllZeroMatrix);
    }
    let threshold = rank_tol * largest;
    values.into_iter().find(|&v| v > threshold).ok_or(Error::AllZeroMatrix)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: Matrix, context: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::invalid("matrix", format!("{context} is not positive definite")))
}

/// Solves with one step of iterative refinement.
pub fn refined_solve(chol: &Cholesky<f64, Dyn>, m: &Matrix, rhs: &Vector) -> Vector {
    let mut x = chol.solve(rhs);
    let residual = rhs - m * &x;
    x += chol.solve(&residual);
    x
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &Matrix, b: &Vector) -> Vector {
    let svd = a.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.solve(b, tol).unwrap_or_else(|_| Vector::zeros(a.ncols()))
}
