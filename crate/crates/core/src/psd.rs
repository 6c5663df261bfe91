//! Conditioning of cross-correlation matrices.
//!
//! Measured cross-correlations are estimated pairwise and need not form a valid
//! correlation matrix. Generation always consumes the projection returned by
//! [`nearest_psd`].

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

/// Eigenvalues above `-PSD_TOLERANCE` count as nonnegative.
pub const PSD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PsdError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
}

fn check_symmetric(c: &DMatrix<f64>) -> Result<(), PsdError> {
    if c.nrows() != c.ncols() {
        return Err(PsdError::NotSquare {
            rows: c.nrows(),
            cols: c.ncols(),
        });
    }
    for r in 0..c.nrows() {
        for col in (r + 1)..c.ncols() {
            if c[(r, col)] != c[(col, r)] {
                return Err(PsdError::NotSymmetric { row: r, col });
            }
        }
    }
    Ok(())
}

pub fn min_eigenvalue(c: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(c.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Nearest positive-semidefinite correlation matrix by eigenvalue clipping.
///
/// Negative eigenvalues are set to zero, the matrix is rebuilt and its diagonal is
/// rescaled back to one. A matrix that is already PSD is returned unchanged.
pub fn nearest_psd(c: &DMatrix<f64>) -> Result<DMatrix<f64>, PsdError> {
    check_symmetric(c)?;
    let eig = SymmetricEigen::new(c.clone());
    if eig.eigenvalues.iter().all(|&l| l >= -PSD_TOLERANCE) {
        return Ok(c.clone());
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let n = c.nrows();
    let scale: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt()).collect();
    let mut out = DMatrix::from_fn(n, n, |r, col| rebuilt[(r, col)] / (scale[r] * scale[col]));
    for i in 0..n {
        out[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Symmetric square root `V diag(sqrt(max(l, 0))) V^T` of a PSD matrix, so that
/// `L * L^T` reproduces the input. Works for singular matrices, where a Cholesky
/// factorization would not.
pub fn sqrt_psd(c: &DMatrix<f64>) -> Result<DMatrix<f64>, PsdError> {
    check_symmetric(c)?;
    let eig = SymmetricEigen::new(c.clone());
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&root) * v.transpose())
}

/// Largest absolute elementwise difference between two matrices of equal shape.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
