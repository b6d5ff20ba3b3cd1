//! Dense numerical substrate: symmetric eigendecomposition, regularized
//! positive-definite solves and low-rank Gram factorizations.

mod cholesky;
mod eigen;
mod lowrank;

pub use cholesky::{regularized_solve, Cholesky};
pub use eigen::{sym_eig, EigenResult};
pub use lowrank::{incomplete_cholesky, incomplete_cholesky_with, woodbury_apply, LowRankFactor};

use crate::matrix::{axpy, dot, Matrix};

/// Orthonormal basis for the column span of `b` (modified Gram-Schmidt with
/// one re-orthogonalization pass). Column order and orientation are kept.
pub fn orthonormalize(b: &Matrix) -> Matrix {
    let (m, d) = b.shape();
    let mut cols: alloc::vec::Vec<alloc::vec::Vec<f64>> = (0..d).map(|j| b.col(j)).collect();
    for j in 0..d {
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj = dot(&done[i], &rest[0]);
                axpy(-proj, &done[i], &mut rest[0]);
            }
        }
        let norm = libm::sqrt(dot(&cols[j], &cols[j]));
        if norm > 0.0 {
            cols[j].iter_mut().for_each(|v| *v /= norm);
        }
    }
    Matrix::from_fn(m, d, |i, j| cols[j][i])
}

/// `‖BᵀB − I‖_F`.
pub fn orthonormality_defect(b: &Matrix) -> f64 {
    b.t_matmul(b).sub(&Matrix::identity(b.cols())).frobenius_norm()
}
