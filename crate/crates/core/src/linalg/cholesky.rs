use crate::error::{check_positive, Error, Result};
use crate::matrix::{axpy, dot, Matrix};

/// Lower Cholesky factor `L` of a symmetric positive definite matrix `A = LLᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "Cholesky::factor (square matrix)",
                expected: n,
                found: a.cols(),
            });
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.row(j)[..j];
            let pivot = a[(j, j)] - dot(lj, lj);
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Factorization { index: j, value: pivot });
            }
            let diag = libm::sqrt(pivot);
            l[(j, j)] = diag;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / diag;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Solves `A·S = B` for a block of right-hand sides.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lower.rows();
        assert_eq!(b.rows(), n, "Cholesky::solve shape mismatch");
        let k = b.cols();
        let l = &self.lower;

        // L·Y = B, row by row.
        let mut y = b.clone();
        for i in 0..n {
            for p in 0..i {
                let lip = l[(i, p)];
                if lip != 0.0 {
                    let (done, cur) = y.as_rows_split(i);
                    axpy(-lip, &done[p * k..(p + 1) * k], &mut cur[..k]);
                }
            }
            let inv = 1.0 / l[(i, i)];
            y.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }

        // Lᵀ·S = Y, from the bottom.
        for i in (0..n).rev() {
            let inv = 1.0 / l[(i, i)];
            y.row_mut(i).iter_mut().for_each(|v| *v *= inv);
            let (head, cur) = y.as_rows_split(i);
            let xi = &cur[..k];
            for p in 0..i {
                let lip = l[(i, p)];
                if lip != 0.0 {
                    axpy(-lip, xi, &mut head[p * k..(p + 1) * k]);
                }
            }
        }
        y
    }
}

/// Solves `(G + c·I)·S = B` through a Cholesky factorization of `G + c·I`.
///
/// `G` must be symmetric positive semi-definite and `c > 0`, so the shifted
/// matrix is positive definite; a factorization failure means the shift is
/// too small for the conditioning of `G`.
pub fn regularized_solve(g: &Matrix, c: f64, b: &Matrix) -> Result<Matrix> {
    check_positive("regularization", c)?;
    if g.rows() != g.cols() {
        return Err(Error::DimensionMismatch {
            context: "regularized_solve (square matrix)",
            expected: g.rows(),
            found: g.cols(),
        });
    }
    if b.rows() != g.rows() {
        return Err(Error::DimensionMismatch {
            context: "regularized_solve (right-hand side rows)",
            expected: g.rows(),
            found: b.rows(),
        });
    }
    if !g.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("regularized_solve input"));
    }
    let mut shifted = g.clone();
    shifted.add_diagonal(c);
    Ok(Cholesky::factor(&shifted)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_psd(n: usize, rank: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed);
        let u = Matrix::from_fn(n, rank, |_, _| r.random::<f64>() * 2.0 - 1.0);
        u.matmul_t(&u)
    }

    /// Gauss-Jordan inverse with partial pivoting, independent of the
    /// Cholesky route.
    fn dense_inverse(a: &Matrix) -> Matrix {
        let n = a.rows();
        let mut work = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                a[(i, j)]
            } else if j - n == i {
                1.0
            } else {
                0.0
            }
        });
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| work[(x, col)].abs().total_cmp(&work[(y, col)].abs()))
                .unwrap();
            for j in 0..2 * n {
                let t = work[(col, j)];
                work[(col, j)] = work[(piv, j)];
                work[(piv, j)] = t;
            }
            let p = work[(col, col)];
            for j in 0..2 * n {
                work[(col, j)] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = work[(i, col)];
                    for j in 0..2 * n {
                        work[(i, j)] -= f * work[(col, j)];
                    }
                }
            }
        }
        Matrix::from_fn(n, n, |i, j| work[(i, j + n)])
    }

    #[test]
    fn scaled_identity_cases() {
        let b = Matrix::from_rows(&[[1.0, -2.0], [4.0, 0.5], [3.0, 3.0]]).unwrap();
        let s = regularized_solve(&Matrix::zeros(3, 3), 2.0, &b).unwrap();
        assert!(s.sub(&b.scaled(0.5)).max_abs() < 1e-15);
        let s = regularized_solve(&Matrix::identity(3), 1.0, &b).unwrap();
        assert!(s.sub(&b.scaled(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn matches_dense_inverse() {
        for seed in 0..5 {
            let g = random_psd(5, 3 + seed as usize % 3, seed);
            let mut r = rng::seeded(50 + seed);
            let b = Matrix::from_fn(5, 2, |_, _| r.random::<f64>() - 0.5);
            let c = 0.1;
            let s = regularized_solve(&g, c, &b).unwrap();
            let mut shifted = g.clone();
            shifted.add_diagonal(c);
            let oracle = dense_inverse(&shifted).matmul(&b);
            assert!(s.sub(&oracle).frobenius_norm() <= 1e-8 * oracle.frobenius_norm());
            let resid = shifted.matmul(&s).sub(&b);
            assert!(resid.frobenius_norm() <= 1e-8 * b.frobenius_norm());
        }
    }

    #[test]
    fn residual_on_larger_gram() {
        let mut r = rng::seeded(3);
        let x = Matrix::from_fn(120, 4, |_, _| r.random::<f64>() * 2.0 - 1.0);
        let g = crate::kernels::gram(&x, 1.0).unwrap();
        let b = Matrix::from_fn(120, 3, |_, _| r.random::<f64>() - 0.5);
        let c = 120.0 * 1e-7;
        let s = regularized_solve(&g, c, &b).unwrap();
        let mut shifted = g.clone();
        shifted.add_diagonal(c);
        let resid = shifted.matmul(&s).sub(&b);
        assert!(resid.frobenius_norm() <= 1e-8 * b.frobenius_norm());
    }

    #[test]
    fn rejects_bad_input() {
        let b = Matrix::zeros(2, 1);
        assert!(matches!(
            regularized_solve(&Matrix::identity(2), 0.0, &b),
            Err(Error::NonPositive { .. })
        ));
        assert!(regularized_solve(&Matrix::identity(3), 1.0, &b).is_err());
        let bad = Matrix::from_rows(&[[f64::INFINITY, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(regularized_solve(&bad, 1.0, &b), Err(Error::NonFinite(_))));
        let indefinite = Matrix::from_rows(&[[-5.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            regularized_solve(&indefinite, 1.0, &b),
            Err(Error::Factorization { .. })
        ));
    }
}
