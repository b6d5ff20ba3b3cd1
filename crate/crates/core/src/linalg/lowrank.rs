use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_positive, invalid, Error, Result};
use crate::linalg::Cholesky;
use crate::matrix::{axpy, Matrix};

/// Pivoted incomplete Cholesky factor `G ≈ R·Rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor {
    /// `n×rank` factor.
    pub r: Matrix,
    /// Row index chosen at each step, in order.
    pub pivots: Vec<usize>,
    pub rank: usize,
    /// `trace(G − RRᵀ)` at termination.
    pub residual_bound: f64,
}

impl LowRankFactor {
    /// The all-zero rank-0 factor for `n` points.
    pub fn zero(n: usize) -> Self {
        LowRankFactor {
            r: Matrix::zeros(n, 0),
            pivots: Vec::new(),
            rank: 0,
            residual_bound: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.r.rows()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.r.matmul_t(&self.r)
    }
}

/// Greedy pivoted Cholesky of a symmetric PSD matrix.
///
/// At each step the row with the largest residual diagonal becomes the next
/// pivot (lowest index on ties). The factorization stops once the residual
/// trace drops to `tol · trace(G)`, once `max_rank` columns exist, or once
/// every remaining pivot is at round-off level. With `tol = 0` and
/// `max_rank = n` the result reproduces `G` to working precision.
pub fn incomplete_cholesky(g: &Matrix, tol: f64, max_rank: usize) -> Result<LowRankFactor> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "incomplete_cholesky (square matrix)",
            expected: n,
            found: g.cols(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("incomplete_cholesky: empty matrix"));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite("incomplete_cholesky input"));
    }
    let diag: Vec<f64> = (0..n).map(|i| g[(i, i)]).collect();
    incomplete_cholesky_with(
        diag,
        |j, col| {
            for (i, c) in col.iter_mut().enumerate() {
                *c = g[(i, j)];
            }
        },
        tol,
        max_rank,
    )
}

/// [`incomplete_cholesky`] over an implicit matrix: `diag` holds the
/// diagonal and `column(j, out)` writes column `j`. Only the pivot columns
/// are ever requested, so memory stays at `O(n · rank)`.
pub fn incomplete_cholesky_with<F>(diag: Vec<f64>, mut column: F, tol: f64, max_rank: usize) -> Result<LowRankFactor>
where
    F: FnMut(usize, &mut [f64]),
{
    let n = diag.len();
    if n == 0 {
        return Err(Error::Empty("incomplete_cholesky: empty matrix"));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(invalid("incomplete Cholesky tolerance must be finite and non-negative"));
    }
    if max_rank == 0 || max_rank > n {
        return Err(invalid("incomplete Cholesky max_rank must lie in 1..=n"));
    }
    if diag.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("incomplete_cholesky diagonal"));
    }

    let mut residual = diag;
    let max_diag = residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 4.0 * n as f64 * f64::EPSILON * max_diag;
    if let Some(i) = residual.iter().position(|&v| v < -floor) {
        return Err(Error::NotPsd {
            index: i,
            value: residual[i],
        });
    }
    let total_trace: f64 = residual.iter().map(|v| v.max(0.0)).sum();

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut is_pivot = vec![false; n];
    let mut pivots = Vec::with_capacity(max_rank.min(64));

    loop {
        let trace: f64 = residual
            .iter()
            .zip(&is_pivot)
            .filter(|(_, p)| !**p)
            .map(|(v, _)| v.max(0.0))
            .sum();
        if pivots.len() == max_rank || trace <= tol * total_trace {
            return Ok(assemble(n, &columns, pivots, trace));
        }

        let mut best: Option<usize> = None;
        for i in 0..n {
            if !is_pivot[i] && best.map_or(true, |b| residual[i] > residual[b]) {
                best = Some(i);
            }
        }
        let j = match best {
            Some(j) if residual[j] > floor => j,
            _ => return Ok(assemble(n, &columns, pivots, trace)),
        };

        let diag = libm::sqrt(residual[j]);
        let mut col = vec![0.0; n];
        column(j, &mut col);
        for prev in &columns {
            let w = prev[j];
            if w != 0.0 {
                axpy(-w, prev, &mut col);
            }
        }
        let inv = 1.0 / diag;
        for i in 0..n {
            col[i] = if is_pivot[i] {
                0.0
            } else if i == j {
                diag
            } else {
                col[i] * inv
            };
            if !is_pivot[i] && i != j {
                residual[i] -= col[i] * col[i];
                if residual[i] < -floor {
                    return Err(Error::NotPsd {
                        index: i,
                        value: residual[i],
                    });
                }
            }
        }
        residual[j] = 0.0;
        is_pivot[j] = true;
        pivots.push(j);
        columns.push(col);
    }
}

fn assemble(n: usize, columns: &[Vec<f64>], pivots: Vec<usize>, trace: f64) -> LowRankFactor {
    let rank = columns.len();
    LowRankFactor {
        r: Matrix::from_fn(n, rank, |i, s| columns[s][i]),
        pivots,
        rank,
        residual_bound: trace.max(0.0),
    }
}

/// `(R·Rᵀ + c·I)⁻¹·B` via the Woodbury identity:
/// `(1/c)·(B − R·(c·I_r + RᵀR)⁻¹·RᵀB)`. Never forms an `n×n` matrix.
pub fn woodbury_apply(factor: &LowRankFactor, c: f64, b: &Matrix) -> Result<Matrix> {
    check_positive("regularization", c)?;
    if b.rows() != factor.n() {
        return Err(Error::DimensionMismatch {
            context: "woodbury_apply (right-hand side rows)",
            expected: factor.n(),
            found: b.rows(),
        });
    }
    if !b.is_finite() {
        return Err(Error::NonFinite("woodbury_apply right-hand side"));
    }
    let inv_c = 1.0 / c;
    if factor.rank == 0 {
        return Ok(b.scaled(inv_c));
    }
    let r = &factor.r;
    let mut inner = r.t_matmul(r);
    inner.add_diagonal(c);
    let chol = Cholesky::factor(&inner).map_err(|_| Error::IllConditioned)?;
    let correction = r.matmul(&chol.solve(&r.t_matmul(b)));
    let mut out = b.sub(&correction);
    out.scale_in_place(inv_c);
    if !out.is_finite() {
        return Err(Error::IllConditioned);
    }
    Ok(out)
}
