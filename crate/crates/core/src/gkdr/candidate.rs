//! Candidate matrices `M̂ₙ(x) = ∇k(x)ᵀ (G_X + nεI)⁻¹ G_Y (G_X + nεI)⁻¹ ∇k(x)`
//! and their sample average `M̃ₙ`.
//!
//! Both the dense and the low-rank paths factor `G_Y ≈ HHᵀ` and set
//! `F = (G_X + nεI)⁻¹H`, so that `M̂ₙ(Xᵢ) = ΓᵢᵀΓᵢ` with `Γᵢ = Fᵀ∇k(Xᵢ)`
//! (`r_y × m`). Written as a Gram form the candidate is PSD by construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{kernel_gradient_stack, GramMatrix, KernelSpec};
use crate::linalg::{incomplete_cholesky, regularized_solve, woodbury_apply, LowRankFactor};
use crate::matrix::{axpy, Matrix};

/// Symmetric PSD `m×m` matrix: a per-point `M̂ₙ(x)` or the average `M̃ₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMatrix {
    pub values: Matrix,
}

impl CandidateMatrix {
    pub fn dim(&self) -> usize {
        self.values.rows()
    }
}

fn check_grams(x: &Matrix, g_x: &GramMatrix, g_y: &GramMatrix) -> Result<()> {
    let n = x.rows();
    for (g, ctx) in [(g_x, "input Gram size"), (g_y, "output Gram size")] {
        if g.values.rows() != n || g.values.cols() != n {
            return Err(Error::DimensionMismatch {
                context: ctx,
                expected: n,
                found: g.values.rows(),
            });
        }
    }
    Ok(())
}

/// `M̂ₙ(x)` at an arbitrary query point, evaluated literally with two
/// regularized solves.
pub fn candidate_matrix_at(
    x_data: &Matrix,
    g_x: &GramMatrix,
    g_y: &GramMatrix,
    spec: &KernelSpec,
    x: &[f64],
) -> Result<CandidateMatrix> {
    spec.validate()?;
    check_grams(x_data, g_x, g_y)?;
    let n = x_data.rows();
    let grad = kernel_gradient_stack(x_data, x, spec.sigma_x)?;
    let z = regularized_solve(&g_x.values, n as f64 * spec.epsilon, &grad.values)?;
    let mut values = z.t_matmul(&g_y.values.matmul(&z));
    values.symmetrize();
    Ok(CandidateMatrix { values })
}

/// `M̃ₙ = (1/n) Σᵢ M̂ₙ(Xᵢ)` on dense Gram matrices.
pub fn average_candidate(x: &Matrix, g_x: &GramMatrix, g_y: &GramMatrix, spec: &KernelSpec) -> Result<CandidateMatrix> {
    spec.validate()?;
    check_grams(x, g_x, g_y)?;
    let engine = CandidateEngine::dense(x, &g_x.values, &g_y.values, spec)?;
    Ok(CandidateMatrix {
        values: engine.average(),
    })
}

/// `M̃ₙ` from low-rank factors `G_X ≈ RRᵀ`, `G_Y ≈ HHᵀ` in `O(n·m·r)` memory.
pub fn average_candidate_lowrank(
    x: &Matrix,
    r: &LowRankFactor,
    h: &LowRankFactor,
    spec: &KernelSpec,
) -> Result<CandidateMatrix> {
    spec.validate()?;
    let engine = CandidateEngine::lowrank(x, r, h, spec)?;
    Ok(CandidateMatrix {
        values: engine.average(),
    })
}

/// Produces the per-point factors `Γᵢ`.
pub(crate) struct CandidateEngine<'a> {
    x: &'a Matrix,
    inv_s2: f64,
    /// Rank of the `G_Y` factor; rows of every `Γᵢ`.
    ry: usize,
    kind: EngineKind<'a>,
}

enum EngineKind<'a> {
    Dense {
        g_x: &'a Matrix,
        /// `(G_X + nεI)⁻¹ H`, `n×r_y`.
        f: Matrix,
    },
    LowRank {
        r: &'a Matrix,
        /// `P[a][s][t] = (1/σ²) Σⱼ X_ja R_js F_jt`, flattened `m × r_x × r_y`.
        p: Vec<f64>,
        /// `Q[s][t] = Σⱼ R_js F_jt`, `r_x × r_y`.
        q: Matrix,
    },
}

impl<'a> CandidateEngine<'a> {
    pub(crate) fn dense(x: &'a Matrix, g_x: &'a Matrix, g_y: &Matrix, spec: &KernelSpec) -> Result<Self> {
        let n = x.rows();
        let h = incomplete_cholesky(g_y, 0.0, n)?;
        let f = regularized_solve(g_x, n as f64 * spec.epsilon, &h.r)?;
        Ok(CandidateEngine {
            x,
            inv_s2: 1.0 / (spec.sigma_x * spec.sigma_x),
            ry: h.rank,
            kind: EngineKind::Dense { g_x, f },
        })
    }

    pub(crate) fn lowrank(x: &'a Matrix, r: &'a LowRankFactor, h: &LowRankFactor, spec: &KernelSpec) -> Result<Self> {
        let n = x.rows();
        for (fac, ctx) in [(r, "input factor rows"), (h, "output factor rows")] {
            if fac.n() != n {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n,
                    found: fac.n(),
                });
            }
        }
        let m = x.cols();
        let inv_s2 = 1.0 / (spec.sigma_x * spec.sigma_x);
        let f = woodbury_apply(r, n as f64 * spec.epsilon, &h.r)?;
        let (rx, ry) = (r.rank, h.rank);

        let q = r.r.t_matmul(&f);
        let mut p = vec![0.0; m * rx * ry];
        let mut theta_f = vec![0.0; rx * ry];
        for a in 0..m {
            theta_f.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n {
                let xja = x[(j, a)] * inv_s2;
                if xja == 0.0 {
                    continue;
                }
                let fj = f.row(j);
                for (s, &rjs) in r.r.row(j).iter().enumerate() {
                    axpy(xja * rjs, fj, &mut theta_f[s * ry..(s + 1) * ry]);
                }
            }
            p[a * rx * ry..(a + 1) * rx * ry].copy_from_slice(&theta_f);
        }
        Ok(CandidateEngine {
            x,
            inv_s2,
            ry,
            kind: EngineKind::LowRank { r: &r.r, p, q },
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.x.rows()
    }

    pub(crate) fn m(&self) -> usize {
        self.x.cols()
    }

    /// Writes `Γᵢ` (`r_y × m`) into `gamma`.
    fn gamma(&self, i: usize, gamma: &mut Matrix, scratch: &mut [f64]) {
        let m = self.m();
        gamma.scale_in_place(0.0);
        let xi = self.x.row(i);
        match &self.kind {
            EngineKind::Dense { g_x, f } => {
                for j in 0..self.n() {
                    let w = self.inv_s2 * g_x[(j, i)];
                    if w == 0.0 || j == i {
                        continue;
                    }
                    for ((d, a), b) in scratch.iter_mut().zip(self.x.row(j)).zip(xi) {
                        *d = w * (a - b);
                    }
                    for (t, &fjt) in f.row(j).iter().enumerate() {
                        if fjt != 0.0 {
                            axpy(fjt, &scratch[..m], gamma.row_mut(t));
                        }
                    }
                }
            }
            EngineKind::LowRank { r, p, q } => {
                let rx = r.cols();
                let ry = self.ry;
                for (s, &ris) in r.row(i).iter().enumerate() {
                    if ris == 0.0 {
                        continue;
                    }
                    let q_s = q.row(s);
                    for a in 0..m {
                        let p_as = &p[(a * rx + s) * ry..(a * rx + s + 1) * ry];
                        let shift = self.inv_s2 * xi[a];
                        for t in 0..ry {
                            gamma[(t, a)] += ris * (p_as[t] - shift * q_s[t]);
                        }
                    }
                }
            }
        }
    }

    /// Calls `visit(i, M̂ₙ(Xᵢ))` for every sample in index order.
    pub(crate) fn for_each_point(&self, mut visit: impl FnMut(usize, &Matrix)) {
        let m = self.m();
        let mut gamma = Matrix::zeros(self.ry, m);
        let mut scratch = vec![0.0; m];
        for i in 0..self.n() {
            self.gamma(i, &mut gamma, &mut scratch);
            let point = gamma.t_matmul(&gamma);
            visit(i, &point);
        }
    }

    pub(crate) fn average(&self) -> Matrix {
        let m = self.m();
        let mut sum = Matrix::zeros(m, m);
        self.for_each_point(|_, point| sum.add_assign(point));
        sum.scale_in_place(1.0 / self.n() as f64);
        sum.symmetrize();
        sum
    }
}
