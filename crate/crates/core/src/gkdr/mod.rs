//! The gKDR estimators.
//!
//! [`fit_gkdr`] takes the top-`d` eigenvectors of the averaged candidate
//! matrix. [`fit_gkdr_i`] reaches `d` through a decreasing sequence of
//! intermediate dimensions, re-fitting on projected data at each stage.
//! [`fit_gkdr_v`] averages per-block projectors instead of candidate matrices,
//! which lifts the `rank(G_Y)` ceiling that one-hot classification imposes on
//! each individual candidate.

mod candidate;

use alloc::format;
use alloc::vec::Vec;

pub(crate) use candidate::CandidateEngine;
pub use candidate::{average_candidate, average_candidate_lowrank, candidate_matrix_at, CandidateMatrix};

use crate::error::{invalid, Error, Result};
use crate::kernels::{kernel_value, median_heuristic, KernelSpec};
use crate::linalg::{incomplete_cholesky_with, orthonormalize, sym_eig, LowRankFactor};
use crate::matrix::{squared_distance, Matrix};

/// Eigenvalues below this fraction of the largest count as numerically zero
/// when sizing per-block projectors in gKDR-v.
pub const BLOCK_RANK_TOL: f64 = 1e-8;

/// Number of stages in the default gKDR-i schedule.
pub const DEFAULT_ITERATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    Gkdr,
    GkdrI,
    GkdrV,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gkdr => "gkdr",
            Method::GkdrI => "gkdr-i",
            Method::GkdrV => "gkdr-v",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gkdr" => Ok(Method::Gkdr),
            "gkdr-i" => Ok(Method::GkdrI),
            "gkdr-v" => Ok(Method::GkdrV),
            other => Err(invalid(format!(
                "unknown method '{other}' (expected gkdr, gkdr-i or gkdr-v)"
            ))),
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Settings for the incomplete-Cholesky path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LowRankOptions {
    /// Relative residual-trace tolerance.
    pub tol: f64,
    /// Rank cap; `None` means `n`.
    pub max_rank: Option<usize>,
}

impl Default for LowRankOptions {
    fn default() -> Self {
        LowRankOptions {
            tol: 1e-6,
            max_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkdrConfig {
    /// Target dimension.
    pub d: usize,
    pub spec: KernelSpec,
    pub low_rank: Option<LowRankOptions>,
    /// gKDR-i dimensions, strictly decreasing and ending at `d`. `None`
    /// selects [`default_schedule`].
    pub i_schedule: Option<Vec<usize>>,
    /// gKDR-v block size. `None` selects [`default_block_size`].
    pub v_partition: Option<usize>,
}

impl GkdrConfig {
    pub fn new(d: usize, spec: KernelSpec) -> Self {
        GkdrConfig {
            d,
            spec,
            low_rank: None,
            i_schedule: None,
            v_partition: None,
        }
    }

    pub fn with_low_rank(mut self, options: LowRankOptions) -> Self {
        self.low_rank = Some(options);
        self
    }

    pub fn with_schedule(mut self, schedule: Vec<usize>) -> Self {
        self.i_schedule = Some(schedule);
        self
    }

    pub fn with_block_size(mut self, size: usize) -> Self {
        self.v_partition = Some(size);
        self
    }
}

/// An estimated projection: `m×d` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub b: Matrix,
    /// Leading eigenvalues (non-increasing) of the matrix `B` was taken from.
    pub eigenvalues: Vec<f64>,
    pub method: Method,
    pub spec: KernelSpec,
}

impl Projection {
    pub fn input_dim(&self) -> usize {
        self.b.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.b.cols()
    }
}

/// Geometric interpolation from `m` down to `d` over `stages` steps,
/// rounded, clamped below `m` and de-duplicated.
pub fn default_schedule(m: usize, d: usize, stages: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(stages);
    let ratio = d as f64 / m as f64;
    for s in 1..=stages.max(1) {
        let v = libm::round(m as f64 * libm::pow(ratio, s as f64 / stages.max(1) as f64)) as usize;
        let v = v.clamp(d, m.saturating_sub(1).max(d));
        if out.last().map_or(true, |&last| v < last) {
            out.push(v);
        }
    }
    if out.last() != Some(&d) {
        out.push(d);
    }
    out
}

/// Per-point projectors when `n·m² ≤ 10⁷`, blocks of 100 otherwise.
pub fn default_block_size(n: usize, m: usize) -> usize {
    if (n as f64) * (m as f64) * (m as f64) <= 1e7 {
        1
    } else {
        100
    }
}

fn validate_inputs(x: &Matrix, y: &Matrix, d: usize) -> Result<()> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(invalid("need at least two samples"));
    }
    if y.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "response rows",
            expected: n,
            found: y.rows(),
        });
    }
    if y.cols() == 0 {
        return Err(Error::Empty("response has no columns"));
    }
    if d == 0 || d >= m {
        return Err(invalid(format!(
            "target dimension d = {d} must satisfy 1 <= d < m = {m}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("input matrix"));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("response matrix"));
    }
    let first = x.row(0);
    if x.iter_rows().all(|r| r == first) {
        return Err(Error::Degenerate("all input points are identical"));
    }
    Ok(())
}

fn gaussian_factor(x: &Matrix, sigma: f64, tol: f64, max_rank: usize) -> Result<LowRankFactor> {
    incomplete_cholesky_with(
        alloc::vec![1.0; x.rows()],
        |j, col| {
            let xj = x.row(j);
            for (i, c) in col.iter_mut().enumerate() {
                *c = kernel_value(squared_distance(x.row(i), xj), sigma);
            }
        },
        tol,
        max_rank,
    )
}

/// Builds Gram data for `(x, y)` and hands the per-point engine to `body`.
fn with_engine<T>(
    x: &Matrix,
    y: &Matrix,
    config: &GkdrConfig,
    body: impl FnOnce(&CandidateEngine<'_>) -> Result<T>,
) -> Result<T> {
    let spec = &config.spec;
    match config.low_rank {
        None => {
            let g_x = crate::kernels::gram(x, spec.sigma_x)?;
            let g_y = crate::kernels::gram(y, spec.sigma_y)?;
            let engine = CandidateEngine::dense(x, &g_x, &g_y, spec)?;
            body(&engine)
        }
        Some(opts) => {
            let n = x.rows();
            let max_rank = opts.max_rank.unwrap_or(n).clamp(1, n);
            let r = gaussian_factor(x, spec.sigma_x, opts.tol, max_rank)?;
            let h = gaussian_factor(y, spec.sigma_y, opts.tol, max_rank)?;
            let engine = CandidateEngine::lowrank(x, &r, &h, spec)?;
            body(&engine)
        }
    }
}

fn top_eigenpairs(a: &Matrix, d: usize) -> Result<(Matrix, Vec<f64>)> {
    if !a.is_finite() {
        return Err(Error::IllConditioned);
    }
    let eig = sym_eig(a)?;
    if !(eig.eigenvalues[0] > 0.0) {
        // Every kernel gradient vanished, typically a bandwidth far below
        // the sample spacing.
        return Err(Error::Degenerate("candidate matrix is zero"));
    }
    let values = eig.eigenvalues[..d].iter().map(|v| v.max(0.0)).collect();
    Ok((eig.top_vectors(d), values))
}

/// Plain gKDR: top-`d` eigenvectors of `M̃ₙ`.
pub fn fit_gkdr(x: &Matrix, y: &Matrix, config: &GkdrConfig) -> Result<Projection> {
    config.spec.validate()?;
    validate_inputs(x, y, config.d)?;
    let m_tilde = with_engine(x, y, config, |engine| Ok(engine.average()))?;
    let (b, eigenvalues) = top_eigenpairs(&m_tilde, config.d)?;
    Ok(Projection {
        b,
        eigenvalues,
        method: Method::Gkdr,
        spec: config.spec,
    })
}

fn check_schedule(schedule: &[usize], m: usize, d: usize) -> Result<()> {
    let first = *schedule.first().ok_or_else(|| invalid("gKDR-i schedule is empty"))?;
    if first >= m {
        return Err(invalid(format!(
            "gKDR-i schedule must start below m = {m}, got {first}"
        )));
    }
    if schedule.last() != Some(&d) {
        return Err(invalid(format!("gKDR-i schedule must end at d = {d}")));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("gKDR-i schedule must be strictly decreasing"));
    }
    Ok(())
}

/// Iterative gKDR.
///
/// Stage `s` fits `d_s` directions on the data projected by the previous
/// stages. The first stage uses `config.spec`; later stages re-run the median
/// heuristic on the projected inputs and scale it by the multiplier implied by
/// the first stage (`σ_x / σ_med(X)`). The output bandwidth is unchanged.
pub fn fit_gkdr_i(x: &Matrix, y: &Matrix, config: &GkdrConfig) -> Result<Projection> {
    config.spec.validate()?;
    validate_inputs(x, y, config.d)?;
    let m = x.cols();
    let schedule = match &config.i_schedule {
        Some(s) => s.clone(),
        None => default_schedule(m, config.d, DEFAULT_ITERATIONS),
    };
    check_schedule(&schedule, m, config.d)?;

    let multiplier = if schedule.len() > 1 {
        config.spec.sigma_x / median_heuristic(x)?
    } else {
        1.0
    };

    let mut z = x.clone();
    let mut total = Matrix::identity(m);
    let mut eigenvalues = Vec::new();
    for (stage, &dim) in schedule.iter().enumerate() {
        let mut spec = config.spec;
        if stage > 0 {
            spec.sigma_x = multiplier * median_heuristic(&z)?;
        }
        let stage_config = GkdrConfig {
            d: dim,
            spec,
            low_rank: config.low_rank,
            i_schedule: None,
            v_partition: None,
        };
        let fitted = fit_gkdr(&z, y, &stage_config)?;
        total = total.matmul(&fitted.b);
        z = z.matmul(&fitted.b);
        eigenvalues = fitted.eigenvalues;
    }

    Ok(Projection {
        b: orthonormalize(&total),
        eigenvalues,
        method: Method::GkdrI,
        spec: config.spec,
    })
}

/// gKDR-v: top-`d` eigenvectors of the averaged block projector
/// `P̂ = (1/ℓ) Σₐ B₍ₐ₎B₍ₐ₎ᵀ`.
///
/// Blocks are consecutive index ranges of `v_partition` points (the last may
/// be shorter). Each block contributes its top `min(d, rank)` eigenvectors,
/// where the rank counts eigenvalues above [`BLOCK_RANK_TOL`]`·λ_max`.
pub fn fit_gkdr_v(x: &Matrix, y: &Matrix, config: &GkdrConfig) -> Result<Projection> {
    config.spec.validate()?;
    validate_inputs(x, y, config.d)?;
    let (n, m) = x.shape();
    let block = config.v_partition.unwrap_or_else(|| default_block_size(n, m));
    if block == 0 {
        return Err(invalid("gKDR-v block size must be at least 1"));
    }
    let d = config.d;

    let projector = with_engine(x, y, config, |engine| {
        let mut projector = Matrix::zeros(m, m);
        let mut block_sum = Matrix::zeros(m, m);
        let mut blocks = 0usize;
        let mut failure = None;
        let flush = |sum: &mut Matrix, projector: &mut Matrix| -> Result<()> {
            let eig = sym_eig(sum)?;
            let keep = d.min(eig.numerical_rank(BLOCK_RANK_TOL));
            let basis = eig.top_vectors(keep);
            projector.add_assign(&basis.matmul_t(&basis));
            sum.scale_in_place(0.0);
            Ok(())
        };
        engine.for_each_point(|i, point| {
            if failure.is_some() {
                return;
            }
            block_sum.add_assign(point);
            if (i + 1) % block == 0 || i + 1 == n {
                blocks += 1;
                if let Err(e) = flush(&mut block_sum, &mut projector) {
                    failure = Some(e);
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        projector.scale_in_place(1.0 / blocks as f64);
        projector.symmetrize();
        Ok(projector)
    })?;

    let (b, eigenvalues) = top_eigenpairs(&projector, d)?;
    Ok(Projection {
        b,
        eigenvalues,
        method: Method::GkdrV,
        spec: config.spec,
    })
}

/// Dispatches to the estimator selected by `method`.
pub fn fit(x: &Matrix, y: &Matrix, config: &GkdrConfig, method: Method) -> Result<Projection> {
    match method {
        Method::Gkdr => fit_gkdr(x, y, config),
        Method::GkdrI => fit_gkdr_i(x, y, config),
        Method::GkdrV => fit_gkdr_v(x, y, config),
    }
}

/// `X·B`: coordinates of the rows of `x` in the estimated subspace.
pub fn project(projection: &Projection, x: &Matrix) -> Result<Matrix> {
    if x.cols() != projection.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "project (input columns)",
            expected: projection.input_dim(),
            found: x.cols(),
        });
    }
    Ok(x.matmul(&projection.b))
}
