//! Subspace error, classification error and the synthetic benchmark runner.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::RngCore;

use crate::data::{generate, SynthKind};
use crate::error::{invalid, Error, Result};
use crate::gkdr::{fit, GkdrConfig, Method};
use crate::kernels::{median_heuristic, KernelSpec};
use crate::linalg::orthonormality_defect;
use crate::matrix::Matrix;
use crate::model_selection::{cross_validate, output_bandwidth, CvConfig, Task};
use crate::rng::substream;

/// Allowed `‖BᵀB − I‖_F` for inputs to [`subspace_error`].
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// `‖B₀B₀ᵀ(I − BBᵀ)‖_F / d`, `d` being the column count of `b`.
pub fn subspace_error(b0: &Matrix, b: &Matrix) -> Result<f64> {
    if b0.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            context: "subspace_error (rows)",
            expected: b0.rows(),
            found: b.rows(),
        });
    }
    if b.cols() == 0 || b0.cols() == 0 {
        return Err(Error::Empty("subspace_error basis"));
    }
    for m in [b0, b] {
        let deviation = orthonormality_defect(m);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
    }
    // B₀B₀ᵀ(I − BBᵀ) = B₀(B₀ᵀ − (B₀ᵀB)Bᵀ).
    let cross = b0.t_matmul(b);
    let inner = b0.transpose().sub(&cross.matmul_t(b));
    Ok(b0.matmul(&inner).frobenius_norm() / b.cols() as f64)
}

/// Fraction of positions where `predictions` and `truth` differ.
pub fn classification_error<T: PartialEq>(predictions: &[T], truth: &[T]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "classification_error lengths",
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("classification_error input"));
    }
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// How kernel parameters are chosen in each replication.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Selection {
    /// Regression CV over the grid; the fold seed is drawn per replication
    /// and overrides `CvConfig::seed`.
    CrossValidate(CvConfig),
    /// `σ_x = multiplier·σ_med(X)`, `σ_y = σ_med(Y)`.
    Fixed { multiplier: f64, epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub dataset: SynthKind,
    pub n: usize,
    pub method: Method,
    pub replications: usize,
    pub seed: u64,
    pub selection: Selection,
    /// Variant settings; `d` is taken from the dataset and `spec` is
    /// overwritten per replication.
    pub template: GkdrConfig,
}

impl BenchmarkConfig {
    pub fn new(dataset: SynthKind, n: usize, method: Method, replications: usize, seed: u64) -> Self {
        BenchmarkConfig {
            dataset,
            n,
            method,
            replications,
            seed,
            selection: Selection::CrossValidate(CvConfig::new(Task::Regression, 0)),
            template: GkdrConfig::new(
                dataset.true_dim(),
                KernelSpec {
                    sigma_x: 1.0,
                    sigma_y: 1.0,
                    epsilon: 1e-7,
                },
            ),
        }
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicationOutcome {
    pub index: usize,
    pub error: f64,
    pub spec: KernelSpec,
}

/// Replication `index`: data and fold seed come from substream `index` of
/// the master seed, so any replication can be rerun on its own and two
/// benchmarks with the same seed but different `n` see paired draws.
pub fn run_replication(config: &BenchmarkConfig, index: usize) -> Result<ReplicationOutcome> {
    let mut rng = substream(config.seed, index as u64);
    let ds = generate(config.dataset, config.n, &mut rng)?;
    let fold_seed = rng.next_u64();

    let mut template = config.template.clone();
    template.d = config.dataset.true_dim();
    let spec = match &config.selection {
        Selection::CrossValidate(cv) => {
            let mut cv = cv.clone();
            cv.seed = fold_seed;
            cross_validate(&ds.x, &ds.y, &template, &cv, config.method)?.selected_spec()
        }
        Selection::Fixed { multiplier, epsilon } => KernelSpec::new(
            multiplier * median_heuristic(&ds.x)?,
            output_bandwidth(&ds.y)?,
            *epsilon,
        )?,
    };
    template.spec = spec;
    let projection = fit(&ds.x, &ds.y, &template, config.method)?;
    let b0 = ds.b0.as_ref().ok_or(Error::Empty("true projection"))?;
    Ok(ReplicationOutcome {
        index,
        error: subspace_error(b0, &projection.b)?,
        spec,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicationFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkResult {
    pub dataset: SynthKind,
    pub n: usize,
    pub method: Method,
    pub replications: usize,
    pub mean_error: f64,
    /// Sample standard deviation of the per-replication errors.
    pub std_error: f64,
    /// Standard error of the mean, `std_error / √count`.
    pub sem: f64,
    /// Set when only one replication succeeded; both spreads are then 0.
    pub singleton: bool,
    /// Successful replications, by index.
    pub per_replication_errors: Vec<f64>,
    pub replication_indices: Vec<usize>,
    pub failures: Vec<ReplicationFailure>,
    /// Filled in by callers that have a clock.
    pub wall_time_seconds: Option<f64>,
}

impl BenchmarkResult {
    /// Aggregates replication results given in any order.
    pub fn aggregate(config: &BenchmarkConfig, outcomes: Vec<(usize, Result<f64>)>) -> Result<Self> {
        let mut outcomes = outcomes;
        outcomes.sort_by_key(|(i, _)| *i);
        let mut errors = Vec::new();
        let mut indices = Vec::new();
        let mut failures = Vec::new();
        for (index, outcome) in outcomes {
            match outcome {
                Ok(e) => {
                    errors.push(e);
                    indices.push(index);
                }
                Err(e) => failures.push(ReplicationFailure {
                    index,
                    message: e.to_string(),
                }),
            }
        }
        if errors.is_empty() {
            return Err(Error::Degenerate("every benchmark replication failed"));
        }
        let count = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / count;
        let singleton = errors.len() == 1;
        let std = if singleton {
            0.0
        } else {
            libm::sqrt(errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (count - 1.0))
        };
        Ok(BenchmarkResult {
            dataset: config.dataset,
            n: config.n,
            method: config.method,
            replications: config.replications,
            mean_error: mean,
            std_error: std,
            sem: std / libm::sqrt(count),
            singleton,
            per_replication_errors: errors,
            replication_indices: indices,
            failures,
            wall_time_seconds: None,
        })
    }

    /// `"B  n=200  gkdr  0.0755 (0.0157)"`.
    pub fn table_row(&self) -> String {
        format!(
            "{}  n={}  {}  {:.4} ({:.4})",
            self.dataset.as_str(),
            self.n,
            self.method,
            self.mean_error,
            self.std_error
        )
    }
}

/// Runs all replications in index order. Failed replications are recorded,
/// not fatal, unless every replication fails.
pub fn run_synthetic_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkResult> {
    if config.replications == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    let outcomes = (0..config.replications)
        .map(|i| (i, run_replication(config, i).map(|o| o.error)))
        .collect();
    BenchmarkResult::aggregate(config, outcomes)
}
