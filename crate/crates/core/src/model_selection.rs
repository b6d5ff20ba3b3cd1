//! kNN prediction on projected data and cross-validated choice of the
//! bandwidth multiplier and regularization.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::class_indices;
use crate::error::{invalid, Error, Result};
use crate::gkdr::{fit, project, GkdrConfig, Method};
use crate::kernels::{median_heuristic, median_positive_distance, KernelSpec};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Task {
    Regression,
    Classification,
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (libm::log(lo), libm::log(hi));
            (0..count)
                .map(|i| libm::exp(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvConfig {
    pub k_neighbors: usize,
    pub folds: usize,
    /// Multipliers `c` of the input median distance.
    pub multipliers: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub task: Task,
    pub seed: u64,
}

impl CvConfig {
    /// 5 neighbours, 5 folds, 8 log-spaced multipliers in `[0.5, 10]`,
    /// `ε = 10⁻⁷`.
    pub fn new(task: Task, seed: u64) -> Self {
        CvConfig {
            k_neighbors: 5,
            folds: 5,
            multipliers: log_spaced(0.5, 10.0, 8),
            epsilons: vec![1e-7],
            task,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(invalid("k_neighbors must be at least 1"));
        }
        if self.folds < 2 {
            return Err(invalid("CV needs at least 2 folds"));
        }
        if self.multipliers.is_empty() || self.epsilons.is_empty() {
            return Err(invalid("CV grid is empty"));
        }
        for &c in self.multipliers.iter().chain(&self.epsilons) {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid(format!("CV grid values must be positive and finite, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvRow {
    pub multiplier: f64,
    pub epsilon: f64,
    /// `None` when a fold fit failed for this candidate.
    pub mean_error: Option<f64>,
    pub fold_errors: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvReport {
    /// One row per grid candidate, in grid order (multipliers outer).
    pub table: Vec<CvRow>,
    /// Selected `(multiplier, epsilon)`.
    pub selected: (f64, f64),
    pub sigma_med_x: f64,
    pub sigma_y: f64,
}

impl CvReport {
    /// The kernel parameters implied by the selected pair.
    pub fn selected_spec(&self) -> KernelSpec {
        KernelSpec {
            sigma_x: self.selected.0 * self.sigma_med_x,
            sigma_y: self.sigma_y,
            epsilon: self.selected.1,
        }
    }
}

/// Output bandwidth used for every candidate: the median pairwise distance
/// of `Y`, or the median over distinct pairs when most pairs coincide (as
/// with one-hot labels).
pub fn output_bandwidth(y: &Matrix) -> Result<f64> {
    match median_heuristic(y) {
        Ok(s) => Ok(s),
        Err(Error::Degenerate(_)) => median_positive_distance(y),
        Err(e) => Err(e),
    }
}

/// Indices of the `k` training rows nearest to `q`; distance ties go to the
/// smaller index.
fn nearest(train: &Matrix, q: &[f64], k: usize, scratch: &mut Vec<(f64, usize)>) {
    scratch.clear();
    scratch.extend(train.iter_rows().enumerate().map(|(i, r)| (squared_distance(r, q), i)));
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, cmp);
        scratch.truncate(k);
    }
    scratch.sort_unstable_by(cmp);
}

fn check_knn(train_z: &Matrix, n_targets: usize, query_z: &Matrix, k: usize) -> Result<()> {
    if train_z.rows() == 0 {
        return Err(Error::Empty("kNN training set"));
    }
    if n_targets != train_z.rows() {
        return Err(Error::DimensionMismatch {
            context: "kNN training targets",
            expected: train_z.rows(),
            found: n_targets,
        });
    }
    if query_z.cols() != train_z.cols() {
        return Err(Error::DimensionMismatch {
            context: "kNN query columns",
            expected: train_z.cols(),
            found: query_z.cols(),
        });
    }
    if k == 0 || k > train_z.rows() {
        return Err(invalid(format!("k = {k} must lie in 1..={}", train_z.rows())));
    }
    Ok(())
}

/// Mean of the `k` nearest training responses.
pub fn knn_regress(train_z: &Matrix, train_y: &Matrix, query_z: &Matrix, k: usize) -> Result<Matrix> {
    check_knn(train_z, train_y.rows(), query_z, k)?;
    let mut out = Matrix::zeros(query_z.rows(), train_y.cols());
    let mut scratch = Vec::with_capacity(train_z.rows());
    for (qi, q) in query_z.iter_rows().enumerate() {
        nearest(train_z, q, k, &mut scratch);
        let row = out.row_mut(qi);
        for &(_, j) in scratch.iter() {
            for (o, v) in row.iter_mut().zip(train_y.row(j)) {
                *o += v;
            }
        }
        row.iter_mut().for_each(|o| *o /= k as f64);
    }
    Ok(out)
}

/// Majority class among the `k` nearest neighbours; vote ties go to the
/// smaller class index.
pub fn knn_classify(train_z: &Matrix, train_labels: &[usize], query_z: &Matrix, k: usize) -> Result<Vec<usize>> {
    check_knn(train_z, train_labels.len(), query_z, k)?;
    let n_classes = train_labels.iter().copied().max().map_or(0, |c| c + 1);
    let mut votes = vec![0usize; n_classes];
    let mut scratch = Vec::with_capacity(train_z.rows());
    let mut out = Vec::with_capacity(query_z.rows());
    for q in query_z.iter_rows() {
        nearest(train_z, q, k, &mut scratch);
        votes.iter_mut().for_each(|v| *v = 0);
        for &(_, j) in scratch.iter() {
            votes[train_labels[j]] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// kNN on response matrices. Regression returns neighbour means;
/// classification returns the one-hot row of the winning class.
pub fn knn_predict(train_z: &Matrix, train_y: &Matrix, query_z: &Matrix, k: usize, task: Task) -> Result<Matrix> {
    match task {
        Task::Regression => knn_regress(train_z, train_y, query_z, k),
        Task::Classification => {
            let labels = class_indices(train_y);
            let pred = knn_classify(train_z, &labels, query_z, k)?;
            Ok(Matrix::from_fn(pred.len(), train_y.cols(), |i, j| {
                if pred[i] == j {
                    1.0
                } else {
                    0.0
                }
            }))
        }
    }
}

/// Mean over rows of the squared Euclidean prediction error.
pub fn mean_squared_error(pred: &Matrix, truth: &Matrix) -> f64 {
    let total: f64 = pred
        .iter_rows()
        .zip(truth.iter_rows())
        .map(|(p, t)| squared_distance(p, t))
        .sum();
    total / pred.rows().max(1) as f64
}

/// Fold id of every sample: seeded shuffle, then contiguous blocks. With
/// class labels, the shuffled order is stably grouped by class and dealt
/// round-robin, so every fold gets its share of each class.
pub fn fold_assignment(n: usize, folds: usize, seed: u64, classes: Option<&[usize]>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut fold = vec![0; n];
    match classes {
        Some(c) => {
            order.sort_by_key(|&i| c[i]);
            for (pos, &i) in order.iter().enumerate() {
                fold[i] = pos % folds;
            }
        }
        None => {
            for f in 0..folds {
                for &i in &order[f * n / folds..(f + 1) * n / folds] {
                    fold[i] = f;
                }
            }
        }
    }
    fold
}

#[allow(clippy::too_many_arguments)]
fn fold_error(
    x: &Matrix,
    y: &Matrix,
    labels: Option<&[usize]>,
    train: &[usize],
    test: &[usize],
    config: &GkdrConfig,
    method: Method,
    k: usize,
) -> Result<f64> {
    let x_train = x.select_rows(train);
    let y_train = y.select_rows(train);
    let projection = fit(&x_train, &y_train, config, method)?;
    let z_train = project(&projection, &x_train)?;
    let z_test = project(&projection, &x.select_rows(test))?;
    match labels {
        Some(labels) => {
            let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let pred = knn_classify(&z_train, &train_labels, &z_test, k)?;
            let wrong = pred.iter().zip(test).filter(|(p, &i)| **p != labels[i]).count();
            Ok(wrong as f64 / test.len() as f64)
        }
        None => {
            let pred = knn_regress(&z_train, &y_train, &z_test, k)?;
            Ok(mean_squared_error(&pred, &y.select_rows(test)))
        }
    }
}

/// Grid search over `(multiplier, ε)` scored by k-fold kNN error on the
/// projected data.
///
/// Every candidate uses `σ_x = c·σ_med(X)` and the fixed output bandwidth of
/// [`output_bandwidth`]; `template` supplies `d` and the variant settings.
/// Folds are shared by all candidates. The smallest mean error wins, ties
/// going to the smaller multiplier and then the smaller `ε`. Candidates whose
/// fits fail numerically are reported and skipped.
pub fn cross_validate(
    x: &Matrix,
    y: &Matrix,
    template: &GkdrConfig,
    cv: &CvConfig,
    method: Method,
) -> Result<CvReport> {
    cv.validate()?;
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "response rows",
            expected: n,
            found: y.rows(),
        });
    }
    if n < cv.folds {
        return Err(invalid(format!("n = {n} is smaller than the fold count {}", cv.folds)));
    }
    let sigma_med_x = median_heuristic(x)?;
    let sigma_y = output_bandwidth(y)?;

    let labels = match cv.task {
        Task::Classification => Some(class_indices(y)),
        Task::Regression => None,
    };
    let fold_of = fold_assignment(n, cv.folds, cv.seed, labels.as_deref());
    let mut splits = Vec::with_capacity(cv.folds);
    for f in 0..cv.folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
        if train.len() < cv.k_neighbors {
            return Err(invalid(format!(
                "fold {f} leaves {} training points, fewer than k = {}",
                train.len(),
                cv.k_neighbors
            )));
        }
        if test.is_empty() {
            return Err(invalid(format!("fold {f} is empty")));
        }
        splits.push((train, test));
    }

    let mut table = Vec::with_capacity(cv.multipliers.len() * cv.epsilons.len());
    let mut last_error = None;
    for &c in &cv.multipliers {
        for &eps in &cv.epsilons {
            let mut config = template.clone();
            config.spec = KernelSpec::new(c * sigma_med_x, sigma_y, eps)?;
            let mut fold_errors = Vec::with_capacity(cv.folds);
            let mut failure = None;
            for (train, test) in &splits {
                match fold_error(x, y, labels.as_deref(), train, test, &config, method, cv.k_neighbors) {
                    Ok(e) => fold_errors.push(e),
                    Err(e) if e.is_numerical() => {
                        failure = Some(e.to_string());
                        last_error = Some(e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            let mean_error = if failure.is_none() {
                Some(fold_errors.iter().sum::<f64>() / fold_errors.len() as f64)
            } else {
                None
            };
            table.push(CvRow {
                multiplier: c,
                epsilon: eps,
                mean_error,
                fold_errors,
                failure,
            });
        }
    }

    let best = table
        .iter()
        .filter_map(|row| row.mean_error.map(|e| (e, row.multiplier, row.epsilon)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    match best {
        Some((_, c, eps)) => Ok(CvReport {
            table,
            selected: (c, eps),
            sigma_med_x,
            sigma_y,
        }),
        None => Err(last_error.unwrap_or(Error::Degenerate("no CV candidate could be fitted"))),
    }
}
