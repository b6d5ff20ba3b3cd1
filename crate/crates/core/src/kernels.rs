//! Gaussian kernel, Gram matrices, analytic kernel gradients and the median
//! bandwidth heuristic.

use alloc::vec::Vec;

use crate::error::{check_positive, Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// Bandwidths of the input and output Gaussian kernels plus the
/// regularization `ε` (entering the solves as `n·ε·I`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelSpec {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub epsilon: f64,
}

impl KernelSpec {
    pub fn new(sigma_x: f64, sigma_y: f64, epsilon: f64) -> Result<Self> {
        let spec = KernelSpec {
            sigma_x,
            sigma_y,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("sigma_x", self.sigma_x)?;
        check_positive("sigma_y", self.sigma_y)?;
        check_positive("epsilon", self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSource {
    Input,
    Output,
}

/// Symmetric Gaussian Gram matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: Matrix,
    pub source: GramSource,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    /// The same matrix multiplied by `c`. Used to probe scale invariance.
    pub fn scaled(&self, c: f64) -> GramMatrix {
        GramMatrix {
            values: self.values.scaled(c),
            source: self.source,
        }
    }
}

/// `n×m` stack whose row `j` is `∂k(X_j, x)/∂x` at a query point `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStack {
    pub values: Matrix,
}

/// `exp(−‖x−y‖² / (2σ²))`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "gaussian_kernel",
            expected: x.len(),
            found: y.len(),
        });
    }
    check_positive("sigma", sigma)?;
    Ok(kernel_value(squared_distance(x, y), sigma))
}

#[inline]
pub(crate) fn kernel_value(sq_dist: f64, sigma: f64) -> f64 {
    libm::exp(-sq_dist / (2.0 * sigma * sigma))
}

/// Gaussian Gram matrix of the rows of `x`.
pub fn gram(x: &Matrix, sigma: f64) -> Result<Matrix> {
    if x.rows() == 0 {
        return Err(Error::Empty("gram: no rows"));
    }
    check_positive("sigma", sigma)?;
    let n = x.rows();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        for j in i + 1..n {
            let v = kernel_value(squared_distance(x.row(i), x.row(j)), sigma);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// [`gram`] tagged with which variable it was built from.
pub fn gram_matrix(x: &Matrix, sigma: f64, source: GramSource) -> Result<GramMatrix> {
    Ok(GramMatrix {
        values: gram(x, sigma)?,
        source,
    })
}

/// Analytic gradient of `k(X_j, ·)` at `x` for every sample `X_j`:
/// `(1/σ²)(X_j − x)·k(X_j, x)`.
pub fn kernel_gradient_stack(x_data: &Matrix, x: &[f64], sigma: f64) -> Result<GradientStack> {
    if x_data.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "kernel_gradient_stack",
            expected: x_data.cols(),
            found: x.len(),
        });
    }
    check_positive("sigma", sigma)?;
    let inv_s2 = 1.0 / (sigma * sigma);
    let mut values = Matrix::zeros(x_data.rows(), x.len());
    for j in 0..x_data.rows() {
        let row = x_data.row(j);
        let w = inv_s2 * kernel_value(squared_distance(row, x), sigma);
        for (out, (a, b)) in values.row_mut(j).iter_mut().zip(row.iter().zip(x)) {
            *out = w * (a - b);
        }
    }
    Ok(GradientStack { values })
}

/// Median of the `n(n−1)/2` pairwise Euclidean distances between rows.
///
/// Fails when fewer than two rows are given or when the median is zero
/// (most points coincide); the caller then has to choose a bandwidth.
pub fn median_heuristic(x: &Matrix) -> Result<f64> {
    let mut dists = pairwise_distances(x)?;
    let med = median_in_place(&mut dists);
    if med > 0.0 && med.is_finite() {
        Ok(med)
    } else {
        Err(Error::Degenerate("median pairwise distance is zero"))
    }
}

/// Median over the strictly positive pairwise distances. Fallback for
/// discrete responses where more than half of the pairs coincide.
pub fn median_positive_distance(x: &Matrix) -> Result<f64> {
    let mut dists: Vec<f64> = pairwise_distances(x)?.into_iter().filter(|d| *d > 0.0).collect();
    if dists.is_empty() {
        return Err(Error::Degenerate("all points coincide"));
    }
    Ok(median_in_place(&mut dists))
}

fn pairwise_distances(x: &Matrix) -> Result<Vec<f64>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Empty("median heuristic needs at least two points"));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(libm::sqrt(squared_distance(x.row(i), x.row(j))));
        }
    }
    Ok(dists)
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let len = values.len();
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if len % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + upper)
    }
}
