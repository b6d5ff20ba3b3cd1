//! Gradient-based kernel dimension reduction (gKDR).
//!
//! Estimates a linear projection `B` (m×d, orthonormal columns) such that the
//! response `Y` depends on the input `X` only through `BᵀX`. The estimator
//! averages, over the sample, the outer products of gradients of kernel
//! conditional-mean estimates and keeps the top eigenvectors of the result.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. File formats, the
//! command line and timing live in the `gkdr-cli` companion crate.
//!
//! Module map:
//!
//! * [`kernels`]: Gaussian kernel, Gram matrices, kernel gradients, median heuristic.
//! * [`linalg`]: symmetric eigensolver, regularized Cholesky solves, pivoted
//!   incomplete Cholesky and the Woodbury identity.
//! * [`gkdr`]: candidate matrices and the gKDR / gKDR-i / gKDR-v estimators.
//! * [`model_selection`]: kNN prediction and cross-validated bandwidth selection.
//! * [`evaluation`]: subspace error, classification error, synthetic benchmarks.
//! * [`data`]: synthetic generators, one-hot encoding, splits, standardization.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod evaluation;
pub mod gkdr;
pub mod kernels;
pub mod linalg;
pub mod matrix;
pub mod model_selection;
pub mod rng;

pub use crate::error::{Error, Result};
pub use crate::matrix::Matrix;

pub use crate::data::{Dataset, SynthKind};
pub use crate::gkdr::{
    average_candidate, average_candidate_lowrank, candidate_matrix_at, fit, fit_gkdr, fit_gkdr_i, fit_gkdr_v, project,
    CandidateMatrix, GkdrConfig, LowRankOptions, Method, Projection,
};
pub use crate::kernels::{gaussian_kernel, gram, kernel_gradient_stack, median_heuristic, KernelSpec};
pub use crate::model_selection::{cross_validate, knn_predict, CvConfig, CvReport, Task};
