//! Synthetic benchmark generators, one-hot encoding, standardization and
//! train/test splitting. Parsing files is left to the CLI crate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::rng::{seeded, uniform_symmetric};

/// Input dimension of every synthetic generator.
pub const SYNTH_DIM: usize = 10;

/// Standard deviation of the additive noise `W` (variance `10⁻²`).
pub const NOISE_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    /// `n×1` for regression, `n×L` one-hot for classification.
    pub y: Matrix,
    /// Class names in one-hot column order, for classification data.
    pub labels: Option<Vec<String>>,
    /// True projection, when known.
    pub b0: Option<Matrix>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    /// Class index of each row (argmax of the one-hot row).
    pub fn class_indices(&self) -> Vec<usize> {
        class_indices(&self.y)
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
            labels: self.labels.clone(),
            b0: self.b0.clone(),
        }
    }
}

/// The synthetic problems. `A` and `B` are regression benchmarks with one and
/// two true directions; `Quadratic` is an even function of a single
/// direction, so the average gradient over the symmetric input law is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SynthKind {
    A,
    B,
    Quadratic,
}

impl SynthKind {
    /// Dimension of the true subspace.
    pub fn true_dim(self) -> usize {
        match self {
            SynthKind::A | SynthKind::Quadratic => 1,
            SynthKind::B => 2,
        }
    }

    pub fn b0(self) -> Matrix {
        let mut b = Matrix::zeros(SYNTH_DIM, self.true_dim());
        match self {
            SynthKind::A | SynthKind::Quadratic => {
                let s = libm::sqrt(5.0);
                b[(0, 0)] = 1.0 / s;
                b[(1, 0)] = 2.0 / s;
            }
            SynthKind::B => {
                let s = core::f64::consts::FRAC_1_SQRT_2;
                b[(0, 0)] = s;
                b[(1, 0)] = s;
                b[(0, 1)] = s;
                b[(1, 1)] = -s;
            }
        }
        b
    }

    /// Noise-free response at one input row.
    pub fn response(self, x: &[f64]) -> f64 {
        match self {
            SynthKind::A => {
                let z = (x[0] + 2.0 * x[1]) / libm::sqrt(5.0);
                z * libm::sin(libm::sqrt(5.0) * z)
            }
            SynthKind::B => {
                let s = core::f64::consts::FRAC_1_SQRT_2;
                let z1 = s * (x[0] + x[1]);
                let z2 = s * (x[0] - x[1]);
                (z1 * z1 * z1 + z2) * (z1 - z2 * z2 * z2)
            }
            SynthKind::Quadratic => {
                let z = (x[0] + 2.0 * x[1]) / libm::sqrt(5.0);
                z * z
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::A => "A",
            SynthKind::B => "B",
            SynthKind::Quadratic => "quadratic",
        }
    }
}

impl core::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(SynthKind::A),
            "B" | "b" => Ok(SynthKind::B),
            "quadratic" | "Q" | "q" => Ok(SynthKind::Quadratic),
            other => Err(invalid(format!(
                "unknown synthetic dataset '{other}' (expected A, B or quadratic)"
            ))),
        }
    }
}

/// Draws `n` samples: `X` uniform on `[−1,1]¹⁰`, `Y = f(X) + W` with
/// `W ~ N(0, 10⁻²)`. All of `X` is drawn first, row by row, then `W`.
pub fn generate<R: Rng + ?Sized>(kind: SynthKind, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let x = Matrix::from_fn(n, SYNTH_DIM, |_, _| uniform_symmetric(rng));
    let noise = Normal::new(0.0, NOISE_SD).map_err(|_| invalid("noise law"))?;
    let y = Matrix::from_fn(n, 1, |i, _| kind.response(x.row(i)) + noise.sample(rng));
    Ok(Dataset {
        x,
        y,
        labels: None,
        b0: Some(kind.b0()),
    })
}

pub fn gen_synth_a(n: usize, seed: u64) -> Result<Dataset> {
    generate(SynthKind::A, n, &mut seeded(seed))
}

pub fn gen_synth_b(n: usize, seed: u64) -> Result<Dataset> {
    generate(SynthKind::B, n, &mut seeded(seed))
}

/// One-hot encodes labels with columns in order of first appearance.
/// Returns the encoding and the distinct labels in column order.
pub fn one_hot<T: PartialEq + Clone>(labels: &[T]) -> (Matrix, Vec<T>) {
    let mut classes: Vec<T> = Vec::new();
    let mut index = Vec::with_capacity(labels.len());
    for label in labels {
        let k = match classes.iter().position(|c| c == label) {
            Some(k) => k,
            None => {
                classes.push(label.clone());
                classes.len() - 1
            }
        };
        index.push(k);
    }
    let y = Matrix::from_fn(
        labels.len(),
        classes.len(),
        |i, j| if index[i] == j { 1.0 } else { 0.0 },
    );
    (y, classes)
}

/// Argmax of each row; the lowest column wins ties.
pub fn class_indices(y: &Matrix) -> Vec<usize> {
    y.iter_rows()
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Column means and sample standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Constant columns get scale 1 so they only get centred.
    pub scales: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &Matrix) -> Self {
        let (n, m) = x.shape();
        let mut means = alloc::vec![0.0; m];
        for row in x.iter_rows() {
            for (mu, v) in means.iter_mut().zip(row) {
                *mu += v;
            }
        }
        means.iter_mut().for_each(|mu| *mu /= n.max(1) as f64);
        let mut scales = alloc::vec![0.0; m];
        for row in x.iter_rows() {
            for ((s, v), mu) in scales.iter_mut().zip(row).zip(&means) {
                *s += (v - mu) * (v - mu);
            }
        }
        for s in scales.iter_mut() {
            let var = if n > 1 { *s / (n - 1) as f64 } else { 0.0 };
            *s = if var > 0.0 { libm::sqrt(var) } else { 1.0 };
        }
        Standardization { means, scales }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - self.means[j]) / self.scales[j])
    }
}

/// Z-scores every column of `x`.
pub fn standardize_columns(x: &Matrix) -> Matrix {
    Standardization::fit(x).apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSize {
    /// Fraction of the rows going to the training part.
    Fraction(f64),
    /// Exact number of training rows.
    Count(usize),
}

/// Seeded shuffle split into disjoint, exhaustive train and test parts.
///
/// With `stratify`, each class contributes to the training part in
/// proportion to its size (largest-remainder rounding), so class counts in
/// either part are within one of exact proportionality.
pub fn train_test_split(ds: &Dataset, size: SplitSize, seed: u64, stratify: bool) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, size, seed, stratify)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Index form of [`train_test_split`]; both lists are sorted.
pub fn split_indices(ds: &Dataset, size: SplitSize, seed: u64, stratify: bool) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = ds.n();
    let n_train = match size {
        SplitSize::Count(k) => k,
        SplitSize::Fraction(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid(format!("train fraction must lie in (0, 1), got {f}")));
            }
            libm::round(f * n as f64) as usize
        }
    };
    if n_train == 0 || n_train >= n {
        return Err(invalid(format!(
            "train size {n_train} must satisfy 1 <= size < n = {n}"
        )));
    }

    let mut rng = seeded(seed);
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    if stratify {
        let classes = ds.class_indices();
        let n_classes = classes.iter().copied().max().map_or(0, |c| c + 1);
        let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); n_classes];
        for (i, &c) in classes.iter().enumerate() {
            groups[c].push(i);
        }
        let quotas = proportional_quotas(&groups, n_train, n);
        for (group, quota) in groups.iter_mut().zip(quotas) {
            group.shuffle(&mut rng);
            train.extend_from_slice(&group[..quota]);
            test.extend_from_slice(&group[quota..]);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        train.extend_from_slice(&order[..n_train]);
        test.extend_from_slice(&order[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn proportional_quotas(groups: &[Vec<usize>], total: usize, n: usize) -> Vec<usize> {
    let exact: Vec<f64> = groups
        .iter()
        .map(|g| g.len() as f64 * total as f64 / n as f64)
        .collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| libm::floor(*e) as usize).collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    // Largest fractional part first, lower class index on ties.
    order.sort_by(|&a, &b| {
        let fa = exact[a] - quotas[a] as f64;
        let fb = exact[b] - quotas[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = total - quotas.iter().sum::<usize>();
    for &g in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if quotas[g] < groups[g].len() {
            quotas[g] += 1;
            remaining -= 1;
        }
    }
    quotas
}
