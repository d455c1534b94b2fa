//! Covariance models, sparse signals and synthetic data generators.

mod construct;
mod outlier;
mod restricted;
mod sampling;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Spectrum};

pub use construct::{
    decay_covariance, make_lvm_covariance, make_outlier_covariance, make_spiked_covariance,
    LatentVariableModel,
};
pub use outlier::{construct_outlier_rescaling, OutlierRescaling};
pub use restricted::{check_restricted_lower_bound, find_restricted_violation};
pub use sampling::{
    sample_slr, sample_sparse_spike, sample_wishart_data, WishartModel, WishartSample,
};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

/// A symmetric positive semidefinite covariance matrix with a lazily computed
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct Covariance {
    matrix: DMatrix<f64>,
    spectrum: OnceLock<Spectrum>,
}

impl Covariance {
    /// Validates symmetry and positive semidefiniteness. The stored matrix is
    /// the symmetrized input.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let scale = linalg::max_abs(&matrix);
        let asym = linalg::max_abs(&(&matrix - matrix.transpose()));
        if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(invalid(format!("covariance is not symmetric (max |A - Aᵀ| = {asym:e})")));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let cov = Covariance {
            matrix,
            spectrum: OnceLock::new(),
        };
        let spec = cov.spectrum();
        if let (Some(&lo), Some(&hi)) = (spec.values.as_slice().first(), spec.values.as_slice().last()) {
            if lo < -PSD_TOL * hi.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lo });
            }
        }
        Ok(cov)
    }

    pub fn identity(n: usize) -> Self {
        Covariance {
            matrix: DMatrix::identity(n, n),
            spectrum: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Eigenvalues ascending with matching eigenvector columns.
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum
            .get_or_init(|| linalg::symmetric_spectrum(&self.matrix))
    }

    /// `‖v‖²_Σ = vᵀΣv`.
    pub fn norm_sq(&self, v: &DVector<f64>) -> f64 {
        linalg::quad_form(&self.matrix, v)
    }

    /// Symmetric square root with negative round-off eigenvalues clamped to 0.
    pub fn sqrt(&self) -> DMatrix<f64> {
        linalg::psd_sqrt(self.spectrum())
    }
}

/// A positive diagonal matrix, stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    d: DVector<f64>,
}

impl DiagonalScaling {
    pub fn new(d: DVector<f64>) -> Result<Self> {
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("diagonal entry {i} must be positive and finite, got {v}")));
        }
        Ok(DiagonalScaling { d })
    }

    pub fn from_slice(d: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(d))
    }

    pub fn identity(n: usize) -> Self {
        DiagonalScaling {
            d: DVector::from_element(n, 1.0),
        }
    }

    /// `diag(M)` of a square matrix.
    pub fn diagonal_of(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.diagonal())
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn entries(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn get(&self, i: usize) -> f64 {
        self.d[i]
    }

    pub fn sqrt(&self) -> DVector<f64> {
        self.d.map(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> DVector<f64> {
        self.d.map(|v| 1.0 / v.sqrt())
    }

    pub fn divide_entry(&mut self, i: usize, factor: f64) {
        self.d[i] /= factor;
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.d)
    }

    pub fn determinant(&self) -> f64 {
        self.d.iter().product()
    }
}

/// A size-`k` support with independent signs; the implied unit vector has
/// entries `sign / √k` on the support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSpike {
    n: usize,
    support: Vec<usize>,
    signs: Vec<i8>,
}

impl SparseSpike {
    pub fn new(n: usize, support: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        if support.is_empty() || support.len() != signs.len() {
            return Err(invalid("spike support must be non-empty with one sign per index"));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(invalid("spike signs must be ±1"));
        }
        let mut pairs: Vec<(usize, i8)> = support.into_iter().zip(signs).collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) || pairs.last().is_some_and(|p| p.0 >= n) {
            return Err(invalid("spike support must be distinct indices below n"));
        }
        let (support, signs) = pairs.into_iter().unzip();
        Ok(SparseSpike { n, support, signs })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    /// Sorted support indices.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn contains(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    pub fn vector(&self) -> DVector<f64> {
        let scale = 1.0 / (self.k() as f64).sqrt();
        let mut w = DVector::zeros(self.n);
        for (&i, &s) in self.support.iter().zip(&self.signs) {
            w[i] = f64::from(s) * scale;
        }
        w
    }
}

/// Ground truth for a sparse linear regression problem.
#[derive(Debug, Clone)]
pub struct SlrInstance {
    pub covariance: Covariance,
    pub w_star: DVector<f64>,
    pub sigma: f64,
    pub k: usize,
    /// The rescaling `D` when known by construction.
    pub oracle_scaling: Option<DiagonalScaling>,
    /// Factor `A` of the low-rank part `L = AAᵀ`.
    pub low_rank_part: Option<DMatrix<f64>>,
}

impl SlrInstance {
    pub fn new(covariance: Covariance, w_star: DVector<f64>, sigma: f64, k: usize) -> Result<Self> {
        if w_star.len() != covariance.dim() {
            return Err(Error::DimensionMismatch(format!(
                "signal has length {}, covariance is {}x{}",
                w_star.len(),
                covariance.dim(),
                covariance.dim()
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("noise level must be finite and nonnegative"));
        }
        let nnz = w_star.iter().filter(|v| **v != 0.0).count();
        if nnz > k {
            return Err(invalid(format!("signal has {nnz} nonzeros, more than k = {k}")));
        }
        Ok(SlrInstance {
            covariance,
            w_star,
            sigma,
            k,
            oracle_scaling: None,
            low_rank_part: None,
        })
    }

    pub fn with_oracle(mut self, scaling: DiagonalScaling, low_rank_part: Option<DMatrix<f64>>) -> Self {
        self.oracle_scaling = Some(scaling);
        self.low_rank_part = low_rank_part;
        self
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    /// Out-of-sample prediction error `‖ŵ − w*‖²_Σ`.
    pub fn prediction_error(&self, w_hat: &DVector<f64>) -> f64 {
        self.covariance.norm_sq(&(w_hat - &self.w_star))
    }
}

/// Design matrix with samples as rows, plus an optional response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub x: DMatrix<f64>,
    pub y: Option<DVector<f64>>,
}

impl SampleMatrix {
    pub fn new(x: DMatrix<f64>, y: Option<DVector<f64>>) -> Result<Self> {
        if let Some(y) = &y {
            if y.len() != x.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} responses for {} samples",
                    y.len(),
                    x.nrows()
                )));
            }
        }
        Ok(SampleMatrix { x, y })
    }

    pub fn covariates(x: DMatrix<f64>) -> Self {
        SampleMatrix { x, y: None }
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn response(&self) -> Result<&DVector<f64>> {
        self.y
            .as_ref()
            .ok_or_else(|| invalid("sample matrix has no response vector"))
    }

    /// `Σ̂ = 𝕏ᵀ𝕏 / m`.
    pub fn empirical_covariance(&self) -> DMatrix<f64> {
        linalg::gram(&self.x)
    }

    /// Rows `start..end` as a new sample matrix.
    pub fn rows(&self, start: usize, end: usize) -> SampleMatrix {
        let len = end - start;
        SampleMatrix {
            x: self.x.rows(start, len).into_owned(),
            y: self.y.as_ref().map(|y| y.rows(start, len).into_owned()),
        }
    }
}

/// Parameters of the k-sparse spiked Wishart model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikedWishartParams {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub m: usize,
}

impl SpikedWishartParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(invalid(format!("need 1 <= k <= n, got k = {}, n = {}", self.k, self.n)));
        }
        if !(self.beta > -1.0) || !self.beta.is_finite() {
            return Err(invalid(format!("spike strength must exceed -1, got {}", self.beta)));
        }
        Ok(())
    }
}
