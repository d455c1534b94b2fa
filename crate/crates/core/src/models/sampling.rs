use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{SampleMatrix, SlrInstance, SparseSpike, SpikedWishartParams};
use crate::error::{invalid, Result};
use crate::linalg;

/// Draws a spike from the fixed-size sparse Rademacher prior: a uniform
/// size-`k` support and independent uniform signs.
pub fn sample_sparse_spike<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SparseSpike> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let support = index::sample(rng, n, k).into_vec();
    let signs = (0..k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    SparseSpike::new(n, support, signs)
}

/// `m` i.i.d. rows from `N(0, Σ)` and responses `⟨X, w*⟩ + σξ`.
pub fn sample_slr<R: Rng + ?Sized>(instance: &SlrInstance, m: usize, rng: &mut R) -> Result<SampleMatrix> {
    let n = instance.dim();
    let root = instance.covariance.sqrt();
    let x = linalg::gaussian_matrix(m, n, rng) * root;
    let mut y = &x * &instance.w_star;
    if instance.sigma > 0.0 {
        for v in y.iter_mut() {
            *v += instance.sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    SampleMatrix::new(x, Some(y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WishartModel {
    Planted(SpikedWishartParams),
    Null { n: usize, m: usize },
}

#[derive(Debug, Clone)]
pub struct WishartSample {
    pub data: SampleMatrix,
    /// The drawn spike; `None` under the null.
    pub spike: Option<SparseSpike>,
}

/// Samples from the planted spiked Wishart model or the null `N(0, I)`.
pub fn sample_wishart_data<R: Rng + ?Sized>(model: &WishartModel, rng: &mut R) -> Result<WishartSample> {
    match *model {
        WishartModel::Null { n, m } => Ok(WishartSample {
            data: SampleMatrix::covariates(linalg::gaussian_matrix(m, n, rng)),
            spike: None,
        }),
        WishartModel::Planted(params) => {
            params.validate()?;
            let spike = sample_sparse_spike(params.n, params.k, rng)?;
            let data = spiked_rows(&spike, params.beta, params.m, rng);
            Ok(WishartSample {
                data: SampleMatrix::covariates(data),
                spike: Some(spike),
            })
        }
    }
}

/// Rows from `N(0, I + βwwᵀ)` using the closed-form root
/// `I + (√(1+β) − 1) wwᵀ`.
pub(crate) fn spiked_rows<R: Rng + ?Sized>(spike: &SparseSpike, beta: f64, m: usize, rng: &mut R) -> DMatrix<f64> {
    let w = spike.vector();
    let mut z = linalg::gaussian_matrix(m, spike.dim(), rng);
    let c = (1.0 + beta).sqrt() - 1.0;
    let proj: DVector<f64> = &z * &w;
    z.ger(c, &proj, &w, 1.0);
    z
}
