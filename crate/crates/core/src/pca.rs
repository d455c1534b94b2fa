//! Detection of a sparse negative spike.
//!
//! Three tools: a reduction from detection to sparse regression through
//! per-coordinate holdout residuals, the explicit kernel certificate showing
//! that the sparse minimum-eigenvalue relaxation vanishes on null data with
//! few samples, and an empirical check on the entry sums of random
//! projections.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::models::{DiagonalScaling, SampleMatrix};
use crate::rescale::{smart_scaling, SmartScalingConfig};
use crate::solvers::{weighted_lasso, LassoConfig};

/// Threshold for the holdout residual statistic `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaThreshold {
    Fixed(f64),
    /// `χ²_h` quantile at level `δ/n`, divided by `h`: under the null and a
    /// zero fit, every `η_i` stays above it with probability `1 − δ`.
    NullCalibrated { delta: f64 },
}

impl Default for EtaThreshold {
    fn default() -> Self {
        EtaThreshold::Fixed(0.9)
    }
}

impl EtaThreshold {
    pub fn resolve(&self, n: usize, holdout: usize) -> Result<f64> {
        match *self {
            EtaThreshold::Fixed(t) if t > 0.0 && t < 1.0 => Ok(t),
            EtaThreshold::Fixed(t) => Err(invalid(format!("η threshold must lie in (0, 1), got {t}"))),
            EtaThreshold::NullCalibrated { delta } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(invalid(format!("δ must lie in (0, 1), got {delta}")));
                }
                let h = holdout as f64;
                let chi = ChiSquared::new(h).map_err(|e| invalid(e.to_string()))?;
                Ok(chi.inverse_cdf(delta / n as f64) / h)
            }
        }
    }
}

/// Sparse-regression estimator used for each coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum SlrBackend {
    /// Smart scaling then the weighted Lasso. With `shared_scaling` the
    /// scaling is computed once on all `n` training columns and restricted
    /// to `[n] ∖ {i}` for each regression.
    RescaledLasso {
        lambda: Option<f64>,
        scaling: SmartScalingConfig,
        shared_scaling: bool,
    },
    /// Lasso with penalty weights equal to the column standard deviations.
    StandardizedLasso { lambda: Option<f64> },
    /// Least squares on the known spike support (minus the target).
    Oracle { support: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub k: usize,
    /// `None` means `max(50, ⌈10 ln n⌉)`.
    pub holdout: Option<usize>,
    pub eta_threshold: EtaThreshold,
    pub backend: SlrBackend,
}

impl DetectionConfig {
    pub fn new(k: usize, backend: SlrBackend) -> Self {
        DetectionConfig {
            k,
            holdout: None,
            eta_threshold: EtaThreshold::default(),
            backend,
        }
    }

    pub fn holdout_for(&self, n: usize) -> usize {
        self.holdout
            .unwrap_or_else(|| 50.max((10.0 * (n as f64).ln()).ceil() as usize))
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub planted: bool,
    pub eta: Vec<f64>,
    pub argmin: usize,
    pub threshold: f64,
}

impl Detection {
    pub fn min_eta(&self) -> f64 {
        self.eta[self.argmin]
    }
}

/// Default Lasso penalty for the per-coordinate regressions, `2√(2 ln n / m′)`.
pub fn default_detection_lambda(n: usize, m_train: usize) -> f64 {
    2.0 * (2.0 * (n.max(2) as f64).ln() / m_train as f64).sqrt()
}

/// Regresses each coordinate on the others using the first `m − holdout`
/// samples and reports `η_i`, the mean squared residual on the remaining
/// samples. Declares a spike iff some `η_i` falls below the threshold.
pub fn pca_detect(z: &SampleMatrix, cfg: &DetectionConfig) -> Result<Detection> {
    let (m, n) = z.x.shape();
    if n < 2 {
        return Err(invalid("detection needs at least two coordinates"));
    }
    let holdout = cfg.holdout_for(n);
    if holdout == 0 || m <= holdout {
        return Err(invalid(format!("need more than {holdout} samples, got {m}")));
    }
    let threshold = cfg.eta_threshold.resolve(n, holdout)?;
    let m_train = m - holdout;
    let train = z.x.rows(0, m_train).into_owned();
    let test = z.x.rows(m_train, holdout).into_owned();

    let shared = match &cfg.backend {
        SlrBackend::RescaledLasso {
            scaling,
            shared_scaling: true,
            ..
        } => Some(smart_scaling(&SampleMatrix::covariates(train.clone()), scaling)?.scaling),
        SlrBackend::Oracle { support } if support.iter().any(|&j| j >= n) => {
            return Err(invalid("oracle support index out of range"));
        }
        _ => None,
    };

    let eta: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            coordinate_eta(&train, &test, i, cfg, shared.as_ref())
                .map_err(|e| Error::Coordinate { coordinate: i, source: Box::new(e) })
        })
        .collect();
    let eta = eta.into_iter().collect::<Result<Vec<_>>>()?;
    let argmin = (0..n).fold(0, |best, i| if eta[i] < eta[best] { i } else { best });
    Ok(Detection {
        planted: eta[argmin] < threshold,
        eta,
        argmin,
        threshold,
    })
}

fn coordinate_eta(
    train: &DMatrix<f64>,
    test: &DMatrix<f64>,
    i: usize,
    cfg: &DetectionConfig,
    shared: Option<&DiagonalScaling>,
) -> Result<f64> {
    let n = train.ncols();
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let w = match &cfg.backend {
        SlrBackend::Oracle { support } => {
            let cols: Vec<usize> = support.iter().copied().filter(|&j| j != i).collect();
            let coef = least_squares(&train.select_columns(&cols), &train.column(i).into_owned())?;
            let mut w = DVector::zeros(n);
            for (c, &j) in coef.iter().zip(&cols) {
                w[j] = *c;
            }
            w
        }
        backend => {
            let data = SampleMatrix::new(train.select_columns(&others), Some(train.column(i).into_owned()))?;
            let (lambda, scaling) = match backend {
                SlrBackend::RescaledLasso { lambda, scaling, .. } => {
                    let d = match shared {
                        Some(full) => DiagonalScaling::new(DVector::from_iterator(
                            n - 1,
                            others.iter().map(|&j| full.get(j)),
                        ))?,
                        None => smart_scaling(&SampleMatrix::covariates(data.x.clone()), scaling)?.scaling,
                    };
                    (*lambda, d)
                }
                SlrBackend::StandardizedLasso { lambda } => (
                    *lambda,
                    DiagonalScaling::diagonal_of(&data.empirical_covariance())?,
                ),
                SlrBackend::Oracle { .. } => unreachable!(),
            };
            let lambda = lambda.unwrap_or_else(|| default_detection_lambda(n, train.nrows()));
            let fit = weighted_lasso(&data, &LassoConfig::new(lambda).with_tol(1e-6).with_scaling(scaling))?;
            let mut w = DVector::zeros(n);
            for (c, &j) in fit.coef.iter().zip(&others) {
                w[j] = *c;
            }
            w
        }
    };
    let resid = test.column(i) - test * &w;
    Ok(resid.norm_squared() / test.nrows() as f64)
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::RankDegenerate { m: x.nrows(), n: x.ncols() });
    }
    let normal = x.tr_mul(x);
    normal
        .cholesky()
        .map(|c| c.solve(&x.tr_mul(y)))
        .ok_or(Error::RankDegenerate { m: x.nrows(), n: x.ncols() })
}

/// `Var(Z_i | Z_{∖i})` for a support coordinate of `N(0, I + βwwᵀ)` with a
/// `k`-sparse unit spike of equal-magnitude entries.
pub fn conditional_variance_spike(k: usize, beta: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("sparsity k must be positive"));
    }
    if !(beta > -1.0) {
        return Err(invalid(format!("β must exceed −1, got {beta}")));
    }
    Ok((1.0 + beta) / (1.0 + beta * (1.0 - 1.0 / k as f64)))
}

/// Feasible point `A = (I − P)/(n − r)` of the sparse relaxation, where `P`
/// projects onto the column span of `Σ̂` and `r` is its rank.
#[derive(Debug, Clone)]
pub struct SdpCertificate {
    pub a: DMatrix<f64>,
    pub objective: f64,
    pub l1_mass: f64,
    pub feasible: bool,
    pub rank: usize,
}

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

pub fn sdp_kernel_certificate(z: &SampleMatrix, k: usize) -> Result<SdpCertificate> {
    let (m, n) = z.x.shape();
    if m >= n {
        return Err(Error::RankDegenerate { m, n });
    }
    let basis = row_space_basis(&z.x);
    let rank = basis.ncols();
    let mut a = -(&basis * basis.transpose());
    for j in 0..n {
        a[(j, j)] += 1.0;
    }
    a /= (n - rank) as f64;
    let sigma_hat = z.empirical_covariance();
    let objective = sigma_hat.component_mul(&a).sum();
    let l1_mass = a.iter().map(|v| v.abs()).sum::<f64>();
    Ok(SdpCertificate {
        feasible: l1_mass <= k as f64,
        a,
        objective,
        l1_mass,
        rank,
    })
}

/// Orthonormal basis (as columns) of the row space of `x`.
fn row_space_basis(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    if x.nrows() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = x.transpose().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| top > 0.0 && svd.singular_values[j] > RANK_TOLERANCE * top)
        .collect();
    u.select_columns(&keep)
}

/// `Σ_ij |P_ij|` for `trials` projections onto uniformly random
/// `m`-dimensional subspaces of `ℝⁿ`.
pub fn projection_entry_sum<R: Rng + ?Sized>(n: usize, m: usize, trials: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m > n {
        return Err(invalid(format!("subspace dimension {m} exceeds n = {n}")));
    }
    let mut sums = Vec::with_capacity(trials);
    for _ in 0..trials {
        if m == 0 {
            sums.push(0.0);
            continue;
        }
        let q = linalg::orthonormal_basis(&linalg::gaussian_matrix(n, m, rng));
        let p = &q * q.transpose();
        sums.push(p.iter().map(|v| v.abs()).sum());
    }
    Ok(sums)
}

/// `11 n √(m ln(n/δ))`.
pub fn projection_sum_bound(n: usize, m: usize, delta: f64) -> f64 {
    11.0 * n as f64 * (m as f64 * (n as f64 / delta).ln()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample_wishart_data, SpikedWishartParams, WishartModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conditional_variance_closed_form() {
        assert_eq!(conditional_variance_spike(7, 0.0).unwrap(), 1.0);
        assert!((conditional_variance_spike(1, -0.3).unwrap() - 0.7).abs() < 1e-15);
        let v = conditional_variance_spike(5, -0.9).unwrap();
        assert!((v - 0.1 / 0.28).abs() < 1e-15);
        assert!(conditional_variance_spike(3, -1.0).is_err());
    }

    #[test]
    fn certificate_without_samples_is_uniform() {
        let z = SampleMatrix::covariates(DMatrix::zeros(0, 8));
        let c = sdp_kernel_certificate(&z, 1).unwrap();
        assert_eq!(c.rank, 0);
        assert!((c.a.clone() - DMatrix::identity(8, 8) / 8.0).amax() < 1e-15);
        assert!((c.l1_mass - 1.0).abs() < 1e-12);
        assert!(c.feasible);
        assert_eq!(c.objective, 0.0);
    }

    #[test]
    fn certificate_is_a_trace_one_psd_kernel_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = SampleMatrix::covariates(linalg::gaussian_matrix(6, 30, &mut rng));
        let c = sdp_kernel_certificate(&z, 40).unwrap();
        assert_eq!(c.rank, 6);
        assert!((c.a.trace() - 1.0).abs() < 1e-10);
        assert!((&c.a - c.a.transpose()).amax() < 1e-14);
        assert!(linalg::symmetric_spectrum(&c.a).values[0] >= -1e-10);
        assert!(c.objective.abs() <= 1e-10);
        assert!((&z.x * &c.a).amax() < 1e-10);
    }

    #[test]
    fn certificate_requires_fewer_samples_than_dimension() {
        let z = SampleMatrix::covariates(DMatrix::identity(5, 5));
        assert!(matches!(sdp_kernel_certificate(&z, 1), Err(Error::RankDegenerate { m: 5, n: 5 })));
    }

    #[test]
    fn projection_sums_at_the_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let full = projection_entry_sum(7, 7, 3, &mut rng).unwrap();
        assert!(full.iter().all(|s| (s - 7.0).abs() < 1e-10));
        assert_eq!(projection_entry_sum(7, 0, 2, &mut rng).unwrap(), vec![0.0, 0.0]);
        assert!(projection_entry_sum(3, 4, 1, &mut rng).is_err());
    }

    #[test]
    fn null_calibrated_threshold_is_below_one() {
        let t = EtaThreshold::NullCalibrated { delta: 0.05 }.resolve(200, 200).unwrap();
        assert!(t > 0.5 && t < 0.8, "threshold {t}");
        assert!(EtaThreshold::Fixed(1.2).resolve(10, 10).is_err());
    }

    #[test]
    fn oracle_backend_finds_a_strong_spike() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = SpikedWishartParams { n: 30, k: 3, beta: -0.95, m: 400 };
        let sample = sample_wishart_data(&WishartModel::Planted(params), &mut rng).unwrap();
        let spike = sample.spike.unwrap();
        let cfg = DetectionConfig::new(3, SlrBackend::Oracle { support: spike.support().to_vec() });
        let det = pca_detect(&sample.data, &cfg).unwrap();
        assert!(det.planted);
        assert!(spike.contains(det.argmin));
    }

    #[test]
    fn detection_rejects_short_samples() {
        let z = SampleMatrix::covariates(DMatrix::zeros(50, 4));
        let cfg = DetectionConfig::new(1, SlrBackend::StandardizedLasso { lambda: None });
        assert!(pca_detect(&z, &cfg).is_err());
    }
}
