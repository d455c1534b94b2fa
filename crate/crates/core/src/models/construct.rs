use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{Covariance, DiagonalScaling, SparseSpike};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Latent variable model `Σ = D + AAᵀ`, with the oracle rescaling `D` and
/// low-rank part kept alongside.
#[derive(Debug, Clone)]
pub struct LatentVariableModel {
    pub covariance: Covariance,
    pub oracle: DiagonalScaling,
    /// `A`, an `n × h` factor.
    pub factor: DMatrix<f64>,
}

impl LatentVariableModel {
    /// `L = AAᵀ`.
    pub fn low_rank(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

pub fn make_lvm_covariance(d_diag: &DVector<f64>, a: &DMatrix<f64>) -> Result<LatentVariableModel> {
    let n = d_diag.len();
    if a.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} rows, diagonal has {n} entries",
            a.nrows()
        )));
    }
    if a.ncols() > n {
        return Err(invalid(format!("latent dimension {} exceeds n = {n}", a.ncols())));
    }
    let oracle = DiagonalScaling::new(d_diag.clone())?;
    let matrix = DMatrix::from_diagonal(d_diag) + a * a.transpose();
    Ok(LatentVariableModel {
        covariance: Covariance::new(matrix)?,
        oracle,
        factor: a.clone(),
    })
}

/// `Σ = U diag(λ) Uᵀ` for a Haar-random orthogonal `U`.
pub fn make_outlier_covariance<R: Rng + ?Sized>(eigenvalues: &[f64], rng: &mut R) -> Result<Covariance> {
    if eigenvalues.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("eigenvalues must be positive and finite"));
    }
    if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("eigenvalues must be sorted ascending"));
    }
    let u = linalg::haar_orthogonal(eigenvalues.len(), rng);
    let matrix = linalg::scale_columns(&u, eigenvalues) * u.transpose();
    Covariance::new(matrix)
}

/// `Σ = I − (1−ε) vvᵀ/‖v‖²` with `v = (1, 1/2, …, 1/2^{n−1})`: a single
/// eigenvalue `ε` along a direction that is quantitatively sparse.
pub fn decay_covariance(n: usize, eps: f64) -> Result<Covariance> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("ε must lie in (0, 1], got {eps}")));
    }
    let v = DVector::from_iterator(n, (0..n).map(|i| 0.5_f64.powi(i as i32)));
    let v2 = v.norm_squared();
    let matrix = DMatrix::identity(n, n) - (&v * v.transpose()) * ((1.0 - eps) / v2);
    Covariance::new(matrix)
}

/// `Σ = I + β wwᵀ` for the unit spike `w`.
pub fn make_spiked_covariance(spike: &SparseSpike, beta: f64) -> Result<Covariance> {
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(invalid(format!("spike strength must exceed -1, got {beta}")));
    }
    let n = spike.dim();
    let w = spike.vector();
    Covariance::new(DMatrix::identity(n, n) + (&w * w.transpose()) * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lvm_without_latents_is_diagonal() {
        let d = DVector::from_element(4, 1.0);
        let lvm = make_lvm_covariance(&d, &DMatrix::zeros(4, 0)).unwrap();
        assert_eq!(lvm.covariance.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn lvm_two_dimensional_identity_example() {
        let eps: f64 = 0.1;
        let d = DVector::from_column_slice(&[eps * eps, 1.0]);
        let a = DMatrix::from_column_slice(2, 1, &[(1.0 - eps * eps).sqrt(), 0.0]);
        let lvm = make_lvm_covariance(&d, &a).unwrap();
        let diff = lvm.covariance.matrix() - DMatrix::<f64>::identity(2, 2);
        assert!(diff.amax() < 1e-15);
    }

    #[test]
    fn lvm_low_rank_part_has_rank_at_most_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let h = 3;
        let d = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
        let a = linalg::gaussian_matrix(n, h, &mut rng);
        let lvm = make_lvm_covariance(&d, &a).unwrap();
        let rest = lvm.covariance.matrix() - DMatrix::from_diagonal(&d);
        let sv = rest.singular_values();
        let top = sv.max();
        let numerical_rank = sv.iter().filter(|s| **s > 1e-8 * top).count();
        assert!(numerical_rank <= h);
    }

    #[test]
    fn lvm_rejects_nonpositive_diagonal() {
        let d = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(matches!(
            make_lvm_covariance(&d, &DMatrix::zeros(2, 1)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn outlier_covariance_round_trips_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut eig = vec![1.0; 15];
        eig[0] = 1e-3;
        eig[14] = 50.0;
        let cov = make_outlier_covariance(&eig, &mut rng).unwrap();
        for (a, b) in cov.spectrum().values.iter().zip(&eig) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let ones = make_outlier_covariance(&[1.0; 6], &mut rng).unwrap();
        assert!((ones.matrix() - DMatrix::<f64>::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn outlier_covariance_validates_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(make_outlier_covariance(&[2.0, 1.0], &mut rng).is_err());
        assert!(make_outlier_covariance(&[0.0, 1.0], &mut rng).is_err());
    }

    #[test]
    fn decay_covariance_has_single_small_eigenvalue() {
        let cov = decay_covariance(10, 1e-3).unwrap();
        let vals = &cov.spectrum().values;
        assert!((vals[0] - 1e-3).abs() < 1e-12);
        for v in vals.iter().skip(1) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spiked_covariance_examples() {
        let spike = SparseSpike::new(2, vec![0], vec![1]).unwrap();
        let cov = make_spiked_covariance(&spike, -0.5).unwrap();
        assert_eq!(cov.matrix(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]));
        let zero = make_spiked_covariance(&spike, 0.0).unwrap();
        assert_eq!(zero.matrix(), &DMatrix::identity(2, 2));
        assert!(make_spiked_covariance(&spike, -1.0).is_err());
    }

    #[test]
    fn spike_is_eigenvector_with_eigenvalue_one_plus_beta() {
        let spike = SparseSpike::new(9, vec![1, 4, 5, 8], vec![1, -1, -1, 1]).unwrap();
        let w = spike.vector();
        for beta in [-0.99, -0.3, 0.7, 4.0] {
            let cov = make_spiked_covariance(&spike, beta).unwrap();
            let resid = cov.matrix() * &w - &w * (1.0 + beta);
            assert!(resid.amax() < 1e-12);
        }
        let cov = make_spiked_covariance(&spike, -0.9).unwrap();
        assert!((cov.spectrum().values[0] - 0.1).abs() < 1e-12);
    }
}
