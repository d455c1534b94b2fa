use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DiagonalScaling, SampleMatrix};
use crate::error::{invalid, Result};
use crate::linalg;

/// Relative slack so that exact boundary equality `vᵀv = vᵀMv` is never
/// reported as a violation because of rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Randomized falsifier for `vᵀv ≤ vᵀ D^{-1/2} Σ̂ D^{-1/2} v` over the cone
/// `‖v‖₁ ≤ γ‖v‖_∞`. Returns `false` only when a violating direction was found.
pub fn check_restricted_lower_bound<R: Rng + ?Sized>(
    x: &SampleMatrix,
    d: &DiagonalScaling,
    gamma: f64,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    Ok(find_restricted_violation(x, d, gamma, trials, rng)?.is_none())
}

/// Like [`check_restricted_lower_bound`] but returns the violating direction.
///
/// Probes every 1- and 2-sparse direction exactly (the minimizing direction
/// of each 2×2 principal block, pulled back into the cone when `γ < 2`), then
/// `trials` random directions with random supports of size up to `2⌈γ⌉`
/// whose non-peak entries are shrunk onto the cone boundary when needed.
pub fn find_restricted_violation<R: Rng + ?Sized>(
    x: &SampleMatrix,
    d: &DiagonalScaling,
    gamma: f64,
    trials: usize,
    rng: &mut R,
) -> Result<Option<DVector<f64>>> {
    if !(gamma > 1.0) {
        return Err(invalid(format!("cone parameter γ must exceed 1, got {gamma}")));
    }
    let n = x.n();
    if d.dim() != n {
        return Err(invalid("scaling dimension does not match the design"));
    }
    let inv_root = d.inv_sqrt();
    let m = linalg::congruence_diag(&x.empirical_covariance(), inv_root.as_slice());
    let violates = |v: &DVector<f64>| {
        let lhs = v.norm_squared();
        linalg::quad_form(&m, v) < lhs * (1.0 - BOUNDARY_SLACK)
    };

    for i in 0..n {
        if m[(i, i)] < 1.0 - BOUNDARY_SLACK {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            return Ok(Some(v));
        }
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = pair_min_direction(m[(i, i)], m[(i, j)], m[(j, j)], gamma);
            let mut v = DVector::zeros(n);
            v[i] = a;
            v[j] = b;
            if violates(&v) {
                return Ok(Some(v));
            }
        }
    }

    let max_support = n.min(2 * gamma.ceil() as usize).max(1);
    for _ in 0..trials {
        let s = rng.random_range(1..=max_support);
        let support = index::sample(rng, n, s);
        let mut v = DVector::zeros(n);
        for i in support.iter() {
            v[i] = rng.sample::<f64, _>(StandardNormal);
        }
        pull_into_cone(&mut v, gamma);
        if violates(&v) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Eigenvector of the smallest eigenvalue of `[[p, q], [q, r]]`, adjusted to
/// satisfy `|a| + |b| ≤ γ max(|a|, |b|)`.
fn pair_min_direction(p: f64, q: f64, r: f64, gamma: f64) -> (f64, f64) {
    let block = DMatrix::from_row_slice(2, 2, &[p, q, q, r]);
    let spec = linalg::symmetric_spectrum(&block);
    let mut v = DVector::from_column_slice(&[spec.vectors[(0, 0)], spec.vectors[(1, 0)]]);
    pull_into_cone(&mut v, gamma);
    (v[0], v[1])
}

/// Shrinks all entries except the largest one until `‖v‖₁ ≤ γ‖v‖_∞`.
fn pull_into_cone(v: &mut DVector<f64>, gamma: f64) {
    let (peak, peak_val) = v.iter().enumerate().fold((0, 0.0_f64), |acc, (i, x)| {
        if x.abs() > acc.1 {
            (i, x.abs())
        } else {
            acc
        }
    });
    if peak_val == 0.0 {
        return;
    }
    let l1 = v.iter().map(|x| x.abs()).sum::<f64>();
    if l1 <= gamma * peak_val {
        return;
    }
    let factor = (gamma - 1.0) * peak_val / (l1 - peak_val);
    for (i, x) in v.iter_mut().enumerate() {
        if i != peak {
            *x *= factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn design_with_gram(target: &DMatrix<f64>, m: usize) -> SampleMatrix {
        // Σ̂ = XᵀX/m = target for X = √m · R where RᵀR = target (n ≤ m).
        let n = target.nrows();
        let root = linalg::psd_sqrt(&linalg::symmetric_spectrum(target));
        let mut x = DMatrix::zeros(m, n);
        x.rows_mut(0, n).copy_from(&(root * (m as f64).sqrt()));
        SampleMatrix::covariates(x)
    }

    #[test]
    fn scaled_identity_always_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = design_with_gram(&(DMatrix::identity(6, 6) * 2.0), 10);
        assert!(check_restricted_lower_bound(&x, &DiagonalScaling::identity(6), 4.0, 500, &mut rng).unwrap());
    }

    #[test]
    fn boundary_equality_counts_as_satisfied() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = design_with_gram(&DMatrix::identity(6, 6), 9);
        assert!(check_restricted_lower_bound(&x, &DiagonalScaling::identity(6), 32.0, 500, &mut rng).unwrap());
    }

    #[test]
    fn duplicate_columns_are_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = linalg::gaussian_matrix(40, 5, &mut rng);
        let c = x.column(1).into_owned();
        x.set_column(3, &c);
        let data = SampleMatrix::covariates(x);
        // halving the diagonal leaves only near-collinear pairs below 1
        let d = DiagonalScaling::new(data.empirical_covariance().diagonal() / 2.0).unwrap();
        let v = find_restricted_violation(&data, &d, 2.0, 10, &mut rng).unwrap().unwrap();
        assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 2);
        assert!(v[1] != 0.0 && v[3] != 0.0);
    }

    #[test]
    fn cone_pullback_hits_boundary() {
        let mut v = DVector::from_column_slice(&[3.0, -1.0, 1.0, 1.0]);
        pull_into_cone(&mut v, 2.0);
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        assert!((l1 - 6.0).abs() < 1e-12);
        assert_eq!(v[0], 3.0);
    }

    #[test]
    fn gamma_must_exceed_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = design_with_gram(&DMatrix::identity(2, 2), 2);
        assert!(check_restricted_lower_bound(&x, &DiagonalScaling::identity(2), 1.0, 1, &mut rng).is_err());
    }
}
