use nalgebra::DVector;

use super::{Covariance, DiagonalScaling};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Oracle rescaling for a covariance with `d` small outlier eigenvalues.
#[derive(Debug, Clone)]
pub struct OutlierRescaling {
    pub scaling: DiagonalScaling,
    /// Number of halvings applied to each coordinate.
    pub halvings: Vec<u32>,
    /// Number of refinement steps, `⌈log₂(λ_n/λ_1)⌉`.
    pub steps: u32,
}

impl OutlierRescaling {
    pub fn touched(&self) -> usize {
        self.halvings.iter().filter(|h| **h > 0).count()
    }
}

/// Iteratively halves every coordinate that carries more than a `1/(8k)`
/// share of some vector in the rescaled low-eigenvalue subspace.
///
/// The subspace is spanned by the `d` eigenvectors of smallest eigenvalue.
/// At each step the largest share of coordinate `i` over the subspace
/// `D^{1/2}·ker(P)` equals the norm of the projection of `e_i` onto it, read
/// off as the `i`-th row norm of an orthonormal basis.
pub fn construct_outlier_rescaling(sigma: &Covariance, d: usize, k: usize) -> Result<OutlierRescaling> {
    let n = sigma.dim();
    if d >= n.max(1) {
        return Err(invalid(format!("outlier count d = {d} must be below n = {n}")));
    }
    if k == 0 {
        return Err(invalid("sparsity k must be positive"));
    }
    let spec = sigma.spectrum();
    let lo = spec.values[0];
    let hi = spec.values[n - 1];
    if !(lo > 1e-14 * hi) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    let steps = (hi / lo).log2().ceil().max(0.0) as u32;
    let kernel = spec.vectors.columns(0, d).into_owned();
    let threshold = 1.0 / (8.0 * k as f64);

    let mut diag = DVector::from_element(n, 1.0);
    let mut halvings = vec![0u32; n];
    if d > 0 {
        for _ in 0..steps {
            let root: Vec<f64> = diag.iter().map(|v: &f64| v.sqrt()).collect();
            let basis = linalg::orthonormal_basis(&linalg::scale_rows(&kernel, &root));
            let heavy: Vec<usize> = (0..n)
                .filter(|&i| basis.row(i).norm() > threshold)
                .collect();
            for i in heavy {
                diag[i] /= 2.0;
                halvings[i] += 1;
            }
        }
    }
    Ok(OutlierRescaling {
        scaling: DiagonalScaling::new(diag)?,
        halvings,
        steps,
    })
}
