//! Testing an empty Gaussian graphical model against a sparse one with a
//! nonnegligible edge, by the largest pairwise explained-variance ratio.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::models::{Covariance, SampleMatrix, SYMMETRY_TOL};

/// Residual variance at or below this fraction of the total counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// `γ̂ = R²/(1 − R²)` from the simple regression of `y` on `x` with an
/// intercept.
pub fn gamma_hat(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    if x.len() < 4 {
        return Err(invalid(format!("γ̂ needs at least 4 samples, got {}", x.len())));
    }
    let (sxx, syy, sxy) = centered_moments(x, y);
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(invalid("constant sample: zero variance"));
    }
    gamma_from_moments(sxx, syy, sxy)
}

fn centered_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    x.iter().zip(y).fold((0.0, 0.0, 0.0), |(a, b, c), (xi, yi)| {
        let (dx, dy) = (xi - mx, yi - my);
        (a + dx * dx, b + dy * dy, c + dx * dy)
    })
}

fn gamma_from_moments(sxx: f64, syy: f64, sxy: f64) -> Result<f64> {
    let r2 = (sxy * sxy / (sxx * syy)).min(1.0);
    let resid = 1.0 - r2;
    if resid <= DEGENERACY_TOL {
        return Err(Error::DegenerateConditional);
    }
    Ok(r2 / resid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GgmThreshold {
    /// `κ⁴/(16k²)`: half of the guaranteed `√γ` under the alternative, squared.
    Theory,
    /// `4 ln(4P/δ)/m` with `P` the number of pairs: the null's `√γ̂`
    /// deviation bound after a union bound.
    NullBound,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgmTestConfig {
    pub k: usize,
    pub kappa: f64,
    pub delta: f64,
    pub threshold: GgmThreshold,
}

impl GgmTestConfig {
    pub fn new(k: usize, kappa: f64, delta: f64) -> Self {
        GgmTestConfig {
            k,
            kappa,
            delta,
            threshold: GgmThreshold::Theory,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("row sparsity k must be positive"));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(invalid(format!("κ must lie in [0, 1], got {}", self.kappa)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    pub fn threshold_value(&self, n: usize, m: usize) -> f64 {
        match self.threshold {
            GgmThreshold::Theory => self.kappa.powi(4) / (16.0 * (self.k * self.k) as f64),
            GgmThreshold::NullBound => {
                let pairs = (n * n.saturating_sub(1) / 2).max(1) as f64;
                4.0 * (4.0 * pairs / self.delta).ln() / m as f64
            }
            GgmThreshold::Fixed(t) => t,
        }
    }

    /// `k² ln(n/δ)/κ⁴`, the sample size below which the test is underpowered.
    pub fn recommended_samples(&self, n: usize) -> f64 {
        (self.k * self.k) as f64 * (n as f64 / self.delta).ln() / self.kappa.powi(4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgmDecision {
    /// `true` declares a nonempty graph.
    pub nonempty: bool,
    pub pair: (usize, usize),
    pub gamma_hat: f64,
    pub threshold: f64,
    /// Some pair had (numerically) zero conditional variance.
    pub degenerate: bool,
}

/// Computes `γ̂` for every pair `i < j` and declares a nonempty graph iff the
/// maximum exceeds the threshold. `γ̂` is symmetric in its arguments, so
/// unordered pairs suffice; ties go to the lexicographically first pair.
pub fn ggm_empty_test(z: &SampleMatrix, cfg: &GgmTestConfig) -> Result<GgmDecision> {
    cfg.validate()?;
    let (m, n) = z.x.shape();
    if n < 2 {
        return Err(invalid("need at least two coordinates"));
    }
    if m < 4 {
        return Err(invalid(format!("need at least 4 samples, got {m}")));
    }
    if (m as f64) < cfg.recommended_samples(n) {
        log::warn!(
            "m = {m} is below the recommended k² ln(n/δ)/κ⁴ = {:.0}",
            cfg.recommended_samples(n)
        );
    }
    let means = DVector::from_iterator(n, z.x.column_iter().map(|c| c.mean()));
    let mut centered = z.x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let moments = centered.tr_mul(&centered);
    if let Some(j) = (0..n).find(|&j| !(moments[(j, j)] > 0.0)) {
        return Err(invalid(format!("coordinate {j} is constant")));
    }

    let threshold = cfg.threshold_value(n, m);
    let mut best = ((0, 1), f64::NEG_INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            match gamma_from_moments(moments[(i, i)], moments[(j, j)], moments[(i, j)]) {
                Ok(g) if g > best.1 => best = ((i, j), g),
                Ok(_) => {}
                Err(Error::DegenerateConditional) => {
                    return Ok(GgmDecision {
                        nonempty: true,
                        pair: (i, j),
                        gamma_hat: f64::INFINITY,
                        threshold,
                        degenerate: true,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(GgmDecision {
        nonempty: best.1 > threshold,
        pair: best.0,
        gamma_hat: best.1,
        threshold,
        degenerate: false,
    })
}

/// Symmetric positive-definite precision matrix `Θ = Σ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    theta: DMatrix<f64>,
}

impl PrecisionMatrix {
    pub fn new(theta: DMatrix<f64>) -> Result<Self> {
        if !theta.is_square() {
            return Err(Error::DimensionMismatch("precision matrix must be square".into()));
        }
        let scale = theta.amax().max(f64::MIN_POSITIVE);
        if (&theta - theta.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(invalid("precision matrix is not symmetric"));
        }
        let theta = (&theta + theta.transpose()) * 0.5;
        let min = linalg::symmetric_spectrum(&theta).values.min();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(PrecisionMatrix { theta })
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn covariance(&self) -> Result<Covariance> {
        let inv = self
            .theta
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?
            .inverse();
        Covariance::new((&inv + inv.transpose()) * 0.5)
    }

    /// `max_{a≠b} |Θ_ab| / √(Θ_aa Θ_bb)`.
    pub fn max_partial_correlation(&self) -> f64 {
        let n = self.dim();
        let t = &self.theta;
        let mut best = 0.0_f64;
        for a in 0..n {
            for b in (a + 1)..n {
                best = best.max(t[(a, b)].abs() / (t[(a, a)] * t[(b, b)]).sqrt());
            }
        }
        best
    }

    /// Largest number of nonzero entries in a row.
    pub fn row_sparsity(&self) -> usize {
        self.theta
            .row_iter()
            .map(|r| r.iter().filter(|v| **v != 0.0).count())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvLbWitness {
    pub pair: Option<(usize, usize)>,
    /// `|Σ_iℓ| / √(Σ_ii Σ_ℓℓ)` at the pair.
    pub correlation: f64,
    /// `(1/(2k)) max_{a≠b} Θ_ab² / (Θ_aa Θ_bb)`.
    pub bound: f64,
    pub certified: bool,
}

/// Searches for a pair whose covariance correlation is at least
/// `(1/(2k))·max Θ_ab²/(Θ_aa Θ_bb)`; such a pair exists whenever rows of
/// `Θ` have at most `k + 1` nonzeros.
pub fn verify_invlb(theta: &PrecisionMatrix, k: usize) -> Result<InvLbWitness> {
    if k == 0 {
        return Err(invalid("row sparsity k must be positive"));
    }
    if theta.row_sparsity() > k + 1 {
        return Err(invalid(format!(
            "rows have up to {} nonzeros, more than k + 1 = {}",
            theta.row_sparsity(),
            k + 1
        )));
    }
    let rho = theta.max_partial_correlation();
    let bound = rho * rho / (2.0 * k as f64);
    let sigma = theta.covariance()?;
    let s = sigma.matrix();
    let n = theta.dim();
    let mut best: (Option<(usize, usize)>, f64) = (None, 0.0);
    for i in 0..n {
        for l in (i + 1)..n {
            let c = s[(i, l)].abs() / (s[(i, i)] * s[(l, l)]).sqrt();
            if best.0.is_none() || c > best.1 {
                best = (Some((i, l)), c);
            }
        }
    }
    Ok(InvLbWitness {
        pair: best.0,
        correlation: best.1,
        bound,
        certified: best.1 >= bound * (1.0 - 1e-12),
    })
}

/// `Var(X_i | X_{∖{i,j}}) = Θ_jj / (Θ_ii Θ_jj − Θ_ij²)`.
pub fn conditional_variance_pair(theta: &PrecisionMatrix, i: usize, j: usize) -> Result<f64> {
    let n = theta.dim();
    if i >= n || j >= n || i == j {
        return Err(invalid(format!("need distinct indices below {n}, got ({i}, {j})")));
    }
    let t = theta.theta();
    Ok(t[(j, j)] / (t[(i, i)] * t[(j, j)] - t[(i, j)] * t[(i, j)]))
}

/// Tridiagonal precision matrix with unit diagonal and `−rho` off the
/// diagonal (a chain graph). Positive definite for `|rho| < 1/2`.
pub fn chain_precision(n: usize, rho: f64) -> Result<PrecisionMatrix> {
    let mut t = DMatrix::identity(n, n);
    for i in 1..n {
        t[(i, i - 1)] = -rho;
        t[(i - 1, i)] = -rho;
    }
    PrecisionMatrix::new(t)
}

/// Random positive-definite precision matrix whose rows have at most `k`
/// off-diagonal nonzeros. With `near_singular`, the diagonal is shifted to
/// leave a smallest eigenvalue of about `1e-3` relative to the largest
/// instead of enforcing diagonal dominance. Rows and columns are finally
/// scaled by random positive factors.
pub fn random_sparse_precision<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    near_singular: bool,
    rng: &mut R,
) -> Result<PrecisionMatrix> {
    if n == 0 || k == 0 {
        return Err(invalid("need n ≥ 1 and k ≥ 1"));
    }
    let mut t = DMatrix::zeros(n, n);
    let mut degree = vec![0usize; n];
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    let target_edges = rng.random_range(0..=n * k / 2);
    let mut edges = 0;
    for (i, j) in pairs {
        if edges >= target_edges {
            break;
        }
        if degree[i] < k && degree[j] < k {
            let mag = rng.random_range(0.2..1.0);
            let v = if rng.random::<bool>() { mag } else { -mag };
            t[(i, j)] = v;
            t[(j, i)] = v;
            degree[i] += 1;
            degree[j] += 1;
            edges += 1;
        }
    }
    if near_singular {
        let spec = linalg::symmetric_spectrum(&t);
        let (lo, hi) = (spec.values.min(), spec.values.max());
        let shift = -lo + 1e-3 * (hi - lo).max(1.0);
        for i in 0..n {
            t[(i, i)] = shift;
        }
    } else {
        for i in 0..n {
            let off: f64 = t.row(i).iter().map(|v| v.abs()).sum();
            t[(i, i)] = off + rng.random_range(0.05..1.0);
        }
    }
    let scale: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    PrecisionMatrix::new(linalg::congruence_diag(&t, &scale))
}
