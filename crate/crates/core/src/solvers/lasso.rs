use nalgebra::{DMatrix, DVector};

use super::soft_threshold;
use crate::error::{invalid, Error, Result};
use crate::models::{DiagonalScaling, SampleMatrix};

#[derive(Debug, Clone)]
pub struct LassoConfig {
    pub lambda: f64,
    /// Sweep budget; `None` means `max(10⁴, 50·n)`.
    pub max_iters: Option<usize>,
    /// Bound on the KKT residual at return.
    pub tol: f64,
    /// `D̂`; the penalty is `λ‖D̂^{1/2}w‖₁`. `None` is the plain Lasso.
    pub scaling: Option<DiagonalScaling>,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        LassoConfig {
            lambda,
            max_iters: None,
            tol: 1e-8,
            scaling: None,
        }
    }

    pub fn with_scaling(mut self, scaling: DiagonalScaling) -> Self {
        self.scaling = Some(scaling);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

/// `(1/m)‖𝕏w − y‖² + λ Σ_j s_j |w_j|`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, lambda: f64, weights: &[f64]) -> f64 {
    let m = x.nrows().max(1) as f64;
    let penalty: f64 = w.iter().zip(weights).map(|(w, s)| s * w.abs()).sum();
    (x * w - y).norm_squared() / m + lambda * penalty
}

/// Minimizes `(1/m)‖𝕏w − y‖² + λ‖D̂^{1/2}w‖₁` by cyclic coordinate descent
/// with exact soft-threshold updates, starting from zero.
pub fn weighted_lasso(data: &SampleMatrix, cfg: &LassoConfig) -> Result<LassoFit> {
    weighted_lasso_from(data, cfg, None)
}

/// [`weighted_lasso`] with an optional warm start.
///
/// Full sweeps alternate with sweeps restricted to the current active set;
/// convergence is declared only after a full sweep whose KKT residual is
/// within `tol`.
pub fn weighted_lasso_from(data: &SampleMatrix, cfg: &LassoConfig, init: Option<&DVector<f64>>) -> Result<LassoFit> {
    let y = data.response()?;
    let x = &data.x;
    let (m, n) = x.shape();
    if m == 0 {
        return Err(invalid("weighted lasso needs at least one sample"));
    }
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(invalid("lasso penalty must be finite and nonnegative"));
    }
    if !(cfg.tol > 0.0) {
        return Err(invalid("lasso tolerance must be positive"));
    }
    let weights: Vec<f64> = match &cfg.scaling {
        Some(s) if s.dim() != n => return Err(invalid("scaling dimension does not match the design")),
        Some(s) => s.sqrt().iter().copied().collect(),
        None => vec![1.0; n],
    };
    let mf = m as f64;
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / mf).collect();
    let thresholds: Vec<f64> = weights.iter().map(|s| 0.5 * cfg.lambda * s).collect();

    let mut w = match init {
        Some(w0) if w0.len() == n => w0.clone(),
        Some(_) => return Err(invalid("warm start has the wrong length")),
        None => DVector::zeros(n),
    };
    let mut resid = y - x * &w;
    let max_sweeps = cfg.max_iters.unwrap_or((50 * n).max(10_000));
    let objective = |r: &DVector<f64>, w: &DVector<f64>| {
        let pen: f64 = w.iter().zip(&weights).map(|(w, s)| s * w.abs()).sum();
        r.norm_squared() / mf + cfg.lambda * pen
    };
    let mut prev_obj = objective(&resid, &w);

    let mut sweeps = 0;
    let mut kkt = f64::INFINITY;
    let mut active: Vec<usize> = Vec::new();
    let mut full = true;
    while sweeps < max_sweeps {
        let coords: Vec<usize> = if full { (0..n).collect() } else { active.clone() };
        let mut max_delta = 0.0_f64;
        for j in coords {
            if col_sq[j] == 0.0 {
                w[j] = 0.0;
                continue;
            }
            let col = x.column(j);
            let old = w[j];
            let rho = col.dot(&resid) / mf + col_sq[j] * old;
            let new = soft_threshold(rho, thresholds[j]) / col_sq[j];
            let delta = new - old;
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                w[j] = new;
                max_delta = max_delta.max(delta.abs() * col_sq[j].sqrt());
            }
        }
        sweeps += 1;
        let obj = objective(&resid, &w);
        debug_assert!(
            obj <= prev_obj + 1e-12 * prev_obj.abs().max(1.0),
            "coordinate descent increased the objective: {prev_obj} -> {obj}"
        );
        prev_obj = obj;

        if full {
            kkt = kkt_residual(x, &resid, &w, cfg.lambda, &weights);
            if kkt <= cfg.tol {
                return Ok(LassoFit {
                    coef: w,
                    objective: obj,
                    kkt_residual: kkt,
                    sweeps,
                });
            }
            active = (0..n).filter(|&j| w[j] != 0.0).collect();
            full = active.is_empty();
        } else if max_delta <= 0.1 * cfg.tol {
            full = true;
        }
    }
    Err(Error::ConvergenceFailure {
        solver: "weighted lasso",
        iterations: sweeps,
        residual: kkt,
    })
}

/// Largest violation of the subgradient optimality conditions, with
/// `g = (2/m)𝕏ᵀ(𝕏w − y) = −(2/m)𝕏ᵀr`.
fn kkt_residual(x: &DMatrix<f64>, resid: &DVector<f64>, w: &DVector<f64>, lambda: f64, weights: &[f64]) -> f64 {
    let scale = -2.0 / x.nrows() as f64;
    x.column_iter()
        .enumerate()
        .map(|(j, col)| {
            let g = scale * col.dot(resid);
            let t = lambda * weights[j];
            if w[j] != 0.0 {
                (g + t * w[j].signum()).abs()
            } else {
                (g.abs() - t).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_problem(m: usize, n: usize, seed: u64) -> SampleMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = linalg::gaussian_matrix(m, n, &mut rng);
        let y = linalg::gaussian_matrix(m, 1, &mut rng).column(0).into_owned();
        SampleMatrix::new(x, Some(y)).unwrap()
    }

    #[test]
    fn large_penalty_gives_zero() {
        let data = random_problem(30, 8, 1);
        let d = DiagonalScaling::from_slice(&[0.5, 1.0, 2.0, 1.0, 0.3, 1.0, 1.0, 4.0]).unwrap();
        let xty = data.x.tr_mul(data.y.as_ref().unwrap());
        let lam_max = (0..8)
            .map(|j| 2.0 / 30.0 * xty[j].abs() / d.get(j).sqrt())
            .fold(0.0, f64::max);
        let fit = weighted_lasso(&data, &LassoConfig::new(lam_max).with_scaling(d)).unwrap();
        assert!(fit.coef.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_penalty_is_least_squares() {
        let data = random_problem(40, 6, 2);
        let fit = weighted_lasso(&data, &LassoConfig::new(0.0)).unwrap();
        let resid = data.y.as_ref().unwrap() - &data.x * &fit.coef;
        let normal = data.x.tr_mul(&resid) * (2.0 / 40.0);
        assert!(normal.amax() <= 1e-8);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let data = random_problem(25, 1, 3);
        let x = data.x.column(0);
        let y = data.y.as_ref().unwrap();
        for lambda in [0.0, 0.05, 0.3, 5.0] {
            let fit = weighted_lasso(&data, &LassoConfig::new(lambda)).unwrap();
            let expected = soft_threshold(x.dot(y) / 25.0, lambda / 2.0) / (x.norm_squared() / 25.0);
            assert!((fit.coef[0] - expected).abs() < 1e-12, "λ = {lambda}");
        }
    }

    #[test]
    fn reports_nonconvergence() {
        let data = random_problem(20, 10, 4);
        let err = weighted_lasso(&data, &LassoConfig::new(1e-3).with_max_iters(1)).unwrap_err();
        assert!(matches!(err, Error::ConvergenceFailure { iterations: 1, .. }));
    }

    #[test]
    fn requires_response() {
        let data = SampleMatrix::covariates(DMatrix::zeros(3, 2));
        assert!(weighted_lasso(&data, &LassoConfig::new(0.1)).is_err());
    }

    #[test]
    fn zero_columns_stay_zero() {
        let mut data = random_problem(20, 4, 5);
        data.x.column_mut(2).fill(0.0);
        let fit = weighted_lasso(&data, &LassoConfig::new(0.01)).unwrap();
        assert_eq!(fit.coef[2], 0.0);
    }
}
