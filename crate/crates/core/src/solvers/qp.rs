use nalgebra::{DMatrix, DVector};

use super::project_l1_ball;
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::models::{DiagonalScaling, SampleMatrix};

/// Backtracking parameters for the accelerated projected gradient method.
#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    /// Starting Lipschitz estimate for `∇(uᵀGu)`; `None` runs power iteration.
    pub initial_lipschitz: Option<f64>,
    /// Multiplier applied to the estimate whenever the descent test fails.
    pub growth: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            initial_lipschitz: None,
            growth: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpL1Config {
    /// ℓ₁ budget `B` on `D̂^{1/2}v`, pinned coordinate included.
    pub budget: f64,
    pub pinned: usize,
    pub max_iters: usize,
    /// Stop once the norm of the gradient mapping or the duality gap is
    /// below this, relative to `max(1, max_i G_ii)`.
    pub tol: f64,
    pub step: StepPolicy,
    /// Stop as soon as the minimum is known to lie on one side of this
    /// value: the current objective is at most it, or the objective minus
    /// the duality gap exceeds it. The returned value is then only accurate
    /// enough to decide the comparison.
    pub decide: Option<f64>,
}

impl QpL1Config {
    pub fn new(budget: f64, pinned: usize) -> Self {
        QpL1Config {
            budget,
            pinned,
            max_iters: 10_000,
            tol: 1e-8,
            step: StepPolicy::default(),
            decide: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Minimizer in the original coordinates, `v = D̂^{-1/2}u`.
    pub v: DVector<f64>,
    /// Minimizer in the rescaled coordinates, `u_i = 1`, `‖u‖₁ ≤ B`.
    pub u: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Solves `min (1/m)‖𝕏v‖²` over `(D̂^{1/2}v)_i = 1`, `‖D̂^{1/2}v‖₁ ≤ B`.
pub fn min_quadratic_l1ball(x: &SampleMatrix, d_hat: &DiagonalScaling, cfg: &QpL1Config) -> Result<QpSolution> {
    let n = x.n();
    if d_hat.dim() != n {
        return Err(invalid("scaling dimension does not match the design"));
    }
    let inv_root = d_hat.inv_sqrt();
    let gram = linalg::congruence_diag(&x.empirical_covariance(), inv_root.as_slice());
    let sol = min_quadratic_form_l1ball(&gram, cfg, None)?;
    let v = sol.u.component_mul(&inv_root);
    let m = x.m().max(1) as f64;
    let value = (&x.x * &v).norm_squared() / m;
    Ok(QpSolution { v, value, ..sol })
}

/// Solves `min uᵀGu` over `u_i = 1`, `‖u‖₁ ≤ B` for a PSD matrix `G`.
///
/// FISTA on the free coordinates with gradient-based momentum restart and
/// backtracking on the Lipschitz estimate. Only one product with `G` is
/// needed per iteration, and it skips the zero entries of the (typically
/// sparse) iterate. Here `v` in the returned solution equals `u`.
pub fn min_quadratic_form_l1ball(gram: &DMatrix<f64>, cfg: &QpL1Config, warm: Option<&DVector<f64>>) -> Result<QpSolution> {
    let n = gram.nrows();
    let pin = cfg.pinned;
    if pin >= n {
        return Err(invalid(format!("pinned index {pin} out of range for n = {n}")));
    }
    if !(cfg.budget >= 1.0) {
        return Err(invalid(format!("ℓ₁ budget must be at least 1, got {}", cfg.budget)));
    }
    if !(cfg.tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let radius = cfg.budget - 1.0;

    let project = |u: &mut DVector<f64>| {
        let mut free: Vec<f64> = u.iter().copied().collect();
        free.remove(pin);
        let p = project_l1_ball(&free, radius);
        let mut it = p.into_iter();
        for (j, slot) in u.iter_mut().enumerate() {
            *slot = if j == pin { 1.0 } else { it.next().unwrap_or(0.0) };
        }
    };

    let mut u = match warm {
        Some(w) if w.len() == n => w.clone(),
        Some(_) => return Err(invalid("warm start has the wrong length")),
        None => DVector::zeros(n),
    };
    project(&mut u);
    if radius == 0.0 {
        let value = gram[(pin, pin)];
        return Ok(QpSolution { v: u.clone(), u, value, iterations: 0 });
    }

    let mut lip = match cfg.step.initial_lipschitz {
        Some(l) if l > 0.0 => l,
        _ => 2.0 * power_iteration(gram, 30) * 1.01,
    }
    .max(f64::MIN_POSITIVE);
    let growth = cfg.step.growth.max(1.0 + 1e-3);
    // gradients scale with G, so the tolerance does too
    let tol = cfg.tol * gram.diagonal().max().max(1.0);

    let mut gu = sparse_matvec(gram, &u);
    let decided = |u: &DVector<f64>, gu: &DVector<f64>| match cfg.decide {
        Some(t) => {
            let value = u.dot(gu);
            value <= t || value - duality_gap(u, gu, pin, radius) > t
        }
        None => false,
    };
    if decided(&u, &gu) {
        let value = u.dot(&gu);
        return Ok(QpSolution { v: u.clone(), u, value, iterations: 0 });
    }
    let mut y = u.clone();
    let mut gy = gu.clone();
    let mut t = 1.0_f64;
    let mut best_pg = f64::INFINITY;

    for iter in 1..=cfg.max_iters {
        // gradient step from y, with backtracking on the quadratic upper bound
        let (u_next, gu_next) = loop {
            let mut cand = &y - &gy * (2.0 / lip);
            project(&mut cand);
            let g_cand = sparse_matvec(gram, &cand);
            let delta = &cand - &y;
            let curvature = delta.dot(&(&g_cand - &gy));
            if curvature <= 0.5 * lip * delta.norm_squared() * (1.0 + 1e-12) + 1e-300 {
                break (cand, g_cand);
            }
            lip *= growth;
        };

        let step = &u_next - &u;
        let restart = (&y - &u_next).dot(&step) > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if restart { 0.0 } else { (t - 1.0) / t_next };
        y = &u_next + &step * beta;
        gy = &gu_next + (&gu_next - &gu) * beta;
        u = u_next;
        gu = gu_next;
        t = t_next;

        if decided(&u, &gu) {
            let value = u.dot(&gu);
            return Ok(QpSolution { v: u.clone(), u, value, iterations: iter });
        }
        if iter % 5 == 0 || iter == cfg.max_iters {
            let pg = gradient_mapping_norm(&u, &gu, lip, &project);
            best_pg = best_pg.min(pg);
            if pg <= tol || duality_gap(&u, &gu, pin, radius) <= tol {
                let value = u.dot(&gu);
                return Ok(QpSolution { v: u.clone(), u, value, iterations: iter });
            }
        }
    }
    Err(Error::ConvergenceFailure {
        solver: "ℓ₁-ball quadratic program",
        iterations: cfg.max_iters,
        residual: best_pg,
    })
}

/// Frank-Wolfe gap `⟨∇f(u), u − s⟩` with `s` the linear minimizer over the
/// feasible set; bounds `f(u) − f*` from above.
fn duality_gap(u: &DVector<f64>, gu: &DVector<f64>, pin: usize, radius: f64) -> f64 {
    let top = gu
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != pin)
        .fold(0.0_f64, |acc, (_, g)| acc.max(g.abs()));
    2.0 * (u.dot(gu) - gu[pin] + radius * top)
}

/// `L‖u − P(u − ∇f(u)/L)‖` with `∇f(u) = 2Gu`.
fn gradient_mapping_norm(u: &DVector<f64>, gu: &DVector<f64>, lip: f64, project: &impl Fn(&mut DVector<f64>)) -> f64 {
    let mut p = u - gu * (2.0 / lip);
    project(&mut p);
    (u - p).norm() * lip
}

fn sparse_matvec(gram: &DMatrix<f64>, u: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(gram.nrows());
    for (j, &uj) in u.iter().enumerate() {
        if uj != 0.0 {
            out.axpy(uj, &gram.column(j), 1.0);
        }
    }
    out
}

/// Largest eigenvalue estimate of a PSD matrix.
pub(crate) fn power_iteration(gram: &DMatrix<f64>, iters: usize) -> f64 {
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..iters {
        let w = gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm;
        v = w / norm;
    }
    // The iteration underestimates; the diagonal maximum is also a lower bound.
    est.max(gram.diagonal().max())
}
