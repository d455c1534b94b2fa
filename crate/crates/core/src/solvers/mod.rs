//! Convex kernels: the weighted Lasso and the pinned ℓ₁-ball quadratic
//! program solved inside smart scaling.

mod l1ball;
mod lasso;
mod qp;

pub use l1ball::project_l1_ball;
pub use lasso::{lasso_objective, weighted_lasso, weighted_lasso_from, LassoConfig, LassoFit};
pub(crate) use qp::power_iteration;
pub use qp::{
    min_quadratic_form_l1ball, min_quadratic_l1ball, QpL1Config, QpSolution, StepPolicy,
};

/// Soft-thresholding; ties at the boundary resolve to zero.
pub(crate) fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
