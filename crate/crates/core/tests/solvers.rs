mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rllab_core::linalg::gaussian_matrix;
use rllab_core::models::{DiagonalScaling, SampleMatrix};
use rllab_core::solvers::{
    min_quadratic_form_l1ball, min_quadratic_l1ball, project_l1_ball, weighted_lasso, LassoConfig, QpL1Config,
};

proptest! {
    #[test]
    fn l1_projection_matches_face_enumeration(
        v in prop::collection::vec(-5.0f64..5.0, 1..=8),
        r in 0.0f64..6.0,
    ) {
        let got = project_l1_ball(&v, r);
        let want = common::brute_force_l1_projection(&v, r);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9, "{got:?} vs {want:?}");
        }
        prop_assert!(got.iter().map(|x| x.abs()).sum::<f64>() <= r + 1e-9);
    }

    #[test]
    fn l1_projection_is_idempotent(v in prop::collection::vec(-3.0f64..3.0, 1..=20), r in 0.1f64..4.0) {
        let once = project_l1_ball(&v, r);
        let twice = project_l1_ball(&once, r);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

fn random_lasso_problem(seed: u64) -> (SampleMatrix, f64, DiagonalScaling) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(10..60);
    let n = rng.random_range(2..40);
    let mut x = gaussian_matrix(m, n, &mut rng);
    // uneven column scales
    for mut col in x.column_iter_mut() {
        col *= 10f64.powf(rng.random_range(-1.0..1.0));
    }
    let w: DVector<f64> = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.2 { rng.random_range(-2.0..2.0) } else { 0.0 });
    let y = &x * &w + DVector::from_fn(m, |_, _| 0.3 * rng.random_range(-1.0..1.0));
    let d = DiagonalScaling::new(DVector::from_fn(n, |_, _| rng.random_range(0.1..3.0))).unwrap();
    let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
    (SampleMatrix::new(x, Some(y)).unwrap(), lambda, d)
}

#[test]
fn weighted_lasso_meets_kkt_on_random_instances() {
    for seed in 0..50 {
        let (data, lambda, d) = random_lasso_problem(seed);
        let fit = weighted_lasso(&data, &LassoConfig::new(lambda).with_scaling(d.clone())).unwrap();
        let s: Vec<f64> = d.sqrt().iter().copied().collect();
        let y = data.y.as_ref().unwrap();
        let kkt = common::lasso_kkt(&data.x, y, &fit.coef, lambda, &s);
        assert!(kkt <= 1e-8, "seed {seed}: KKT residual {kkt:e}");
    }
}

#[test]
fn weighted_lasso_objective_matches_proximal_gradient() {
    for seed in 100..120 {
        let (data, lambda, d) = random_lasso_problem(seed);
        let s: Vec<f64> = d.sqrt().iter().copied().collect();
        let y = data.y.as_ref().unwrap();
        let fit = weighted_lasso(&data, &LassoConfig::new(lambda).with_scaling(d)).unwrap();
        let reference = common::fista_lasso(&data.x, y, lambda, &s, 20_000);
        let ours = common::lasso_value(&data.x, y, &fit.coef, lambda, &s);
        let theirs = common::lasso_value(&data.x, y, &reference, lambda, &s);
        // the reference is only approximately optimal
        assert!(ours <= theirs + 1e-9 * theirs.max(1.0), "seed {seed}: {ours} > {theirs}");
        assert!(theirs - ours <= 1e-5 * theirs.max(1.0), "seed {seed}: {ours} vs {theirs}");
    }
}

#[test]
fn pinned_qp_is_feasible_and_value_consistent() {
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let m = rng.random_range(3..40);
        let n = rng.random_range(2..25);
        let x = SampleMatrix::covariates(gaussian_matrix(m, n, &mut rng));
        let d = DiagonalScaling::new(DVector::from_fn(n, |_, _| rng.random_range(0.2..2.0))).unwrap();
        let budget = rng.random_range(1.0..(n as f64 + 1.0));
        let pin = rng.random_range(0..n);
        let sol = min_quadratic_l1ball(&x, &d, &QpL1Config::new(budget, pin)).unwrap();

        let u = sol.v.component_mul(&d.sqrt());
        assert!((u[pin] - 1.0).abs() < 1e-12, "seed {seed}: pinned entry {}", u[pin]);
        assert!(u.abs().sum() <= budget * (1.0 + 1e-9), "seed {seed}: ℓ₁ {}", u.abs().sum());
        assert!((&u - &sol.u).amax() < 1e-10);
        let direct = (&x.x * &sol.v).norm_squared() / m as f64;
        assert!((sol.value - direct).abs() <= 1e-12 * direct.max(1.0), "seed {seed}");
        // e_pin is feasible, so the minimum cannot exceed its value
        let e_value = x.empirical_covariance()[(pin, pin)] / d.get(pin);
        assert!(sol.value <= e_value * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn pinned_qp_value_matches_reference_projected_gradient() {
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let n = rng.random_range(2..12);
        let b = gaussian_matrix(n + 2, n, &mut rng);
        let g: DMatrix<f64> = b.transpose() * &b / (n + 2) as f64;
        let budget = rng.random_range(1.0..4.0);
        let pin = rng.random_range(0..n);
        let cfg = QpL1Config {
            tol: 1e-11,
            ..QpL1Config::new(budget, pin)
        };
        let ours = min_quadratic_form_l1ball(&g, &cfg, None).unwrap().value;
        let reference = common::reference_pinned_qp(&g, pin, budget, 50_000);
        assert!((ours - reference).abs() <= 1e-7 * reference.max(1.0), "seed {seed}: {ours} vs {reference}");
    }
}
