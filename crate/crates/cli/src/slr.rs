use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rllab_core::models::{make_spiked_covariance, sample_slr, DiagonalScaling, SampleMatrix, SlrInstance, SparseSpike};
use rllab_core::rescale::{smart_scaling, SmartScalingConfig};
use rllab_core::solvers::{weighted_lasso_from, LassoConfig};
use rllab_core::Error;

use crate::config::SlrComparison;
use crate::{cell_rng, median};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    RescaledLasso,
    StandardizedLasso,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::RescaledLasso => "rescaled_lasso",
            Method::StandardizedLasso => "standardized_lasso",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlrRow {
    pub m: usize,
    pub method: Method,
    pub seed: u64,
    /// `(ŵ − w*)ᵀΣ(ŵ − w*)`; infinite when the method failed.
    pub prediction_error: f64,
    pub lambda: Option<f64>,
    pub status: String,
}

/// The planted instance of one cell: an all-positive spike on a random
/// support, `Σ = I + βwwᵀ` and `w* = 1_S/√((1+β)k)`, so `Var(Y) = 1` when
/// `σ = 0`.
pub fn spiked_regression_instance(cfg: &SlrComparison, rng: &mut ChaCha8Rng) -> Result<SlrInstance, Error> {
    let mut support = index::sample(rng, cfg.n, cfg.k).into_vec();
    support.sort_unstable();
    let spike = SparseSpike::new(cfg.n, support.clone(), vec![1; cfg.k])?;
    let covariance = make_spiked_covariance(&spike, cfg.beta)?;
    let scale = 1.0 / ((1.0 + cfg.beta) * cfg.k as f64).sqrt();
    let mut w_star = DVector::zeros(cfg.n);
    for j in support {
        w_star[j] = scale;
    }
    SlrInstance::new(covariance, w_star, cfg.sigma, cfg.k)
}

/// Descending `λ` grid spanning `range·√(ln n / m)` geometrically.
pub fn lambda_grid(cfg: &SlrComparison, n: usize, m: usize) -> Vec<f64> {
    let unit = ((n.max(2) as f64).ln() / m as f64).sqrt();
    let (lo, hi) = (cfg.lambda_range[0] * unit, cfg.lambda_range[1] * unit);
    let count = cfg.lambda_count;
    (0..count)
        .map(|j| {
            if count == 1 {
                hi
            } else {
                hi * (lo / hi).powf(j as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TunedFit {
    pub coef: DVector<f64>,
    pub lambda: f64,
    pub validation_mse: f64,
}

/// Fits the penalized path on `train` (warm-started from large to small
/// `λ`) and keeps the fit with the smallest validation error. Only the
/// validation split is consulted; ties keep the larger `λ`.
pub fn tune_lambda(
    train: &SampleMatrix,
    validation: &SampleMatrix,
    scaling: &DiagonalScaling,
    lambdas: &[f64],
    tol: f64,
) -> Result<TunedFit, Error> {
    let yv = validation.response()?;
    let mut warm: Option<DVector<f64>> = None;
    let mut best: Option<TunedFit> = None;
    let mut last_err = None;
    for &lambda in lambdas {
        let cfg = LassoConfig::new(lambda).with_tol(tol).with_scaling(scaling.clone());
        match weighted_lasso_from(train, &cfg, warm.as_ref()) {
            Ok(fit) => {
                let mse = (yv - &validation.x * &fit.coef).norm_squared() / validation.m().max(1) as f64;
                if best.as_ref().is_none_or(|b| mse < b.validation_mse) {
                    best = Some(TunedFit {
                        coef: fit.coef.clone(),
                        lambda,
                        validation_mse: mse,
                    });
                }
                warm = Some(fit.coef);
            }
            Err(e) => {
                log::debug!("λ = {lambda}: {e}");
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::InvalidParameter("empty λ grid".into())))
}

pub fn scaling_config(cfg: &SlrComparison) -> SmartScalingConfig {
    SmartScalingConfig {
        div: cfg.div,
        budget: Some(cfg.budget_factor * cfg.k as f64),
        iteration_cap: Some(cfg.iteration_cap),
        batch: cfg.batch,
        qp_tol: cfg.qp_tol,
        ..SmartScalingConfig::new(cfg.k)
    }
}

/// Both methods on one `(m, seed)` cell.
pub fn slr_cell(cfg: &SlrComparison, base_seed: u64, m: usize, seed: u64) -> Result<Vec<SlrRow>, Error> {
    let mut rng = cell_rng(base_seed, seed, m as u64);
    let instance = spiked_regression_instance(cfg, &mut rng)?;
    let train = sample_slr(&instance, m, &mut rng)?;
    let m_val = (cfg.validation_fraction * m as f64).ceil() as usize;
    let validation = sample_slr(&instance, m_val.max(1), &mut rng)?;
    let lambdas = lambda_grid(cfg, cfg.n, m);

    let row = |method, outcome: Result<TunedFit, Error>| match outcome {
        Ok(fit) => SlrRow {
            m,
            method,
            seed,
            prediction_error: instance.prediction_error(&fit.coef),
            lambda: Some(fit.lambda),
            status: "ok".into(),
        },
        Err(e) => SlrRow {
            m,
            method,
            seed,
            prediction_error: f64::INFINITY,
            lambda: None,
            status: failure_status(&e).into(),
        },
    };

    let standardized = DiagonalScaling::diagonal_of(&train.empirical_covariance())
        .and_then(|d| tune_lambda(&train, &validation, &d, &lambdas, cfg.lasso_tol));
    let rescaled = smart_scaling(&SampleMatrix::covariates(train.x.clone()), &scaling_config(cfg))
        .and_then(|out| tune_lambda(&train, &validation, &out.scaling, &lambdas, cfg.lasso_tol));
    Ok(vec![
        row(Method::RescaledLasso, rescaled),
        row(Method::StandardizedLasso, standardized),
    ])
}

fn failure_status(e: &Error) -> &'static str {
    match e {
        Error::IterationLimitExceeded { .. } => "iteration_limit",
        Error::ConvergenceFailure { .. } => "no_convergence",
        _ => "error",
    }
}

/// Every `(m, seed)` cell, rows sorted by `(m, method, seed)`.
pub fn run_slr_comparison(cfg: &SlrComparison, seeds: u64, base_seed: u64) -> Result<Vec<SlrRow>, Error> {
    let cells: Vec<(usize, u64)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| (0..seeds).map(move |s| (m, s)))
        .collect();
    let rows: Vec<Vec<SlrRow>> = cells
        .par_iter()
        .map(|&(m, seed)| {
            let rows = slr_cell(cfg, base_seed, m, seed)?;
            log::info!(
                "m = {m}, seed = {seed}: {}",
                rows.iter()
                    .map(|r| format!("{} {:.4} ({})", r.method, r.prediction_error, r.status))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(rows)
        })
        .collect::<Result<_, Error>>()?;
    let mut rows: Vec<SlrRow> = rows.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.m, r.method, r.seed));
    Ok(rows)
}

/// Median prediction error per `(m, method)`; failures count as infinite.
pub fn median_errors(rows: &[SlrRow]) -> BTreeMap<(usize, Method), f64> {
    let mut groups: BTreeMap<(usize, Method), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.m, r.method)).or_default().push(r.prediction_error);
    }
    groups.into_iter().map(|(key, v)| (key, median(&v))).collect()
}

pub fn write_slr_csv<W: std::io::Write>(rows: &[SlrRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "method", "seed", "prediction_error", "lambda", "status"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.method.to_string(),
            r.seed.to_string(),
            r.prediction_error.to_string(),
            r.lambda.map(|l| l.to_string()).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
