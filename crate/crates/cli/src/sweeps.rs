//! LDLR schedule sweeps, kernel-certificate frequencies and GGM error rates.

use rayon::prelude::*;
use rllab_core::ggm::{chain_precision, ggm_empty_test, GgmTestConfig, GgmThreshold};
use rllab_core::ldlr::{hardness_schedule, ldlr_boundedness_sweep, log_spaced, SweepPolicy, SweepRow};
use rllab_core::linalg::gaussian_matrix;
use rllab_core::models::{sample_wishart_data, SampleMatrix, WishartModel};
use rllab_core::pca::sdp_kernel_certificate;
use rllab_core::Error;

use crate::cell_rng;
use crate::config::{GgmErrors, LdlrSweep, SdpFrequency, SweepPolicyKind, ThresholdKind};

pub fn run_ldlr_sweep(cfg: &LdlrSweep) -> Result<Vec<SweepRow>, Error> {
    let ns = log_spaced(cfg.n_range[0], cfg.n_range[1], cfg.per_decade);
    let schedule = hardness_schedule(&ns, cfg.eps, cfg.c, cfg.holdout_term)?;
    let policy = match cfg.policy {
        SweepPolicyKind::SkipViolations => SweepPolicy::SkipViolations,
        SweepPolicyKind::EvaluateAll => SweepPolicy::EvaluateAll,
    };
    ldlr_boundedness_sweep(&schedule, policy)
}

pub fn write_ldlr_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "k",
        "m",
        "beta",
        "degree",
        "defined",
        "lower",
        "upper",
        "degree_below_samples",
        "norm_squared",
    ])?;
    for r in rows {
        let (p, h) = (&r.params, &r.hypotheses);
        w.write_record([
            p.n.to_string(),
            p.k.to_string(),
            p.m.to_string(),
            p.beta.to_string(),
            p.degree.to_string(),
            h.defined.to_string(),
            h.lower.to_string(),
            h.upper.to_string(),
            h.degree_below_samples.to_string(),
            r.norm_squared.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `⌊k² / (600 ln(n/δ))⌋`.
pub fn sdp_default_samples(n: usize, k: usize, delta: f64) -> usize {
    ((k * k) as f64 / (600.0 * (n as f64 / delta).ln())).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpRow {
    pub seed: u64,
    pub m: usize,
    pub rank: usize,
    pub l1_mass: f64,
    pub objective: f64,
    pub feasible: bool,
}

pub fn run_sdp_frequency(cfg: &SdpFrequency, seeds: u64, base_seed: u64) -> Result<Vec<SdpRow>, Error> {
    let m = cfg.m.unwrap_or_else(|| sdp_default_samples(cfg.n, cfg.k, cfg.delta));
    (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let mut rng = cell_rng(base_seed, seed, m as u64);
            let z = sample_wishart_data(&WishartModel::Null { n: cfg.n, m }, &mut rng)?.data;
            let c = sdp_kernel_certificate(&z, cfg.k)?;
            Ok(SdpRow {
                seed,
                m,
                rank: c.rank,
                l1_mass: c.l1_mass,
                objective: c.objective,
                feasible: c.feasible,
            })
        })
        .collect()
}

pub fn write_sdp_csv<W: std::io::Write>(rows: &[SdpRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "m", "rank", "l1_mass", "objective", "feasible"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.m.to_string(),
            r.rank.to_string(),
            r.l1_mass.to_string(),
            r.objective.to_string(),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgmRow {
    pub seed: u64,
    /// `true` for the chain-graph alternative.
    pub alternative: bool,
    pub nonempty: bool,
    pub pair: (usize, usize),
    pub gamma_hat: f64,
    pub threshold: f64,
}

impl GgmRow {
    pub fn is_error(&self) -> bool {
        self.nonempty != self.alternative
    }
}

pub fn ggm_test_config(cfg: &GgmErrors) -> GgmTestConfig {
    GgmTestConfig {
        threshold: match cfg.threshold {
            ThresholdKind::Theory => GgmThreshold::Theory,
            ThresholdKind::NullBound => GgmThreshold::NullBound,
            ThresholdKind::Fixed(t) => GgmThreshold::Fixed(t),
        },
        ..GgmTestConfig::new(cfg.k, cfg.rho, cfg.delta)
    }
}

/// Each seed draws `m` samples from `N(0, I)` and from the chain graph with
/// precision `I − rho·(adjacency)`, and runs the test on both.
pub fn run_ggm_errors(cfg: &GgmErrors, seeds: u64, base_seed: u64) -> Result<Vec<GgmRow>, Error> {
    let root = chain_precision(cfg.n, cfg.rho)?.covariance()?.sqrt();
    let test = ggm_test_config(cfg);
    let rows = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let mut rng = cell_rng(base_seed, seed, cfg.m as u64);
            let null = gaussian_matrix(cfg.m, cfg.n, &mut rng);
            let alt = gaussian_matrix(cfg.m, cfg.n, &mut rng) * &root;
            let mut out = Vec::with_capacity(2);
            for (alternative, x) in [(false, null), (true, alt)] {
                let d = ggm_empty_test(&SampleMatrix::covariates(x), &test)?;
                out.push(GgmRow {
                    seed,
                    alternative,
                    nonempty: d.nonempty,
                    pair: d.pair,
                    gamma_hat: d.gamma_hat,
                    threshold: d.threshold,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// `(type I rate, type II rate)`.
pub fn ggm_error_rates(rows: &[GgmRow]) -> (f64, f64) {
    let rate = |alt: bool| {
        let group: Vec<&GgmRow> = rows.iter().filter(|r| r.alternative == alt).collect();
        if group.is_empty() {
            return 0.0;
        }
        group.iter().filter(|r| r.is_error()).count() as f64 / group.len() as f64
    };
    (rate(false), rate(true))
}

pub fn write_ggm_csv<W: std::io::Write>(rows: &[GgmRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "hypothesis", "decision", "i", "j", "gamma_hat", "threshold"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            if r.alternative { "chain" } else { "empty" }.to_string(),
            if r.nonempty { "nonempty" } else { "empty" }.to_string(),
            r.pair.0.to_string(),
            r.pair.1.to_string(),
            r.gamma_hat.to_string(),
            r.threshold.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
