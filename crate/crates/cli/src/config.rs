//! TOML experiment configuration.
//!
//! ```toml
//! seeds = 10
//! base_seed = 7
//! output = "slr.csv"
//! plot = "slr.svg"          # optional
//!
//! [experiment]
//! kind = "slr_comparison"    # or pca_detection, ldlr_sweep, sdp_frequency, ggm_errors
//! n = 300
//! # remaining keys depend on the kind; omitted keys take the defaults below
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub plot: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    SlrComparison(SlrComparison),
    PcaDetection(PcaDetection),
    LdlrSweep(LdlrSweep),
    SdpFrequency(SdpFrequency),
    GgmErrors(GgmErrors),
}

/// Standardized Lasso against the rescaled Lasso on negatively spiked
/// covariates with response `⟨1_S, X⟩/√((1+β)k)`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SlrComparison {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub sigma: f64,
    pub m_grid: Vec<usize>,
    /// Validation samples drawn in addition to the `m` training samples,
    /// as a fraction of `m` (rounded up).
    pub validation_fraction: f64,
    pub lambda_count: usize,
    /// Grid endpoints, multiplied by `√(ln n / m)`.
    pub lambda_range: [f64; 2],
    pub div: f64,
    /// `B = budget_factor · k`.
    pub budget_factor: f64,
    pub batch: bool,
    pub iteration_cap: usize,
    pub qp_tol: f64,
    pub lasso_tol: f64,
}

impl Default for SlrComparison {
    fn default() -> Self {
        SlrComparison {
            n: 300,
            k: 5,
            beta: -0.99,
            sigma: 0.0,
            m_grid: vec![50, 75, 100, 150, 200, 300],
            validation_fraction: 0.5,
            lambda_count: 30,
            lambda_range: [1e-4, 1e1],
            div: 1.1,
            budget_factor: 2.0,
            batch: true,
            iteration_cap: 120,
            qp_tol: 1e-6,
            lasso_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Oracle,
    RescaledLasso,
    StandardizedLasso,
}

/// Paired planted/null detection runs with the holdout-residual reduction.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PcaDetection {
    pub n: usize,
    pub k: usize,
    /// `None` means `−1 + 1/(2k)`.
    pub beta: Option<f64>,
    pub m_grid: Vec<usize>,
    pub holdout: Option<usize>,
    pub backend: BackendKind,
    /// Fixed `η` threshold; ignored when `null_delta` is set.
    pub eta_threshold: f64,
    /// Calibrate the threshold to the null at this level instead.
    pub null_delta: Option<f64>,
    pub lambda: Option<f64>,
    pub shared_scaling: bool,
    pub div: f64,
    pub budget_factor: f64,
    pub batch: bool,
}

impl Default for PcaDetection {
    fn default() -> Self {
        PcaDetection {
            n: 200,
            k: 5,
            beta: None,
            m_grid: vec![530],
            holdout: None,
            backend: BackendKind::Oracle,
            eta_threshold: 0.9,
            null_delta: None,
            lambda: None,
            shared_scaling: true,
            div: 2.0,
            budget_factor: 16.0,
            batch: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepPolicyKind {
    #[default]
    SkipViolations,
    EvaluateAll,
}

/// Low-degree norms along the hardness schedule.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LdlrSweep {
    pub n_range: [u64; 2],
    pub per_decade: usize,
    pub eps: f64,
    pub c: f64,
    pub holdout_term: bool,
    pub policy: SweepPolicyKind,
}

impl Default for LdlrSweep {
    fn default() -> Self {
        LdlrSweep {
            n_range: [1_000, 1_000_000],
            per_decade: 4,
            eps: 2.0,
            c: 1.0,
            holdout_term: false,
            policy: SweepPolicyKind::SkipViolations,
        }
    }
}

/// Frequency with which the kernel certificate is feasible on null data.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SdpFrequency {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    /// `None` means `⌊k² / (600 ln(n/δ))⌋`.
    pub m: Option<usize>,
}

impl Default for SdpFrequency {
    fn default() -> Self {
        SdpFrequency {
            n: 200,
            k: 40,
            delta: 0.05,
            m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Theory,
    NullBound,
    Fixed(f64),
}

/// Type I and II errors of the empty-graph test against a chain graph.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GgmErrors {
    pub n: usize,
    pub k: usize,
    /// Off-diagonal magnitude of the tridiagonal precision matrix.
    pub rho: f64,
    pub m: usize,
    pub delta: f64,
    pub threshold: ThresholdKind,
}

impl Default for GgmErrors {
    fn default() -> Self {
        GgmErrors {
            n: 50,
            k: 2,
            rho: 0.4,
            m: 5000,
            delta: 0.05,
            threshold: ThresholdKind::NullBound,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        // relative output paths are taken relative to the config file
        if let Some(dir) = path.parent() {
            if cfg.output.is_relative() {
                cfg.output = dir.join(&cfg.output);
            }
            if let Some(p) = cfg.plot.as_mut().filter(|p| p.is_relative()) {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        if self.seeds == 0 {
            return bad("seeds must be at least 1");
        }
        match &self.experiment {
            Experiment::SlrComparison(c) => {
                if c.m_grid.is_empty() || c.m_grid.contains(&0) {
                    return bad("m_grid must be non-empty with positive entries");
                }
                if !(c.validation_fraction > 0.0 && c.validation_fraction < 1.0) {
                    return bad("validation_fraction must lie in (0, 1)");
                }
                if c.lambda_count == 0 || !(c.lambda_range[0] > 0.0 && c.lambda_range[0] <= c.lambda_range[1]) {
                    return bad("lambda grid must be non-empty with 0 < lo ≤ hi");
                }
                if c.k == 0 || c.k > c.n {
                    return bad("need 1 ≤ k ≤ n");
                }
            }
            Experiment::PcaDetection(c) => {
                if c.m_grid.is_empty() {
                    return bad("m_grid must be non-empty");
                }
                if c.k == 0 || c.k > c.n {
                    return bad("need 1 ≤ k ≤ n");
                }
            }
            Experiment::LdlrSweep(c) => {
                if c.n_range[0] < 3 || c.n_range[0] > c.n_range[1] || c.per_decade == 0 {
                    return bad("n_range must satisfy 3 ≤ lo ≤ hi, per_decade ≥ 1");
                }
            }
            Experiment::SdpFrequency(c) => {
                if !(c.delta > 0.0 && c.delta < 1.0) {
                    return bad("delta must lie in (0, 1)");
                }
            }
            Experiment::GgmErrors(c) => {
                if c.n < 2 || c.m < 4 {
                    return bad("need n ≥ 2 and m ≥ 4");
                }
            }
        }
        Ok(())
    }
}
