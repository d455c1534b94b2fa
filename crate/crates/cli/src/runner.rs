use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::config::{Experiment, ExperimentConfig};
use crate::plot::{plot_csv, PlotSpec};
use crate::{detection, slr, sweeps, CliError};

/// Runs the configured experiment, writes its CSV (and SVG when requested)
/// and returns a short human-readable summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let out = BufWriter::new(create(&cfg.output)?);
    let mut summary = String::new();
    let plot_spec = match &cfg.experiment {
        Experiment::SlrComparison(c) => {
            let rows = slr::run_slr_comparison(c, cfg.seeds, cfg.base_seed)?;
            slr::write_slr_csv(&rows, out)?;
            for ((m, method), med) in slr::median_errors(&rows) {
                let _ = writeln!(summary, "m = {m:>5}  {method:<20} median error {med:.4e}");
            }
            Some(PlotSpec {
                x: "m".into(),
                y: "prediction_error".into(),
                group: Some("method".into()),
                log_y: true,
                ..PlotSpec::default()
            })
        }
        Experiment::PcaDetection(c) => {
            let rows = detection::run_detection_sweep(c, cfg.seeds, cfg.base_seed)?;
            detection::write_detection_csv(&rows, out)?;
            for (m, adv) in detection::advantage(&rows) {
                let _ = writeln!(summary, "m = {m:>5}  advantage {adv:.3}");
            }
            Some(PlotSpec {
                x: "m".into(),
                y: "min_eta".into(),
                group: Some("hypothesis".into()),
                ..PlotSpec::default()
            })
        }
        Experiment::LdlrSweep(c) => {
            let rows = sweeps::run_ldlr_sweep(c)?;
            sweeps::write_ldlr_csv(&rows, out)?;
            for r in &rows {
                let norm = r.norm_squared.map_or("skipped".to_string(), |v| format!("{v:.6}"));
                let _ = writeln!(
                    summary,
                    "n = {:>8}  k = {:>8}  m = {:>10}  D = {:>3}  hypotheses {}  norm² {norm}",
                    r.params.n,
                    r.params.k,
                    r.params.m,
                    r.params.degree,
                    if r.hypotheses.all() { "met" } else { "violated" }
                );
            }
            Some(PlotSpec {
                x: "n".into(),
                y: "norm_squared".into(),
                log_x: true,
                ..PlotSpec::default()
            })
        }
        Experiment::SdpFrequency(c) => {
            let rows = sweeps::run_sdp_frequency(c, cfg.seeds, cfg.base_seed)?;
            sweeps::write_sdp_csv(&rows, out)?;
            let feasible = rows.iter().filter(|r| r.feasible).count();
            let worst = rows.iter().map(|r| r.objective.abs()).fold(0.0, f64::max);
            let _ = writeln!(
                summary,
                "feasible in {feasible}/{} seeds, largest |objective| {worst:.3e}",
                rows.len()
            );
            None
        }
        Experiment::GgmErrors(c) => {
            let rows = sweeps::run_ggm_errors(c, cfg.seeds, cfg.base_seed)?;
            sweeps::write_ggm_csv(&rows, out)?;
            let (t1, t2) = sweeps::ggm_error_rates(&rows);
            let _ = writeln!(summary, "type I {t1:.3}, type II {t2:.3}, sum {:.3}", t1 + t2);
            None
        }
    };
    if let (Some(path), Some(spec)) = (&cfg.plot, plot_spec) {
        let svg = plot_csv(File::open(&cfg.output)?, &spec)?;
        std::fs::write(path, svg)?;
    }
    Ok(summary)
}

fn create(path: &Path) -> Result<File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}
