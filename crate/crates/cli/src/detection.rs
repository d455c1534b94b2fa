use std::collections::BTreeMap;

use rayon::prelude::*;
use rllab_core::models::{sample_wishart_data, SpikedWishartParams, WishartModel};
use rllab_core::pca::{pca_detect, DetectionConfig, EtaThreshold, SlrBackend};
use rllab_core::rescale::SmartScalingConfig;
use rllab_core::Error;

use crate::cell_rng;
use crate::config::{BackendKind, PcaDetection};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub m: usize,
    pub seed: u64,
    pub planted: bool,
    /// `true` when the test declared a spike.
    pub decision: bool,
    pub min_eta: f64,
    pub threshold: f64,
}

/// `−1 + 1/(2k)` unless set explicitly.
pub fn detection_beta(cfg: &PcaDetection) -> f64 {
    cfg.beta.unwrap_or(-1.0 + 1.0 / (2.0 * cfg.k as f64))
}

fn backend(cfg: &PcaDetection, support: Vec<usize>) -> SlrBackend {
    match cfg.backend {
        BackendKind::Oracle => SlrBackend::Oracle { support },
        BackendKind::RescaledLasso => SlrBackend::RescaledLasso {
            lambda: cfg.lambda,
            scaling: SmartScalingConfig {
                div: cfg.div,
                budget: Some(cfg.budget_factor * cfg.k as f64),
                batch: cfg.batch,
                ..SmartScalingConfig::new(cfg.k)
            },
            shared_scaling: cfg.shared_scaling,
        },
        BackendKind::StandardizedLasso => SlrBackend::StandardizedLasso { lambda: cfg.lambda },
    }
}

/// One paired seed: planted and null data of the same shape. The oracle
/// backend is handed the planted support under both hypotheses. When `m`
/// does not exceed the holdout, both decisions are "no spike".
pub fn detection_cell(cfg: &PcaDetection, base_seed: u64, m: usize, seed: u64) -> Result<[DetectionRow; 2], Error> {
    let mut rng = cell_rng(base_seed, seed, m as u64);
    let params = SpikedWishartParams {
        n: cfg.n,
        k: cfg.k,
        beta: detection_beta(cfg),
        m,
    };
    let planted = sample_wishart_data(&WishartModel::Planted(params), &mut rng)?;
    let null = sample_wishart_data(&WishartModel::Null { n: cfg.n, m }, &mut rng)?;
    let support = planted.spike.as_ref().map(|s| s.support().to_vec()).unwrap_or_default();
    let det_cfg = DetectionConfig {
        holdout: cfg.holdout,
        eta_threshold: match cfg.null_delta {
            Some(delta) => EtaThreshold::NullCalibrated { delta },
            None => EtaThreshold::Fixed(cfg.eta_threshold),
        },
        ..DetectionConfig::new(cfg.k, backend(cfg, support))
    };
    let too_few = m <= det_cfg.holdout_for(cfg.n);
    let run = |data, is_planted| -> Result<DetectionRow, Error> {
        if too_few {
            // nothing left to train on: never declare a spike
            return Ok(DetectionRow {
                m,
                seed,
                planted: is_planted,
                decision: false,
                min_eta: f64::NAN,
                threshold: f64::NAN,
            });
        }
        let d = pca_detect(data, &det_cfg)?;
        Ok(DetectionRow {
            m,
            seed,
            planted: is_planted,
            decision: d.planted,
            min_eta: d.min_eta(),
            threshold: d.threshold,
        })
    };
    Ok([run(&null.data, false)?, run(&planted.data, true)?])
}

/// All paired cells, sorted by `(m, seed, hypothesis)` with the null first.
pub fn run_detection_sweep(cfg: &PcaDetection, seeds: u64, base_seed: u64) -> Result<Vec<DetectionRow>, Error> {
    let cells: Vec<(usize, u64)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| (0..seeds).map(move |s| (m, s)))
        .collect();
    let pairs = cells
        .par_iter()
        .map(|&(m, seed)| detection_cell(cfg, base_seed, m, seed))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut rows: Vec<DetectionRow> = pairs.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.m, r.seed, r.planted));
    Ok(rows)
}

/// `|P₁[declare spike] − P₀[declare spike]|` per `m`.
pub fn advantage(rows: &[DetectionRow]) -> BTreeMap<usize, f64> {
    // (planted declared, planted total, null declared, null total)
    let mut counts: BTreeMap<usize, [usize; 4]> = BTreeMap::new();
    for r in rows {
        let c = counts.entry(r.m).or_default();
        let base = if r.planted { 0 } else { 2 };
        c[base] += r.decision as usize;
        c[base + 1] += 1;
    }
    counts
        .into_iter()
        .map(|(m, [p1, n1, p0, n0])| {
            let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            (m, (rate(p1, n1) - rate(p0, n0)).abs())
        })
        .collect()
}

pub fn write_detection_csv<W: std::io::Write>(rows: &[DetectionRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "seed", "hypothesis", "decision", "min_eta", "threshold"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.seed.to_string(),
            if r.planted { "planted" } else { "null" }.to_string(),
            (r.decision as u8).to_string(),
            r.min_eta.to_string(),
            r.threshold.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
