//! Experiment harness: TOML configs in, CSV tables and SVG plots out.

pub mod config;
pub mod detection;
pub mod plot;
pub mod runner;
pub mod slr;
pub mod sweeps;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("CSV schema error at line {line}: {message}")]
    Schema { line: u64, message: String },

    #[error(transparent)]
    Core(#[from] rllab_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Independent stream for one grid cell: the seed picks the key, the cell
/// coordinate picks the stream.
pub fn cell_rng(base_seed: u64, seed: u64, cell: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(seed));
    rng.set_stream(cell);
    rng
}

/// Median with infinities kept (so failed runs count against a method) and
/// NaNs sorted last. Empty input gives NaN.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn median_handles_infinities() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 4.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert_eq!(median(&[f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn cell_streams_differ() {
        let a: u64 = cell_rng(0, 1, 50).random();
        let b: u64 = cell_rng(0, 1, 75).random();
        let c: u64 = cell_rng(0, 1, 50).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
