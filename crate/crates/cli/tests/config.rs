use std::path::PathBuf;

use rllab_cli::config::{Experiment, ExperimentConfig, ThresholdKind};
use rllab_cli::CliError;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_configs_load_and_validate() {
    for name in ["slr.toml", "detection.toml", "ldlr.toml", "sdp.toml", "ggm.toml"] {
        let cfg = ExperimentConfig::load(&shipped(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(cfg.output.starts_with(shipped("")), "{name}: output not anchored to the config");
    }
    let ggm = ExperimentConfig::load(&shipped("ggm.toml")).unwrap();
    match ggm.experiment {
        Experiment::GgmErrors(g) => assert_eq!(g.threshold, ThresholdKind::NullBound),
        other => panic!("unexpected experiment {other:?}"),
    }
}

#[test]
fn omitted_fields_take_defaults() {
    let cfg = ExperimentConfig::from_toml(
        "seeds = 2\noutput = \"x.csv\"\n[experiment]\nkind = \"sdp_frequency\"\nk = 10\n",
    )
    .unwrap();
    match cfg.experiment {
        Experiment::SdpFrequency(s) => {
            assert_eq!((s.n, s.k, s.m), (200, 10, None));
            assert_eq!(s.delta, 0.05);
        }
        other => panic!("unexpected experiment {other:?}"),
    }
    assert_eq!(cfg.base_seed, 0);
    assert!(cfg.plot.is_none());
}

#[test]
fn bad_configs_are_rejected() {
    let cases = [
        // unknown field
        "seeds = 1\noutput = \"x.csv\"\n[experiment]\nkind = \"ggm_errors\"\nnn = 3\n",
        // unknown kind
        "seeds = 1\noutput = \"x.csv\"\n[experiment]\nkind = \"nope\"\n",
        // zero seeds
        "seeds = 0\noutput = \"x.csv\"\n[experiment]\nkind = \"ggm_errors\"\n",
        // k larger than n
        "seeds = 1\noutput = \"x.csv\"\n[experiment]\nkind = \"slr_comparison\"\nn = 4\nk = 5\n",
        // empty grid
        "seeds = 1\noutput = \"x.csv\"\n[experiment]\nkind = \"pca_detection\"\nm_grid = []\n",
        // validation fraction out of range
        "seeds = 1\noutput = \"x.csv\"\n[experiment]\nkind = \"slr_comparison\"\nvalidation_fraction = 1.5\n",
    ];
    for text in cases {
        assert!(matches!(ExperimentConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
    }
}
