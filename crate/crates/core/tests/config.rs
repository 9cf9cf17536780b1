use fovpart::config::{ExperimentConfig, GroundStations, ShellEntry, StationEntry};
use fovpart::{Error, Strategy as Split};
use proptest::prelude::*;

const PRESETS: [&str; 4] = ["iridium", "meo-10354", "meo-8070", "starlink"];

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        proptest::sample::subsequence(PRESETS.to_vec(), 1..=3),
        proptest::collection::vec((-89.0f64..89.0, -179.0f64..179.0), 0..4),
        proptest::option::of(60.0f64..10_000.0),
        1.0f64..60.0,
        proptest::sample::subsequence(Split::ALL.to_vec(), 1..=3),
        proptest::collection::vec(0.0f64..=1.0, 1..5),
        proptest::collection::vec(any::<u64>(), 1..4),
    )
        .prop_map(|(shells, stations, horizon, step, strategies, gammas, seeds)| {
            let mut cfg = ExperimentConfig::desk();
            cfg.network.shells = shells.into_iter().map(|s| ShellEntry::Preset(s.to_string())).collect();
            if !stations.is_empty() {
                cfg.network.ground_stations = GroundStations::List(
                    stations
                        .into_iter()
                        .enumerate()
                        .map(|(i, (lat, lon))| StationEntry { name: format!("gs{i}"), lat, lon })
                        .collect(),
                );
            }
            cfg.time.horizon_s = horizon;
            cfg.time.step_s = step;
            cfg.run.strategies = strategies;
            cfg.run.gammas = gammas;
            cfg.run.seeds = seeds;
            cfg
        })
}

proptest! {
    #[test]
    fn toml_round_trip_preserves_config_and_hash(cfg in config()) {
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn out_of_range_gamma_is_rejected(g in prop_oneof![-5.0f64..-1e-6, 1.0f64 + 1e-6..5.0]) {
        let mut cfg = ExperimentConfig::desk();
        cfg.run.gammas = vec![0.5, g];
        prop_assert!(matches!(cfg.validate(), Err(Error::InvalidGamma(_))));
    }
}

#[test]
fn hash_changes_with_any_run_setting() {
    let base = ExperimentConfig::desk();
    let mut seeds = base.clone();
    seeds.run.seeds = vec![9];
    let mut step = base.clone();
    step.time.step_s = 10.0;
    assert_ne!(base.hash(), seeds.hash());
    assert_ne!(base.hash(), step.hash());
    assert_ne!(seeds.hash(), step.hash());
}

#[test]
fn malformed_text_reports_an_error() {
    for text in ["", "[network", "[network]\nshells = 3\n", "[network]\nshells = []\n"] {
        assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text:?}");
    }
}
