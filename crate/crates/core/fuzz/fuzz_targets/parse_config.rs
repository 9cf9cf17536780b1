#![no_main]

use fovpart::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml().expect("valid config serializes"))
            .expect("serialized config parses");
        assert_eq!(again.hash(), cfg.hash());
    }
});
