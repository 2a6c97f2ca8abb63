#![no_main]

use ccl_harness::config::parse_config;
use ccl_harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = parse_config(text, "fuzz.cfg") {
        if let Ok(cfg) = ExperimentConfig::from_map(&map) {
            assert!(cfg.rows > 0 && cfg.cols > 0);
            let _ = cfg.estimators_with_ground_truth();
        }
    }
});
