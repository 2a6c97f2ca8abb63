#![no_main]

use ccl_harness::config::parse_estimators;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = parse_estimators(text) {
        for e in &list {
            assert!(!e.label().is_empty());
        }
    }
});
