#![no_main]

use ccl_harness::experiment::summarize;
use ccl_harness::tables::parse_summary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_summary(text, "summary.csv") {
        let report = summarize(&rows);
        assert_eq!(report.variance.len(), report.bias.len());
    }
});
