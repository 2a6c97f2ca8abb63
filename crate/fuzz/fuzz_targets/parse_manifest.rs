#![no_main]

use ccl_harness::tables::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Manifest::parse(text, "manifest.txt") {
        let again = Manifest::parse(&m.to_text(), "manifest.txt").expect("round trip");
        assert_eq!(again.rows, m.rows);
        assert_eq!(again.datasets, m.datasets);
    }
});
