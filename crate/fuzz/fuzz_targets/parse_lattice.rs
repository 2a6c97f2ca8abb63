#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lat) = ccl_core::parse_lattice(text) {
        assert_eq!(lat.len(), lat.rows() * lat.cols());
        let again = ccl_core::parse_lattice(&lat.to_text()).expect("round trip");
        assert_eq!(again, lat);
        let s = lat.sufficient_statistics();
        assert!(s.s1.unsigned_abs() as usize <= lat.dims().edge_count());
    }
});
