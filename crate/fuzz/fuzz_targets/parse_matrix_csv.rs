#![no_main]

use covqcs::io::{parse_matrix_csv, write_matrix_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((m, seed)) = parse_matrix_csv(text) {
        let (again, seed2) = parse_matrix_csv(&write_matrix_csv(&m, seed)).expect("round trip");
        assert_eq!(seed, seed2);
        assert_eq!(m.shape(), again.shape());
    }
});
