#![no_main]

use covqcs::harness::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::from_toml(text) {
        assert!(!m.sensing_matrix.contains('/'));
        let _ = RunManifest::from_toml(&m.to_toml()).expect("round trip");
    }
});
