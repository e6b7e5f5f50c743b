#![no_main]

use covqcs::harness::SweepConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sweep) = SweepConfig::from_toml(text) {
        for &scheme in &sweep.schemes {
            for &v in sweep.values.iter().take(8) {
                let _ = sweep.point(scheme, v);
            }
        }
    }
});
