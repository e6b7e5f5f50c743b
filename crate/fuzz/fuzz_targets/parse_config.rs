#![no_main]

use covqcs::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        // anything accepted must survive a round trip
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).expect("round trip");
        assert_eq!(again.m(), cfg.m());
        let _ = cfg.stage_rates();
        let _ = cfg.stage_epsilons();
    }
});
