#![no_main]

use harmonia_bench::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        let back = RunConfig::from_json(&cfg.to_json()).expect("validated config re-parses");
        assert_eq!(back, cfg);
    }
});
