#![no_main]
use libfuzzer_sys::fuzz_target;
use stokescope::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        // from_json validates; building the potential must not panic either
        if let Ok(cfg) = RunConfig::from_json(s) {
            let _ = cfg.build_potential();
        }
    }
});
