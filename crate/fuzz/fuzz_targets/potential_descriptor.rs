#![no_main]
use libfuzzer_sys::fuzz_target;
use stokescope::io::parse_potential;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = parse_potential(s) {
            let _ = p.pieces();
        }
    }
});
