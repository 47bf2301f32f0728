#![no_main]
use libfuzzer_sys::fuzz_target;
use stokescope::io::{parse_grid, parse_rect};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_grid(s);
        if let Ok(r) = parse_rect(s) {
            assert!(r.re_min < r.re_max && r.im_min < r.im_max);
        }
    }
});
