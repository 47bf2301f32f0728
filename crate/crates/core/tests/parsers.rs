//! Parser entry points never panic; the checked-in fuzz seeds keep their verdicts.

use std::path::PathBuf;

use proptest::prelude::*;
use stokescope::config::RunConfig;
use stokescope::io::{parse_grid, parse_oracles, parse_potential, parse_rect};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn potential_seeds() {
    for (name, text) in seeds("potential_descriptor") {
        let ok = parse_potential(&text).is_ok();
        assert_eq!(ok, name != "jump_outside", "{name}");
    }
}

#[test]
fn run_config_seeds() {
    for (name, text) in seeds("run_config") {
        let r = RunConfig::from_json(&text);
        assert_eq!(r.is_ok(), name != "unknown_field", "{name}: {r:?}");
    }
}

#[test]
fn grid_rect_seeds() {
    for (name, text) in seeds("grid_rect") {
        match name.as_str() {
            "grid" => assert_eq!(parse_grid(&text).unwrap(), (49, 25)),
            "grid_zero" => assert!(parse_grid(&text).is_err()),
            "rect" => assert!(parse_rect(&text).is_ok()),
            _ => assert!(parse_rect(&text).is_err(), "{name}"),
        }
    }
}

#[test]
fn oracle_seeds() {
    for (name, text) in seeds("oracle_fixture") {
        assert_eq!(parse_oracles(&text).is_ok(), name == "frozen", "{name}");
    }
}

proptest! {
    #[test]
    fn parsers_do_not_panic(s in ".{0,64}") {
        let _ = parse_grid(&s);
        let _ = parse_rect(&s);
        let _ = parse_potential(&s);
        let _ = RunConfig::from_json(&s);
        let _ = parse_oracles(&s);
    }

    #[test]
    fn rect_roundtrip(a in -1e3f64..1e3, w in 1e-6f64..1e3, c in -1e3f64..1e3, t in 1e-6f64..1e3) {
        let r = parse_rect(&format!("{a},{},{c},{}", a + w, c + t)).unwrap();
        prop_assert_eq!((r.re_min, r.re_max, r.im_min, r.im_max), (a, a + w, c, c + t));
    }

    #[test]
    fn grid_roundtrip(nx in 1usize..10_000, ny in 1usize..10_000) {
        prop_assert_eq!(parse_grid(&format!("{nx}x{ny}")).unwrap(), (nx, ny));
    }

    #[test]
    fn json_shaped_potentials(re in prop::collection::vec(-5f64..5.0, 0..6), im in prop::collection::vec(-5f64..5.0, 0..6)) {
        let coeffs: Vec<String> = re.iter().zip(&im).map(|(a, b)| format!("[{a}, {b}]")).collect();
        let text = format!("{{\"coeffs\": [{}], \"jumps\": []}}", coeffs.join(","));
        let _ = parse_potential(&text);
    }
}
