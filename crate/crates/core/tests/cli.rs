use std::path::Path;
use std::process::{Command, Output};

fn stokescope(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokescope"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn stokescope")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn limit_curve_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(&["limit-curve", "--amin", "5", "--amax", "20", "--astep", "1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("curve_m1_1.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a,b"));
    assert_eq!(lines.count(), 16);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir.path().join("curves.json"))).unwrap();
    let b = meta["curves"][0]["asymptote"].as_f64().unwrap();
    assert!((b - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn jump_gives_one_curve_per_piece() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(
        &["limit-curve", "--beta", "0", "--delta", "0.1", "--amin", "5", "--amax", "8", "--astep", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn eigs_csv_has_matrix_and_shooting_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(&["eigs", "--h", "0.1", "--N", "96", "--rect", "0,6,-0.5,1.5", "--svg"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("eigs_h0.1.csv"));
    assert!(csv.starts_with("re,im,h,method,k,residual\n"));
    assert!(csv.lines().any(|l| l.contains(",matrix,")));
    assert!(csv.lines().any(|l| l.contains(",shooting,")));
    assert!(read(&dir.path().join("eigs.svg")).starts_with("<svg"));
}

#[test]
fn stokes_json_carries_polylines() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(&["stokes", "--energy", "10,1", "--rect", "-4,4,-4,4"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("stokes.json"))).unwrap();
    let d = &v["diagrams"][0];
    assert_eq!(d["turning_points"].as_array().unwrap().len(), 2);
    let lines = d["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|l| l["points"].as_array().unwrap().len() > 2));
}

#[test]
fn pseudospec_grid_has_every_node() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(&["pseudospec", "--h", "0.1", "--grid", "4x3", "--N", "64"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("pseudospec_h0.1.csv"));
    assert_eq!(csv.lines().count(), 1 + 12);
    for l in csv.lines().skip(1) {
        let s: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(s >= 0.0);
    }
}

#[test]
fn y_shape_writes_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(&["y-shape", "--amax", "10"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["y_ray.csv", "y_alpha_plus_one.csv", "y_minus_one_one.csv", "y_shape.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("y_shape.json"))).unwrap();
    assert!((v["lambda0"].as_f64().unwrap() - 0.4577991228512).abs() < 1e-10);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"h": [0.2], "a_min": 5, "a_max": 7, "a_step": 1}"#).unwrap();
    let o = stokescope(&["limit-curve", "--config", cfg.to_str().unwrap(), "--amax", "9"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&dir.path().join("curve_m1_1.csv")).lines().count(), 1 + 5);
}

#[test]
fn invalid_input_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["eigs", "--h=-1"][..],
        &["pseudospec", "--grid", "0x4"],
        &["pseudospec", "--rect", "1,0,0,1"],
        &["stokes", "--energy", "nope"],
    ] {
        let o = stokescope(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"h": [0.1], "frobnicate": 1}"#).unwrap();
    let o = stokescope(&["eigs", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_prints_table_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = stokescope(&["verify", "--filter", "6"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("criterion 6 (y-shape): PASS"), "{text}");
    assert_eq!(o.status.code(), Some(0));
}
