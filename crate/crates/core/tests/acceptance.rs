//! One test per acceptance criterion. Each prints its summary line and the measured table;
//! a failing criterion fails its test.

use stokescope::acceptance::run_criterion;

fn check(id: u32) {
    let report = run_criterion(id);
    println!("{}", report.summary());
    print!("{report}");
    assert!(report.passed(), "{}", report.summary());
}

#[test]
fn criterion_01_asymptote() {
    check(1);
}

#[test]
fn criterion_02_second_order_coefficient() {
    check(2);
}

#[test]
fn criterion_03_eigenvalue_localization() {
    check(3);
}

#[test]
fn criterion_04_quantization_formula() {
    check(4);
}

#[test]
fn criterion_05_perturbation_splitting() {
    check(5);
}

#[test]
fn criterion_06_y_shape() {
    check(6);
}

#[test]
fn criterion_07_stokes_geometry() {
    check(7);
}

#[test]
fn criterion_08_membership_consistency() {
    check(8);
}

#[test]
fn criterion_09_wkb_series_scaling() {
    check(9);
}

#[test]
fn criterion_10_pseudospectrum() {
    check(10);
}

#[test]
fn criterion_11_two_jump_limit() {
    check(11);
}
