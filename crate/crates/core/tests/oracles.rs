//! Independent reference computations, frozen into `fixtures/oracles.json`.
//!
//! Nothing here goes through the library's quadrature, branch continuation or eigen-solvers:
//! integrals are composite Simpson rules with the square root tracked by nearest-root
//! continuation, and eigenvalues come from fixed-step RK4 shooting with a secant iteration.
//! Run `cargo test --test oracles -- --ignored` to regenerate the fixture.

use num_complex::Complex64 as C;
use stokescope::io::{self, OracleAction, OracleEigenvalue, OracleFixtures};
use stokescope::solver::{self, wkb_formula};
use stokescope::{curves, Potential};

fn follow(z2: C, prev: C) -> C {
    let r = z2.sqrt();
    if (r - prev).norm() <= (r + prev).norm() {
        r
    } else {
        -r
    }
}

/// Composite Simpson of `g(t)` on `[0, 1]` with `2m` panels, where `g` is evaluated in order
/// from `t = 1` down to `t = 0` so that branch tracking can run along the way.
fn simpson_descending<F: FnMut(f64) -> C>(mut g: F, m: usize) -> C {
    let n = 2 * m;
    let mut acc = C::new(0.0, 0.0);
    for k in (0..=n).rev() {
        let t = k as f64 / n as f64;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += g(t) * w;
    }
    acc / (3.0 * n as f64)
}

/// `S_{alpha+,1}(E)` for `V = i x^2` with `w(1) = -i (E - i)^{1/2}`, via `x = a + (1 - a) u^2`.
fn oracle_s_alpha_plus_one(e: C) -> C {
    let a = (-C::i() * e).sqrt();
    let mut w = -C::i() * (e - C::i()).sqrt();
    simpson_descending(
        |u| {
            let x = a + (1.0 - a) * u * u;
            w = follow(C::i() * x * x - e, w);
            // integrand vanishes at u = 0 where x is the turning point
            w * (1.0 - a) * 2.0 * u
        },
        20_000,
    )
}

fn oracle_lambda0() -> f64 {
    let g = |l: f64| oracle_s_alpha_plus_one(C::from_polar(l, std::f64::consts::FRAC_PI_4)).re;
    let n = 400;
    let mut prev = (20.0 / n as f64, g(20.0 / n as f64));
    for k in 2..=n {
        let l = 20.0 * k as f64 / n as f64;
        let v = g(l);
        if v.signum() != prev.1.signum() {
            let (mut lo, mut hi, flo) = (prev.0, l, prev.1);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev = (l, v);
    }
    panic!("no sign change of Re S on (0, 20]");
}

/// `S_{-1,1}(E)` for `V = i x^2` with `w(-1) = i (E - V(-1))^{1/2}`; `x = 1 - 2t`.
fn oracle_action(e: C) -> C {
    let mut w = C::i() * (e - C::i()).sqrt();
    // descending t walks x from -1 to 1
    simpson_descending(
        |t| {
            let x = 2.0 * (1.0 - t) - 1.0;
            w = follow(C::i() * x * x - e, w);
            w * 2.0
        },
        20_000,
    )
}

/// `u(1)` for `h^2 u'' = (i x^2 - E) u`, `u(-1) = 0`, `u'(-1) = 1`, by RK4 with `n` steps.
fn rk4_endpoint(h: f64, e: C, n: usize) -> C {
    let q = |x: f64| (C::new(0.0, x * x) - e) / (h * h);
    let dx = 2.0 / n as f64;
    let (mut u, mut v) = (C::new(0.0, 0.0), C::new(1.0, 0.0));
    let mut x = -1.0;
    for _ in 0..n {
        let (k1u, k1v) = (v, q(x) * u);
        let (k2u, k2v) = (v + k1v * (dx / 2.0), q(x + dx / 2.0) * (u + k1u * (dx / 2.0)));
        let (k3u, k3v) = (v + k2v * (dx / 2.0), q(x + dx / 2.0) * (u + k2u * (dx / 2.0)));
        let (k4u, k4v) = (v + k3v * dx, q(x + dx) * (u + k3u * dx));
        u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (dx / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dx / 6.0);
        x += dx;
    }
    u
}

fn oracle_eigenvalue(h: f64, seed: C) -> C {
    let n = 80_000;
    let f = |e: C| rk4_endpoint(h, e, n);
    let (mut e0, mut e1) = (seed, seed + 1e-4);
    let (mut f0, mut f1) = (f(e0), f(e1));
    for _ in 0..60 {
        let e2 = e1 - f1 * (e1 - e0) / (f1 - f0);
        e0 = e1;
        f0 = f1;
        e1 = e2;
        f1 = f(e1);
        if (e1 - e0).norm() < 1e-13 * e1.norm() {
            break;
        }
    }
    e1
}

const ORACLE_H: f64 = 0.05;
const ORACLE_K: [i64; 3] = [20, 25, 30];
const ORACLE_ENERGY: [f64; 2] = [10.0, 1.0 / 3.0];

fn compute() -> OracleFixtures {
    let p = Potential::ix2();
    let e = C::new(ORACLE_ENERGY[0], ORACLE_ENERGY[1]);
    let s = oracle_action(e);
    OracleFixtures {
        lambda0: oracle_lambda0(),
        action_ix2: OracleAction {
            energy: ORACLE_ENERGY,
            value: [s.re, s.im],
        },
        eigenvalues: ORACLE_K
            .iter()
            .map(|&k| {
                let e = oracle_eigenvalue(ORACLE_H, wkb_formula(&p, ORACLE_H, k).unwrap());
                OracleEigenvalue { h: ORACLE_H, e: [e.re, e.im] }
            })
            .collect(),
    }
}

fn frozen() -> OracleFixtures {
    io::load_oracles(&io::fixture_dir()).expect("fixture present")
}

#[test]
#[ignore]
fn regenerate_oracle_fixture() {
    let f = compute();
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let json = serde_json::to_string_pretty(&f).unwrap() + "\n";
    io::write_file(&dir, io::ORACLE_FILE, &json).unwrap();
}

#[test]
fn frozen_fixture_reproduces() {
    let fresh = compute();
    let f = frozen();
    assert!((fresh.lambda0 - f.lambda0).abs() < 1e-12);
    for k in 0..2 {
        assert!((fresh.action_ix2.value[k] - f.action_ix2.value[k]).abs() < 1e-12);
    }
    for (a, b) in fresh.eigenvalues.iter().zip(&f.eigenvalues) {
        assert!((C::new(a.e[0], a.e[1]) - C::new(b.e[0], b.e[1])).norm() < 1e-12);
    }
}

#[test]
fn junction_matches_oracle() {
    let l = curves::junction_lambda0().unwrap();
    assert!((l - frozen().lambda0).abs() < 1e-8, "{l} vs {}", frozen().lambda0);
}

#[test]
fn action_matches_oracle() {
    let f = frozen();
    let e = C::new(f.action_ix2.energy[0], f.action_ix2.energy[1]);
    let s = curves::segment_action(&Potential::ix2(), e, -1.0, 1.0, 0.0).unwrap();
    let want = C::new(f.action_ix2.value[0], f.action_ix2.value[1]);
    assert!((s - want).norm() < 1e-10, "{s} vs {want}");
}

#[test]
fn shooting_and_matrix_match_oracle_eigenvalues() {
    let p = Potential::ix2();
    let f = frozen();
    let matrix = solver::eigenvalues(&p, ORACLE_H, 256, None).unwrap();
    for (k, o) in ORACLE_K.iter().zip(&f.eigenvalues) {
        let want = C::new(o.e[0], o.e[1]);
        let refined = solver::refine(&p, o.h, wkb_formula(&p, o.h, *k).unwrap()).unwrap();
        assert!((refined.e - want).norm() < 1e-8, "k={k}: {} vs {want}", refined.e);
        let nearest = matrix.iter().map(|r| (r.e - want).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-6, "k={k}: matrix misses {want} by {nearest}");
    }
}
