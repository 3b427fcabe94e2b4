mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use p53hopf::model::{equilibrium_poly_coeffs, hill_derivatives, hill_eval, Equilibrium};
use p53hopf::report::PUBLISHED_STATE;
use p53hopf::spectral::{delta1_at, KernelFamily};
use p53hopf::{linearize, solve_equilibrium, AnalysisError, ModelParams};

#[test]
fn hill_derivatives_match_finite_differences() {
    let worst = common::hill_fd_worst();
    assert!(worst < 1e-6, "worst scaled error {worst:e}");
}

#[test]
fn hill_values_by_hand() {
    let p = ModelParams::reference_set();
    assert_eq!(hill_eval(p.a, &p).unwrap(), 0.5);
    let y: f64 = 0.8347719895;
    let direct = y * y / (16.0 + y * y);
    assert!((hill_eval(y, &p).unwrap() - direct).abs() < 1e-15);
    assert!((direct - 0.041735).abs() < 5e-7);

    let h = 1e-6;
    let fd = (hill_eval(y + h, &p).unwrap() - hill_eval(y - h, &p).unwrap()) / (2.0 * h);
    let d1 = hill_derivatives(y, &p).unwrap().d1;
    assert!((d1 - fd).abs() < 1e-9);
    assert!((d1 - 0.09582).abs() < 5e-6);

    let p1 = ModelParams { n: 1, a: 2.5, ..p };
    assert!((hill_derivatives(2.5, &p1).unwrap().d1 - 1.0 / 10.0).abs() < 1e-15);
    assert!(matches!(hill_derivatives(0.0, &p), Err(AnalysisError::Domain(_))));
}

#[test]
fn equilibrium_coefficients_by_hand() {
    let (alpha, beta, gamma, delta) = equilibrium_poly_coeffs(&ModelParams::reference_set()).unwrap();
    assert!((alpha - 0.55 * (1.5 + 0.8 * 0.1 * 0.1)).abs() < 1e-15);
    assert!((beta - 0.02).abs() < 1e-15);
    assert!((gamma - 0.55 * 0.8 * 0.01 * 16.0).abs() < 1e-15);
    assert!((delta - 0.32).abs() < 1e-15);
    assert!((delta / beta - 16.0).abs() < 1e-12);
}

#[test]
fn published_state_is_not_steady() {
    let p = ModelParams::reference_set();
    let at_published = Equilibrium::at_state(&p, PUBLISHED_STATE);
    let solved = solve_equilibrium(&p).unwrap();
    assert_eq!(solved.roots.len(), 1);
    assert!(solved.principal().residual < 1e-10);
    // the first equation decouples, so x10 agrees; the rest do not
    assert!((solved.principal().x10 - PUBLISHED_STATE[0]).abs() < 1e-9);
    assert!(at_published.residual > 1e-3);
}

#[test]
fn linearization_by_hand_at_published_state() {
    let p = ModelParams::reference_set();
    let eq = Equilibrium::at_state(&p, PUBLISHED_STATE);
    let lin = linearize(&p, &eq).unwrap();
    let decay = p.b2 + p.b12 * PUBLISHED_STATE[3];
    let (c2, d2) = (p.c2, p.d2);
    let p2 = decay + c2 + d2;
    let p1 = (c2 + d2) * decay + c2 * d2;
    let p0 = c2 * d2 * decay;
    assert!((lin.p2 - p2).abs() < 1e-14 && (p2 - 4.5561).abs() < 1e-4);
    assert!((lin.p1 - p1).abs() < 1e-14 && (p1 - 0.88122).abs() < 1e-5);
    assert!((lin.p0 - p0).abs() < 1e-14 && (p0 - 0.043561).abs() < 1e-6);
    let y = PUBLISHED_STATE[1];
    let h = 1e-6;
    let rho_fd = (hill_eval(y + h, &p).unwrap() - hill_eval(y - h, &p).unwrap()) / (2.0 * h);
    let r = rho_fd * p.b12 * y;
    assert!((lin.r - r).abs() < 1e-9 && (r - 0.1200).abs() < 1e-4);
}

#[test]
fn determinant_factors_through_reduced_characteristic_function() {
    let (_, _, lin) = common::reference();
    let mut rng = common::rng(7);
    let a2 = lin.params.a2;
    for _ in 0..100 {
        let l = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
        let tau1 = rng.gen_range(0.0..15.0);
        let tau2 = rng.gen_range(0.0..15.0);
        let full = common::full_determinant(&lin, l, tau1, tau2);
        let reduced = (l + a2) * delta1_at(l, &lin, KernelFamily::Discrete, tau1 + tau2);
        let scale = 1.0 + full.norm().max(reduced.norm());
        assert!((full - reduced).norm() < 1e-10 * scale, "lambda {l}: {full} vs {reduced}");
    }
}

#[test]
fn zero_production_has_no_equilibrium() {
    let p = ModelParams { a1: 0.0, ..ModelParams::reference_set() };
    assert_eq!(solve_equilibrium(&p).unwrap_err().exit_code(), 2);
}

#[test]
fn nonzero_coupling_is_rejected() {
    let p = ModelParams { d12: 0.2, ..ModelParams::reference_set() };
    assert!(matches!(solve_equilibrium(&p), Err(AnalysisError::UnsupportedCoupling(_))));
}

fn params() -> impl Strategy<Value = ModelParams> {
    (
        prop::array::uniform7(0.01f64..3.0),
        0.1f64..10.0,
        1u32..=5,
    )
        .prop_map(|(r, a, n)| ModelParams {
            a1: r[0],
            a2: r[1],
            b1: r[2],
            b2: r[3],
            b12: r[4],
            c2: r[5],
            d2: r[6],
            d12: 0.0,
            a,
            n,
        })
}

proptest! {
    #[test]
    fn equilibrium_coefficients_positive(p in params()) {
        let (alpha, beta, gamma, delta) = equilibrium_poly_coeffs(&p).unwrap();
        prop_assert!(alpha > 0.0 && beta > 0.0 && gamma > 0.0 && delta > 0.0);
    }

    #[test]
    fn every_root_is_steady(p in params()) {
        let (alpha, beta, gamma, delta) = equilibrium_poly_coeffs(&p).unwrap();
        let set = solve_equilibrium(&p).unwrap();
        // the P53 balance is monotone in y10, so the root is unique
        prop_assert_eq!(set.roots.len(), 1);
        let coeff_max = alpha.max(beta).max(gamma).max(delta);
        for eq in &set.roots {
            let y = eq.y10;
            let n = p.n as i32;
            // terms grow like y^(n+1); rounding in their sum scales with them
            let scale = coeff_max * y.max(1.0).powi(n + 1);
            let poly = alpha * y.powi(n + 1) - beta * y.powi(n) + gamma * y - delta;
            prop_assert!(poly.abs() < 1e-12 * scale, "poly {poly:e}");
            prop_assert!(eq.residual < 1e-10, "residual {:e}", eq.residual);
            // the open upper end is reachable only through rounding
            prop_assert!(y > 0.0 && y <= p.y10_upper());
            prop_assert_eq!(eq.x10, p.a1 / p.a2);
        }
        for w in set.roots.windows(2) {
            prop_assert!(w[0].y10 < w[1].y10);
        }
    }

    #[test]
    fn hill_is_increasing(x in 1e-4f64..1e4, p in params()) {
        prop_assert!(hill_derivatives(x, &p).unwrap().d1 > 0.0);
    }
}
