mod common;

use num_complex::Complex64;

use p53hopf::model::Equilibrium;
use p53hopf::report::{PUBLISHED_DISCRETE, PUBLISHED_STATE};
use p53hopf::spectral::{characteristic_roots, delta1_at, stability_zero_delay, transversality, RootWindow};
use p53hopf::{critical_delay, linearize, AnalysisError, KernelFamily, ModelParams};

use common::WEAK;

fn published_lin() -> p53hopf::LinearizationCoeffs {
    let p = ModelParams::reference_set();
    linearize(&p, &Equilibrium::at_state(&p, PUBLISHED_STATE)).unwrap()
}

/// The reduced characteristic function written out from `p0, p1, p2, r`.
fn delta_oracle(lin: &p53hopf::LinearizationCoeffs, family: KernelFamily, l: Complex64, tau: f64) -> Complex64 {
    let p = l * l * l + lin.p2 * l * l + lin.p1 * l + lin.p0;
    let e = (-l * tau).exp();
    match family {
        KernelFamily::Discrete => p + lin.r * e,
        KernelFamily::Weak { q2 } => (l + q2) * p + lin.r * q2 * e,
    }
}

fn newton_oracle(lin: &p53hopf::LinearizationCoeffs, family: KernelFamily, tau: f64, mut l: Complex64) -> Complex64 {
    for _ in 0..50 {
        let h = 1e-7;
        let d = (delta_oracle(lin, family, l + h, tau) - delta_oracle(lin, family, l - h, tau)) / (2.0 * h);
        l -= delta_oracle(lin, family, l, tau) / d;
    }
    l
}

#[test]
fn routh_hurwitz_matches_explicit_roots() {
    let (agree, total) = common::routh_hurwitz_agreement(200, 11);
    assert_eq!(agree, total);
}

#[test]
fn zero_delay_margin_at_published_state() {
    let lin = published_lin();
    let rep = stability_zero_delay(&lin, KernelFamily::Discrete).unwrap();
    let margin = lin.p1 * lin.p2 - lin.p0 - lin.r;
    assert!(rep.stable && common::stable_by_roots(&lin, KernelFamily::Discrete));
    assert!((rep.conditions[0].margin - margin).abs() < 1e-14);
    // p1 p2 - p0 - r from the hand values 0.88122, 4.5561, 0.043561, 0.1200
    assert!((margin - (0.88122 * 4.5561 - 0.043561 - 0.1200)).abs() < 1e-3);
}

#[test]
fn weak_zero_delay_conditions_hold() {
    for lin in [published_lin(), common::reference().2] {
        let rep = stability_zero_delay(&lin, WEAK).unwrap();
        assert!(rep.stable);
        assert!(rep.conditions.iter().all(|c| c.holds && c.margin > 0.0));
        assert!(common::stable_by_roots(&lin, WEAK));
    }
}

#[test]
fn pure_constant_term_is_unstable() {
    let mut lin = common::reference().2;
    lin.p1 = 0.0;
    lin.p2 = 0.0;
    let rep = stability_zero_delay(&lin, KernelFamily::Discrete).unwrap();
    assert!(!rep.stable);
    assert!(!common::stable_by_roots(&lin, KernelFamily::Discrete));
}

#[test]
fn characteristic_function_at_origin() {
    let (_, _, lin) = common::reference();
    let zero = Complex64::new(0.0, 0.0);
    for tau in [0.0, 3.0, 40.0] {
        let d = delta1_at(zero, &lin, KernelFamily::Discrete, tau);
        assert!((d - (lin.p0 + lin.r)).norm() < 1e-15);
        let w = delta1_at(zero, &lin, WEAK, tau);
        assert!((w - 0.5 * (lin.p0 + lin.r)).norm() < 1e-15);
    }
}

#[test]
fn characteristic_function_matches_oracle() {
    let (_, _, lin) = common::reference();
    let mut rng = common::rng(3);
    use rand::Rng;
    for _ in 0..200 {
        let l = Complex64::new(rng.gen_range(-2.0..1.0), rng.gen_range(-5.0..5.0));
        let tau = rng.gen_range(0.0..40.0);
        for family in [KernelFamily::Discrete, WEAK] {
            let a = delta1_at(l, &lin, family, tau);
            let b = delta_oracle(&lin, family, l, tau);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }
}

#[test]
fn published_discrete_pair_is_a_near_root() {
    let lin = published_lin();
    let l = Complex64::new(0.0, PUBLISHED_DISCRETE.omega);
    let d = delta1_at(l, &lin, KernelFamily::Discrete, PUBLISHED_DISCRETE.tau_crit);
    assert!(d.norm() < 1e-6 * (lin.p0 + lin.r), "|D| = {:e}", d.norm());
}

#[test]
fn crossing_residual_and_angle_recovery() {
    for lin in [published_lin(), common::reference().2] {
        for family in [KernelFamily::Discrete, WEAK] {
            let h = critical_delay(&lin, family).unwrap();
            assert!(h.residual < 1e-9);
            assert!(h.tau_crit > 0.0 && h.omega > 0.0);
            let w = h.omega;
            let l = Complex64::new(0.0, w);
            let p = l * l * l + lin.p2 * l * l + lin.p1 * l + lin.p0;
            // r e^{-i w tau} from the imaginary-axis balance
            let target = match family {
                KernelFamily::Discrete => -p,
                KernelFamily::Weak { q2 } => -(l + q2) * p / q2,
            };
            let got = lin.r * Complex64::new((w * h.tau_crit).cos(), -(w * h.tau_crit).sin());
            assert!((got - target).norm() < 1e-9 * lin.r.max(1.0), "{family:?}: {got} vs {target}");
            // smallest crossing: no earlier delay on the same branch
            assert!(h.tau_crit * w < 2.0 * std::f64::consts::PI + 1e-12);
        }
    }
}

#[test]
fn roots_cross_at_the_critical_delay() {
    let (_, _, lin) = common::reference();
    for family in [KernelFamily::Discrete, WEAK] {
        let h = critical_delay(&lin, family).unwrap();
        let eps = 0.05 * h.tau_crit;
        let before = characteristic_roots(&lin, family, h.tau_crit - eps, RootWindow::default());
        let after = characteristic_roots(&lin, family, h.tau_crit + eps, RootWindow::default());
        assert!(!before.is_empty() && before.iter().all(|z| z.re < 0.0), "{family:?}: {before:?}");
        assert!(after.iter().any(|z| z.re > 0.0), "{family:?}: {after:?}");
        for z in before.iter().chain(&after) {
            let tau = if before.contains(z) { h.tau_crit - eps } else { h.tau_crit + eps };
            assert!(delta_oracle(&lin, family, *z, tau).norm() < 1e-8);
        }
    }
}

#[test]
fn transversality_agrees_with_independent_continuation() {
    for lin in [published_lin(), common::reference().2] {
        for family in [KernelFamily::Discrete, WEAK] {
            let h = critical_delay(&lin, family).unwrap();
            let rep = transversality(&lin, &h).unwrap();
            let d = 0.01;
            let up = newton_oracle(&lin, family, h.tau_crit + d, h.lambda1());
            let down = newton_oracle(&lin, family, h.tau_crit - d, h.lambda1());
            let slope = (up - down) / (2.0 * d);
            assert!(slope.re > 0.0);
            assert!(h.lambda_prime.re > 0.0 && rep.closed_form.re > 0.0);
            assert!((rep.closed_form - slope).norm() < 1e-5 * slope.norm(), "{} vs {}", rep.closed_form, slope);
            assert!((rep.continuation - slope).norm() < 1e-5 * slope.norm());
        }
    }
}

#[test]
fn weak_kernel_approaches_point_delay_as_rate_grows() {
    let (_, _, lin) = common::reference();
    let tau0 = critical_delay(&lin, KernelFamily::Discrete).unwrap().tau_crit;
    let gap = |q2: f64| (critical_delay(&lin, KernelFamily::Weak { q2 }).unwrap().tau_crit - tau0).abs();
    let (g3, g4) = (gap(1e3), gap(1e4));
    assert!(g4 < g3, "{g3:e} then {g4:e}");
    assert!(g4 < 1e-3 * tau0);
}

#[test]
fn weak_coupling_has_no_crossing() {
    let p = ModelParams { b12: 1e-6, ..ModelParams::reference_set() };
    let eq = *p53hopf::solve_equilibrium(&p).unwrap().principal();
    let lin = linearize(&p, &eq).unwrap();
    let err = critical_delay(&lin, KernelFamily::Discrete).unwrap_err();
    assert!(matches!(err, AnalysisError::NoHopf { .. }));
    assert_eq!(err.exit_code(), 3);
}
