mod common;

use num_complex::Complex64;

use p53hopf::model::{hill_eval, LinearizationCoeffs};
use p53hopf::normal_form::{analyze, lyapunov_quantities, DelayOperator, Direction, OrbitStability};
use p53hopf::sim::{oscillation_metrics, simulate, trailing_amplitude, HistorySpec, SimOptions};
use p53hopf::spectral::HopfPoint;
use p53hopf::{critical_delay, eigen_pair, AnalysisError, KernelFamily};

use common::{TAU2, WEAK};

fn cases() -> Vec<(KernelFamily, Option<f64>)> {
    vec![(KernelFamily::Discrete, Some(TAU2)), (WEAK, None)]
}

/// `(g20, g11, g02)` as Fourier modes of `conj(w) . N` along the critical
/// profile `eps (v e^{i omega theta} + c.c.)`, where `N` is the model's right
/// side minus its linearization, evaluated with the Hill function itself.
fn quadratic_g_oracle(lin: &LinearizationCoeffs, h: &HopfPoint, v: &[Complex64], w: &[Complex64]) -> [Complex64; 3] {
    let p = &lin.params;
    let y10 = lin.equilibrium.y10;
    let eps = 1e-3;
    let lag = match h.family {
        KernelFamily::Discrete => h.tau_crit - TAU2,
        KernelFamily::Weak { .. } => h.tau_crit,
    };
    let m = 32;
    let mut modes = [Complex64::new(0.0, 0.0); 3];
    for k in 0..m {
        let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let z = Complex64::from_polar(eps, th);
        let at = |j: usize, shift: f64| 2.0 * (z * v[j] * Complex64::new(0.0, -h.omega * shift).exp()).re;
        let (u2, u4, u2_lag) = (at(1, 0.0), at(3, 0.0), at(1, lag));
        let mut n = vec![Complex64::new(0.0, 0.0); v.len()];
        n[1] = (-p.b12 * u2 * u4).into();
        n[2] = (hill_eval(y10 + u2_lag, p).unwrap() - hill_eval(y10, p).unwrap() - lin.rho * u2_lag).into();
        let g: Complex64 = w.iter().zip(&n).map(|(a, b)| a.conj() * b).sum();
        for (slot, mode) in modes.iter_mut().zip([2.0, 0.0, -2.0]) {
            *slot += g * Complex64::new(0.0, -mode * th).exp() / m as f64;
        }
    }
    [2.0 * modes[0] / (eps * eps), modes[1] / (eps * eps), 2.0 * modes[2] / (eps * eps)]
}

#[test]
fn eigenvectors_and_pairing() {
    let (resid, pairing) = common::eigen_checks();
    assert!(resid < 1e-9, "residual {resid:e}");
    assert!(pairing < 1e-9, "pairing {pairing:e}");
}

#[test]
fn quadratic_coefficients_match_fourier_oracle() {
    let (_, _, lin) = common::reference();
    for (family, tau2) in cases() {
        let h = critical_delay(&lin, family).unwrap();
        let nf = analyze(&lin, &h, tau2).unwrap();
        let g = &nf.summary.g;
        let oracle = quadratic_g_oracle(&lin, &h, &nf.pair.v, &nf.pair.w);
        let scale = g.g20.norm().max(g.g11.norm()).max(g.g02.norm());
        for (got, want) in [g.g20, g.g11, g.g02].iter().zip(oracle) {
            assert!((got - want).norm() < 1e-5 * scale, "{family:?}: {got} vs {want}");
        }
    }
}

#[test]
fn summary_identities_recomputed() {
    let (_, _, lin) = common::reference();
    for (family, tau2) in cases() {
        let h = critical_delay(&lin, family).unwrap();
        let s = analyze(&lin, &h, tau2).unwrap().summary;
        let g = &s.g;
        let i = Complex64::new(0.0, 1.0);
        let c1 = i / (2.0 * h.omega) * (g.g20 * g.g11 - 2.0 * g.g11.norm_sqr() - g.g02.norm_sqr() / 3.0) + g.g21 / 2.0;
        let mu2 = -c1.re / h.lambda_prime.re;
        let beta2 = 2.0 * c1.re;
        let t2 = -(c1.im + mu2 * h.lambda_prime.im) / h.omega;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * b.abs();
        assert!((s.c1 - c1).norm() <= 1e-14 * c1.norm());
        assert!(close(s.mu2, mu2) && close(s.beta2, beta2) && close(s.t2, t2));
        assert_eq!(s.direction == Direction::Supercritical, mu2 > 0.0);
        assert_eq!(s.orbit_stability == OrbitStability::Stable, beta2 < 0.0);
        let (_, mu2p, _, _) = lyapunov_quantities(g.g20, g.g11, g.g02, g.g21_printed, h.omega, h.lambda_prime);
        assert_eq!(mu2p, s.mu2_printed_g21);
    }
}

#[test]
fn component_relations_of_the_center_manifold_data() {
    let (_, _, lin) = common::reference();
    for (family, tau2) in cases() {
        let h = critical_delay(&lin, family).unwrap();
        let g = analyze(&lin, &h, tau2).unwrap().summary.g;
        assert!(!g.e_relations.is_empty());
        for (name, r) in &g.e_relations {
            assert!(*r < 1e-9, "{family:?} {name}: {r:e}");
        }
    }
}

#[test]
fn closed_form_vectors_are_checked_not_trusted() {
    let (_, _, lin) = common::reference();
    let h = critical_delay(&lin, WEAK).unwrap();
    let pair = eigen_pair(&lin, &h, None).unwrap();
    assert!(pair.v_closed_form_ok && pair.w_closed_form_ok);
    // two point delays: the printed fourth components do not annihilate the
    // characteristic matrix, and the null-space vectors replace them
    let h = critical_delay(&lin, KernelFamily::Discrete).unwrap();
    let pair = eigen_pair(&lin, &h, Some(TAU2)).unwrap();
    assert!(!pair.v_closed_form_ok && pair.v_closed_form_residual > 1e-6);
    assert!(pair.v_residual < 1e-9 && pair.w_residual < 1e-9);
}

#[test]
fn split_must_leave_a_positive_hill_lag() {
    let (_, _, lin) = common::reference();
    let h = critical_delay(&lin, KernelFamily::Discrete).unwrap();
    for bad in [h.tau_crit, h.tau_crit + 1.0, -0.5] {
        let err = DelayOperator::at_hopf(&lin, &h, Some(bad)).unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidParameter { name: "tau2", .. }));
    }
    assert!(DelayOperator::at_hopf(&lin, &h, None).is_err());
}

/// Saturated amplitude and period of y1 a little past the crossing against
/// the normal-form predictions `2 |v2| sqrt(dtau / mu2)` and
/// `(2 pi / omega) (1 + T2 dtau / mu2)`.
#[test]
fn orbit_amplitude_and_period_match_simulation() {
    let (params, _, lin) = common::reference();
    for (family, tau2) in cases() {
        let h = critical_delay(&lin, family).unwrap();
        let nf = analyze(&lin, &h, tau2).unwrap();
        let dtau = 0.02 * h.tau_crit;
        let predicted = nf.predicted_amplitude(1, dtau).expect("supercritical");
        let base_period = 2.0 * std::f64::consts::PI / h.omega;
        let period_pred = base_period * (1.0 + nf.summary.t2 * dtau / nf.summary.mu2);
        let kernel = match family {
            KernelFamily::Discrete => p53hopf::KernelSpec::DiscreteDiscrete { tau1: h.tau_crit + dtau - TAU2, tau2: TAU2 },
            KernelFamily::Weak { q2 } => p53hopf::KernelSpec::DiscreteWeak { tau1: h.tau_crit + dtau, q2 },
        };
        let hist = HistorySpec::ConstantAtEquilibrium { perturbation: [0.0, predicted, 0.0, 0.0] };
        let traj = simulate(&params, &kernel, &hist, &SimOptions { horizon: 150.0 * base_period, step: 0.05 }).unwrap();
        let m = oscillation_metrics(&traj, 1, 0.8);
        let amp = trailing_amplitude(&traj, 1, 2.0 * base_period);
        let period = m.period_estimate.unwrap();
        assert!((amp - predicted).abs() < 0.02 * predicted, "{family:?}: amplitude {amp} vs {predicted}");
        assert!((period - period_pred).abs() < 1e-3 * period_pred, "{family:?}: period {period} vs {period_pred}");
    }
}
