//! Characteristic function, zero-delay stability, critical delays and
//! transversality for the two kernel configurations.
//!
//! Both configurations share the cubic `P(l) = l^3 + p2 l^2 + p1 l + p0`:
//!
//! * two point delays: `D(l) = P(l) + r exp(-l tau)` with `tau = tau1 + tau2`;
//! * point delay plus weak kernel `q2 exp(-q2 s)`:
//!   `D(l) = (l + q2) P(l) + r q2 exp(-l tau1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, Result};
use crate::model::LinearizationCoeffs;
use crate::poly::Poly;

/// Delay kernels for the Mdm2 transcription and translation steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Point delays on both steps.
    DiscreteDiscrete { tau1: f64, tau2: f64 },
    /// Point delay on transcription, weak exponential kernel on translation.
    DiscreteWeak { tau1: f64, q2: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| {
            Err(AnalysisError::InvalidParameter { name, value, reason })
        };
        match *self {
            KernelSpec::DiscreteDiscrete { tau1, tau2 } => {
                if !(tau1 >= 0.0) || !tau1.is_finite() {
                    return bad("tau1", tau1, "delay must be nonnegative");
                }
                if !(tau2 >= 0.0) || !tau2.is_finite() {
                    return bad("tau2", tau2, "delay must be nonnegative");
                }
            }
            KernelSpec::DiscreteWeak { tau1, q2 } => {
                if !(tau1 >= 0.0) || !tau1.is_finite() {
                    return bad("tau1", tau1, "delay must be nonnegative");
                }
                if !(q2 > 0.0) || !q2.is_finite() {
                    return bad("q2", q2, "weak-kernel rate must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> KernelFamily {
        match *self {
            KernelSpec::DiscreteDiscrete { .. } => KernelFamily::Discrete,
            KernelSpec::DiscreteWeak { q2, .. } => KernelFamily::Weak { q2 },
        }
    }

    /// The delay the characteristic function depends on: `tau1 + tau2` or `tau1`.
    pub fn bifurcation_delay(&self) -> f64 {
        match *self {
            KernelSpec::DiscreteDiscrete { tau1, tau2 } => tau1 + tau2,
            KernelSpec::DiscreteWeak { tau1, .. } => tau1,
        }
    }
}

/// Kernel configuration with the delay factored out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    Discrete,
    Weak { q2: f64 },
}

impl KernelFamily {
    /// Kernel spec with the full bifurcation delay on the transcription step.
    pub fn with_delay(&self, tau: f64) -> KernelSpec {
        match *self {
            KernelFamily::Discrete => KernelSpec::DiscreteDiscrete { tau1: tau, tau2: 0.0 },
            KernelFamily::Weak { q2 } => KernelSpec::DiscreteWeak { tau1: tau, q2 },
        }
    }
}

fn cubic(lin: &LinearizationCoeffs, l: Complex64) -> Complex64 {
    ((l + lin.p2) * l + lin.p1) * l + lin.p0
}

fn cubic_prime(lin: &LinearizationCoeffs, l: Complex64) -> Complex64 {
    (l * 3.0 + 2.0 * lin.p2) * l + lin.p1
}

/// `D(lambda)` at delay `tau` for the given family.
pub fn delta1_at(l: Complex64, lin: &LinearizationCoeffs, family: KernelFamily, tau: f64) -> Complex64 {
    let e = (-l * tau).exp();
    match family {
        KernelFamily::Discrete => cubic(lin, l) + e * lin.r,
        KernelFamily::Weak { q2 } => (l + q2) * cubic(lin, l) + e * (lin.r * q2),
    }
}

/// `dD/dlambda` at delay `tau`.
pub fn delta1_dlambda(l: Complex64, lin: &LinearizationCoeffs, family: KernelFamily, tau: f64) -> Complex64 {
    let e = (-l * tau).exp();
    match family {
        KernelFamily::Discrete => cubic_prime(lin, l) - e * (lin.r * tau),
        KernelFamily::Weak { q2 } => {
            cubic(lin, l) + (l + q2) * cubic_prime(lin, l) - e * (lin.r * q2 * tau)
        }
    }
}

/// `dD/dtau` at delay `tau`.
pub fn delta1_dtau(l: Complex64, lin: &LinearizationCoeffs, family: KernelFamily, tau: f64) -> Complex64 {
    let e = (-l * tau).exp();
    let gain = match family {
        KernelFamily::Discrete => lin.r,
        KernelFamily::Weak { q2 } => lin.r * q2,
    };
    -l * e * gain
}

pub fn delta1_eval(l: Complex64, lin: &LinearizationCoeffs, kernel: &KernelSpec) -> Complex64 {
    delta1_at(l, lin, kernel.family(), kernel.bifurcation_delay())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCondition {
    pub name: &'static str,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub family: KernelFamily,
    pub conditions: Vec<StabilityCondition>,
    pub zero_delay_roots: Vec<Complex64>,
    pub max_real_part: f64,
    pub stable: bool,
}

/// Zero-delay characteristic polynomial (cubic or quartic).
pub fn zero_delay_poly(lin: &LinearizationCoeffs, family: KernelFamily) -> Poly {
    match family {
        KernelFamily::Discrete => Poly::from_descending(&[1.0, lin.p2, lin.p1, lin.p0 + lin.r]),
        KernelFamily::Weak { q2 } => Poly::from_descending(&[
            1.0,
            lin.p2 + q2,
            lin.p1 + q2 * lin.p2,
            lin.p0 + lin.p1 * q2,
            q2 * (lin.p0 + lin.r),
        ]),
    }
}

/// Routh-Hurwitz test at zero delay, cross-checked against the explicitly
/// solved polynomial.
pub fn stability_zero_delay(lin: &LinearizationCoeffs, family: KernelFamily) -> Result<StabilityReport> {
    let conditions = match family {
        KernelFamily::Discrete => {
            let m = lin.p1 * lin.p2 - (lin.p0 + lin.r);
            vec![StabilityCondition {
                name: "p1p2_gt_p0_plus_r",
                margin: m,
                holds: m > 0.0,
            }]
        }
        KernelFamily::Weak { q2 } => {
            let (p0, p1, p2, r) = (lin.p0, lin.p1, lin.p2, lin.r);
            let d2 = (p2 + q2) * (p1 + q2 * p2) - (p0 + p1 * q2);
            let d3 = (p0 + p1 * q2) * d2 - (p2 + q2).powi(2) * (q2 * p0 + r * q2);
            vec![
                StabilityCondition { name: "D2", margin: d2, holds: d2 > 0.0 },
                StabilityCondition { name: "D3", margin: d3, holds: d3 > 0.0 },
            ]
        }
    };
    let roots = zero_delay_poly(lin, family).complex_roots();
    let max_re = roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let stable = conditions.iter().all(|c| c.holds);
    if max_re.abs() > 1e-9 && stable != (max_re < 0.0) {
        return Err(AnalysisError::Inconsistency(format!(
            "Routh-Hurwitz says stable = {stable} but the rightmost zero-delay root has Re = {max_re:e}"
        )));
    }
    Ok(StabilityReport {
        family,
        conditions,
        zero_delay_roots: roots,
        max_real_part: max_re,
        stable,
    })
}

/// Polynomial in `z = omega^2` whose positive roots are the candidate
/// crossing frequencies squared.
pub fn resolving_poly(lin: &LinearizationCoeffs, family: KernelFamily) -> Poly {
    let (p0, p1, p2, r) = (lin.p0, lin.p1, lin.p2, lin.r);
    match family {
        KernelFamily::Discrete => Poly::from_descending(&[
            1.0,
            p2 * p2 - 2.0 * p1,
            p1 * p1 - 2.0 * p0 * p2,
            p0 * p0 - r * r,
        ]),
        KernelFamily::Weak { q2 } => {
            let n1 = (p2 + q2).powi(2) - 2.0 * (p1 + q2 * p2);
            let n2 = (p1 + q2 * p2).powi(2) + 2.0 * q2 * p0 - 2.0 * (p0 + p1 * q2) * (p2 + q2);
            let n3 = (p0 + p1 * q2).powi(2) - 2.0 * q2 * p0 * (p1 + q2 * p2);
            let n4 = p0 * p0 * q2 * q2 - r * r * q2 * q2;
            Poly::from_descending(&[1.0, n1, n2, n3, n4])
        }
    }
}

/// `(cos(omega tau), sin(omega tau))` required for `i omega` to be a root.
pub fn crossing_cos_sin(lin: &LinearizationCoeffs, family: KernelFamily, omega: f64) -> (f64, f64) {
    let (p0, p1, p2, r) = (lin.p0, lin.p1, lin.p2, lin.r);
    let w = omega;
    match family {
        KernelFamily::Discrete => ((p2 * w * w - p0) / r, (w * p1 - w * w * w) / r),
        KernelFamily::Weak { q2 } => (
            (-w.powi(4) + (p1 + q2 * p2) * w * w - q2 * p0) / (q2 * r),
            (-(p2 + q2) * w.powi(3) + (p0 + p1 * q2) * w) / (q2 * r),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopfPoint {
    pub family: KernelFamily,
    pub omega: f64,
    /// Critical `tau1 + tau2` (two point delays) or `tau1` (weak kernel).
    pub tau_crit: f64,
    /// `dlambda/dtau` at the crossing by the implicit-function theorem.
    pub lambda_prime: Complex64,
    /// `omega^2` of the selected branch.
    pub resolving_root: f64,
    pub positive_roots: Vec<f64>,
    /// `|D(i omega, tau_crit)|`.
    pub residual: f64,
}

impl HopfPoint {
    pub fn lambda1(&self) -> Complex64 {
        Complex64::new(0.0, self.omega)
    }
}

pub const CROSSING_TOL: f64 = 1e-9;

/// Smallest positive delay at which a pair of roots sits on the imaginary axis.
pub fn critical_delay(lin: &LinearizationCoeffs, family: KernelFamily) -> Result<HopfPoint> {
    let poly = resolving_poly(lin, family);
    let roots: Vec<f64> = poly.positive_real_roots().iter().map(|r| r.value).collect();
    if roots.is_empty() {
        return Err(AnalysisError::NoHopf {
            coefficients: poly.coeffs().to_vec(),
        });
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for &z in &roots {
        let omega = z.sqrt();
        let (cs, sn) = crossing_cos_sin(lin, family, omega);
        let mut theta = sn.atan2(cs);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        if theta == 0.0 {
            theta = 2.0 * PI;
        }
        let tau = theta / omega;
        if best.is_none_or(|(_, t, _)| tau < t) {
            best = Some((omega, tau, z));
        }
    }
    let (omega, tau, z) = best.expect("at least one root");
    let l = Complex64::new(0.0, omega);
    let residual = delta1_at(l, lin, family, tau).norm();
    if !(residual < CROSSING_TOL) {
        return Err(AnalysisError::CrossingResidual { omega, tau, residual });
    }
    let lambda_prime = -delta1_dtau(l, lin, family, tau) / delta1_dlambda(l, lin, family, tau);
    Ok(HopfPoint {
        family,
        omega,
        tau_crit: tau,
        lambda_prime,
        resolving_root: z,
        positive_roots: roots,
        residual,
    })
}

/// Newton iteration on `D(., tau)` from `seed`.
pub fn track_root(
    lin: &LinearizationCoeffs,
    family: KernelFamily,
    tau: f64,
    seed: Complex64,
) -> Option<Complex64> {
    let mut l = seed;
    for _ in 0..60 {
        let d = delta1_dlambda(l, lin, family, tau);
        if d.norm() == 0.0 {
            return None;
        }
        let step = delta1_at(l, lin, family, tau) / d;
        l -= step;
        if !l.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + l.norm()) {
            break;
        }
    }
    let scale = 1.0 + l.norm().powi(4) + lin.r;
    (delta1_at(l, lin, family, tau).norm() < 1e-11 * scale).then_some(l)
}

/// A literal transcription of a closed-form `dlambda/dtau` expression and
/// whether its real part has the sign the continuation estimate gives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeVariant {
    pub label: &'static str,
    pub value: Complex64,
    pub sign_matches_continuation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    /// `-(dD/dtau) / (dD/dlambda)` at the crossing.
    pub closed_form: Complex64,
    /// Central difference of the tracked root across `tau_crit +- delta`.
    pub continuation: Complex64,
    pub continuation_step: f64,
    pub variants: Vec<DerivativeVariant>,
}

/// Relative half-width of the continuation stencil.
pub const CONTINUATION_REL_STEP: f64 = 1e-3;

pub fn transversality(lin: &LinearizationCoeffs, hopf: &HopfPoint) -> Result<TransversalityReport> {
    if !(hopf.residual < CROSSING_TOL) {
        return Err(AnalysisError::CrossingResidual {
            omega: hopf.omega,
            tau: hopf.tau_crit,
            residual: hopf.residual,
        });
    }
    let family = hopf.family;
    let (w, tau) = (hopf.omega, hopf.tau_crit);
    let l = hopf.lambda1();
    let closed = -delta1_dtau(l, lin, family, tau) / delta1_dlambda(l, lin, family, tau);
    if closed.re.abs() < 1e-12 {
        return Err(AnalysisError::DegenerateCrossing(closed.re));
    }

    let delta = CONTINUATION_REL_STEP * tau;
    let plus = track_root(lin, family, tau + delta, l);
    let minus = track_root(lin, family, tau - delta, l);
    let (Some(plus), Some(minus)) = (plus, minus) else {
        return Err(AnalysisError::Inconsistency(
            "root continuation across the critical delay did not converge".into(),
        ));
    };
    let cont = (plus - minus) / (2.0 * delta);
    if cont.re.signum() != closed.re.signum() {
        return Err(AnalysisError::Inconsistency(format!(
            "closed-form Re dlambda/dtau = {:e} but continuation gives {:e}",
            closed.re, cont.re
        )));
    }

    let (p0, p1, p2, r) = (lin.p0, lin.p1, lin.p2, lin.r);
    let (cw, sw) = ((w * tau).cos(), (w * tau).sin());
    let mut variants = Vec::new();
    let mut push = |label, value: Complex64| {
        variants.push(DerivativeVariant {
            label,
            value,
            sign_matches_continuation: value.re.signum() == cont.re.signum(),
        })
    };
    match family {
        KernelFamily::Discrete => {
            let e = (l * tau).exp();
            push(
                "-l r / (e^{l tau}(3l^2+2p2 l+p1) - r tau)",
                -(l * r) / (e * cubic_prime(lin, l) - r * tau),
            );
            let l1 = (p1 - 3.0 * w * w) * cw - 2.0 * p2 * w * sw - r * tau;
            let l2 = (p1 - 3.0 * w * w) * sw + 2.0 * p2 * w * cw;
            let den = l1 * l1 + l2 * l2;
            push(
                "omega r (l2 + i l1) / (l1^2 + l2^2)",
                Complex64::new(w * r * l2 / den, w * r * l1 / den),
            );
            push(
                "r / (e^{l tau}(3l^2+2p2 l+p1 - r))",
                Complex64::new(r, 0.0) / (e * (cubic_prime(lin, l) - r)),
            );
        }
        KernelFamily::Weak { q2 } => {
            let e = (l * tau).exp();
            let quartic_prime = ((l * 4.0 + 3.0 * (p2 + q2)) * l + 2.0 * (p1 + q2 * p2)) * l + (p0 + p1 * q2);
            push(
                "l r q2 / (e^{l tau1}(4l^3+...) - r q2 tau1)",
                l * r * q2 / (e * quartic_prime - r * q2 * tau),
            );
            let a = -3.0 * (p2 + q2) * w * w + p0 + p1 * q2;
            let l10 = a * cw + (4.0 * w.powi(3) - 2.0 * (p1 + q2 * p2) * w) * sw - r * tau * q2;
            let l20 = a * sw + (4.0 * w.powi(3) + 2.0 * (p1 + q2 * p2) * w) * cw;
            let den = l10 * l10 + l20 * l20;
            push(
                "omega r q2 (l10 - i l20) / (l10^2 + l20^2)",
                Complex64::new(w * r * q2 * l10 / den, -w * r * q2 * l20 / den),
            );
        }
    }
    Ok(TransversalityReport {
        closed_form: closed,
        continuation: cont,
        continuation_step: delta,
        variants,
    })
}

/// Rectangle in the complex plane scanned for characteristic roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for RootWindow {
    fn default() -> Self {
        RootWindow { re_min: -2.0, re_max: 1.0, im_min: 0.0, im_max: 5.0 }
    }
}

/// Characteristic roots inside `window` found by Newton from a seed grid.
/// Only the upper half-plane is scanned; roots come in conjugate pairs.
pub fn characteristic_roots(
    lin: &LinearizationCoeffs,
    family: KernelFamily,
    tau: f64,
    window: RootWindow,
) -> Vec<Complex64> {
    const NRE: usize = 31;
    const NIM: usize = 51;
    let mut found: Vec<Complex64> = Vec::new();
    let slack = 1e-9;
    for i in 0..NRE {
        let re = window.re_min + (window.re_max - window.re_min) * i as f64 / (NRE - 1) as f64;
        for j in 0..NIM {
            let im = window.im_min + (window.im_max - window.im_min) * j as f64 / (NIM - 1) as f64;
            let Some(mut z) = track_root(lin, family, tau, Complex64::new(re, im)) else {
                continue;
            };
            if z.im < 0.0 {
                z = z.conj();
            }
            let inside = z.re >= window.re_min - slack
                && z.re <= window.re_max + slack
                && z.im >= window.im_min - slack
                && z.im <= window.im_max + slack;
            if inside && !found.iter().any(|f| (f - z).norm() < 1e-7 * (1.0 + z.norm())) {
                found.push(z);
            }
        }
    }
    found.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    found
}

/// Largest real part among the scanned roots.
pub fn rightmost_real_part(
    lin: &LinearizationCoeffs,
    family: KernelFamily,
    tau: f64,
    window: RootWindow,
) -> Option<f64> {
    characteristic_roots(lin, family, tau, window).first().map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linearize, ModelParams, Equilibrium};

    fn synthetic(p0: f64, p1: f64, p2: f64, r: f64) -> LinearizationCoeffs {
        let params = ModelParams::reference_set();
        let eq = Equilibrium::at_state(&params, [3.6, 0.7, 0.3, 3.0]);
        let mut lin = linearize(&params, &eq).unwrap();
        lin.p0 = p0;
        lin.p1 = p1;
        lin.p2 = p2;
        lin.r = r;
        lin
    }

    #[test]
    fn delta_at_zero() {
        let lin = synthetic(0.05, 0.9, 4.5, 0.12);
        let zero = Complex64::new(0.0, 0.0);
        let d = delta1_eval(zero, &lin, &KernelSpec::DiscreteDiscrete { tau1: 3.0, tau2: 7.0 });
        assert!((d - Complex64::new(0.17, 0.0)).norm() < 1e-15);
        let w = delta1_eval(zero, &lin, &KernelSpec::DiscreteWeak { tau1: 3.0, q2: 0.5 });
        assert!((w - Complex64::new(0.5 * 0.17, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pure_cubic_is_unstable() {
        let lin = synthetic(0.1, 0.0, 0.0, 0.2);
        let rep = stability_zero_delay(&lin, KernelFamily::Discrete).unwrap();
        assert!(!rep.stable);
        assert!(rep.max_real_part > 0.0);
    }

    #[test]
    fn degenerate_resolving_cubic_has_no_positive_root() {
        // r = p0, p2^2 = 2 p1, p1^2 = 2 p0 p2  -> z^3
        let p2: f64 = 2.0;
        let p1 = p2 * p2 / 2.0;
        let p0 = p1 * p1 / (2.0 * p2);
        let lin = synthetic(p0, p1, p2, p0);
        let poly = resolving_poly(&lin, KernelFamily::Discrete);
        assert!(poly.coeffs()[..3].iter().all(|c| c.abs() < 1e-15));
        assert!(matches!(
            critical_delay(&lin, KernelFamily::Discrete),
            Err(AnalysisError::NoHopf { .. })
        ));
    }

    #[test]
    fn first_quadrant_angle() {
        // choose omega with p2 w^2 > p0 and p1 > w^2 so both cos and sin are positive
        let lin = synthetic(0.01, 1.0, 2.0, 0.5);
        let hopf = critical_delay(&lin, KernelFamily::Discrete).unwrap();
        let (cs, sn) = crossing_cos_sin(&lin, KernelFamily::Discrete, hopf.omega);
        assert!(cs > 0.0 && sn > 0.0);
        let theta = hopf.omega * hopf.tau_crit;
        assert!(theta > 0.0 && theta < PI / 2.0);
    }

    #[test]
    fn transversality_denominator_at_zero_delay() {
        let lin = synthetic(0.05, 0.9, 4.5, 0.12);
        let l = Complex64::new(0.3, 0.7);
        let d = delta1_dlambda(l, &lin, KernelFamily::Discrete, 0.0);
        assert!((d - (3.0 * l * l + 2.0 * lin.p2 * l + lin.p1)).norm() < 1e-14);
    }
}
