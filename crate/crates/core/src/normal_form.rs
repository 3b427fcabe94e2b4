//! Center-manifold reduction at a Hopf point.
//!
//! The delayed system is written as `u' = A u(t) + sum_k B_k u(t - tau_k) + F(u_t)`
//! with the nonlinearity
//!
//! * `-b12 u2(t) u4(t)` in the P53 protein equation, and
//! * `rho2/2 u2(t-tau1)^2 + rho3/6 u2(t-tau1)^3` in the Mdm2 mRNA equation.
//!
//! The eigenvector `v` of the generator for `lambda1 = i omega` and the adjoint
//! co-vector `w` are paired with the bilinear form
//! `<psi, phi> = conj(psi(0))^T phi(0) - sum_k int conj(psi)(xi + tau_k)^T B_k phi(xi) dxi`,
//! which for exponential profiles reduces to closed sums. With the projection
//! `q = conj(w)^T` normalized so that `<h*, h> = 1`, the reduced flow is
//! `z' = lambda1 z + g20 z^2/2 + g11 z zbar + g02 zbar^2/2 + g21 z^2 zbar/2 + ...`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{AnalysisError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::LinearizationCoeffs;
use crate::spectral::{HopfPoint, KernelFamily};

/// Residual bound for eigenvector, adjoint and pairing checks.
pub const EIGEN_TOL: f64 = 1e-9;

/// Linear part of the delayed system at the Hopf point.
#[derive(Debug, Clone)]
pub struct DelayOperator {
    pub a: CMat,
    /// `(tau_k, B_k)` pairs.
    pub delayed: Vec<(f64, CMat)>,
    /// Lag of the Hill term (where `rho2`, `rho3` act).
    pub hill_lag: f64,
    /// Second lag for two point delays.
    pub tau2: Option<f64>,
}

impl DelayOperator {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn char_matrix(&self, lambda: Complex64) -> CMat {
        linalg::characteristic_matrix(lambda, &self.a, &self.delayed)
    }

    /// Builds the operator for a Hopf point. For two point delays `tau2` is the
    /// translation lag and `tau1 = tau_crit - tau2`; the weak kernel adds the
    /// chain variable as a fifth coordinate.
    pub fn at_hopf(lin: &LinearizationCoeffs, hopf: &HopfPoint, tau2: Option<f64>) -> Result<Self> {
        let p = &lin.params;
        match hopf.family {
            KernelFamily::Discrete => {
                let tau2 = tau2.ok_or_else(|| {
                    AnalysisError::Config("two point delays need the tau2 split".into())
                })?;
                if !(tau2 >= 0.0 && tau2 < hopf.tau_crit) {
                    return Err(AnalysisError::InvalidParameter {
                        name: "tau2",
                        value: tau2,
                        reason: "split must satisfy 0 <= tau2 < tau_crit",
                    });
                }
                Ok(DelayOperator {
                    a: linalg::real_matrix(&lin.mat_a),
                    delayed: vec![
                        (hopf.tau_crit - tau2, linalg::real_matrix(&lin.mat_b1)),
                        (tau2, linalg::real_matrix(&lin.mat_b2)),
                    ],
                    hill_lag: hopf.tau_crit - tau2,
                    tau2: Some(tau2),
                })
            }
            KernelFamily::Weak { q2 } => {
                let mut a = [[0.0; 5]; 5];
                for (row, src) in a.iter_mut().zip(&lin.mat_a) {
                    row[..4].copy_from_slice(src);
                }
                a[3][4] = 1.0;
                a[4][2] = q2;
                a[4][4] = -q2;
                let mut b = [[0.0; 5]; 5];
                b[2][1] = lin.rho;
                let _ = p;
                Ok(DelayOperator {
                    a: linalg::real_matrix(&a),
                    delayed: vec![(hopf.tau_crit, linalg::real_matrix(&b))],
                    hill_lag: hopf.tau_crit,
                    tau2: None,
                })
            }
        }
    }
}

/// `<psi, phi>` for `psi(s) = w e^{psi_exp s}` and `phi(theta) = u e^{phi_exp theta}`.
pub fn bilinear_pairing(
    w: &CVec,
    u: &CVec,
    psi_exp: Complex64,
    phi_exp: Complex64,
    op: &DelayOperator,
) -> Complex64 {
    let wbar: CVec = w.map(|z| z.conj());
    let mut total = wbar.dot(u);
    let s = psi_exp.conj() + phi_exp;
    for (tau, b) in &op.delayed {
        let bu = b * u;
        let coupling = wbar.dot(&bu);
        // -int_0^{-tau} e^{conj(psi)(xi+tau)} e^{phi xi} dxi
        let weight = if s.norm() * tau < 1e-12 {
            c(*tau, 0.0) * (psi_exp.conj() * *tau).exp()
        } else {
            -(psi_exp.conj() * *tau).exp() * ((-s * *tau).exp() - 1.0) / s
        };
        total += coupling * weight;
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda1: Complex64,
    /// `h(theta) = v e^{lambda1 theta}`.
    pub v: Vec<Complex64>,
    /// Normalized adjoint co-vector, `h*(s) = w e^{lambda1 s}`.
    pub w: Vec<Complex64>,
    /// `<w_raw, v>` before normalization; `w = w_raw / conj(eta)`.
    pub eta: Complex64,
    /// The closed-form normalizer printed alongside the adjoint vector, for audit.
    pub eta_printed: Complex64,
    /// `(tau1, tau2)` for two point delays.
    pub tau_split: Option<(f64, f64)>,
    pub v_residual: f64,
    pub w_residual: f64,
    /// Whether the printed closed forms passed the null-vector check or a
    /// direct null-space computation replaced them.
    pub v_closed_form_ok: bool,
    pub w_closed_form_ok: bool,
    pub v_closed_form_residual: f64,
    pub w_closed_form_residual: f64,
    pub pairing_hh: Complex64,
    pub pairing_hhbar: Complex64,
}

impl EigenPair {
    pub fn v_vec(&self) -> CVec {
        CVec::from_vec(self.v.clone())
    }

    pub fn w_vec(&self) -> CVec {
        CVec::from_vec(self.w.clone())
    }
}

fn rel_residual(m: &CMat, x: &CVec) -> f64 {
    linalg::inf_norm(&(m * x)) / linalg::inf_norm(x).max(f64::MIN_POSITIVE)
}

/// Closed-form eigenvector and adjoint co-vector (before normalization) as
/// printed for each kernel family, plus the printed normalizer.
fn closed_forms(lin: &LinearizationCoeffs, hopf: &HopfPoint, op: &DelayOperator) -> (CVec, CVec, CVec) {
    let p = &lin.params;
    let eq = &lin.equilibrium;
    let (c2, d2, a2, b1, b12, y10, rho) = (p.c2, p.d2, p.a2, p.b1, p.b12, eq.y10, lin.rho);
    let l1 = hopf.lambda1();
    let l2 = l1.conj();
    let one = c(1.0, 0.0);
    match hopf.family {
        KernelFamily::Discrete => {
            let tau1 = op.hill_lag;
            let tau2 = op.tau2.unwrap_or(0.0);
            let e = (l2 * tau1).exp();
            let v = CVec::from_vec(vec![
                c(0.0, 0.0),
                -(l1 + d2) * (l1 + c2),
                -(e * rho) * (l1 + d2),
                -(e * rho),
            ]);
            let et2 = (l1 * tau2).exp();
            let w = CVec::from_vec(vec![
                one,
                (a2 + l2) / b1,
                -(et2 * b12 * y10 * (a2 + l2)) / ((c2 + l2) * (d2 + l2) * b1),
                -(et2 * b12 * y10 * (a2 + l2)) / (b1 * (d2 + l2) * (c2 + d2)),
            ]);
            let vb: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
            let eta = (a2 + l2) / b1 * vb[1]
                - (vb[2] - (l1 * tau1).exp() * (rho * tau1) * vb[1]) * et2 * b12 * y10 * (a2 + l2)
                    / ((c2 + l2) * (d2 + l2) * b1)
                - (vb[3] - et2 * tau2 * vb[2]) * b12 * y10 * (a2 + l2) / (b1 * (d2 + l2));
            (v, w, CVec::from_vec(vec![eta]))
        }
        KernelFamily::Weak { q2 } => {
            let tau1 = hopf.tau_crit;
            let v = CVec::from_vec(vec![
                c(0.0, 0.0),
                (l1 + q2) * (l1 + c2) * (l1 * tau1).exp() / rho,
                l1 + q2,
                c(q2, 0.0) / (l1 + d2),
                c(q2, 0.0),
            ]);
            let k = b12 * y10;
            let w = CVec::from_vec(vec![
                c(b1, 0.0) / (l2 + a2),
                one,
                -(q2 * k) / ((c2 + l2) * (d2 + l2) * (q2 + l2)),
                -k / (d2 + l2),
                -k / ((d2 + l2) * (q2 + l2)),
            ]);
            let vb: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
            let et = (l1 * tau1).exp();
            let eta = vb[1] - q2 * k / ((c2 + l2) * (d2 + l2) * (q2 + l2)) * vb[2]
                - k / (d2 + l2) * vb[3]
                - k / ((d2 + l2) * (q2 + l2)) * vb[4]
                - (rho * q2 * k) / ((c2 + l2) * (d2 + l2) * (q2 + l2) * l2 * l2)
                    * (et - et * l2 * tau1 - 1.0)
                    * vb[1];
            (v, w, CVec::from_vec(vec![eta]))
        }
    }
}

/// Eigenvector of the generator at `i omega` and the normalized adjoint
/// co-vector. `tau2` is the translation lag for two point delays and is
/// ignored for the weak kernel.
pub fn eigen_pair(lin: &LinearizationCoeffs, hopf: &HopfPoint, tau2: Option<f64>) -> Result<EigenPair> {
    let op = DelayOperator::at_hopf(lin, hopf, tau2)?;
    eigen_pair_with(lin, hopf, &op)
}

pub fn eigen_pair_with(lin: &LinearizationCoeffs, hopf: &HopfPoint, op: &DelayOperator) -> Result<EigenPair> {
    let l1 = hopf.lambda1();
    let m = op.char_matrix(l1);
    let m_adj = m.adjoint();
    let (v_cf, w_cf, eta_cf) = closed_forms(lin, hopf, op);

    let v_cf_res = rel_residual(&m, &v_cf);
    let v_ok = v_cf_res < EIGEN_TOL;
    let v = if v_ok {
        v_cf.clone()
    } else {
        // keep the closed form's scale through its P53-protein component
        let (n, _) = linalg::null_vector(&m);
        let scale = v_cf[1] / n[1];
        n * scale
    };
    let w_cf_res = rel_residual(&m_adj, &w_cf);
    let w_ok = w_cf_res < EIGEN_TOL;
    let w_raw = if w_ok {
        w_cf.clone()
    } else {
        let (n, _) = linalg::null_vector(&m_adj);
        let scale = w_cf[1] / n[1];
        n * scale
    };

    let v_res = rel_residual(&m, &v);
    let w_res = rel_residual(&m_adj, &w_raw);
    if v_res > EIGEN_TOL || w_res > EIGEN_TOL {
        return Err(AnalysisError::Inconsistency(format!(
            "null vectors at i omega not resolved: |Mv| = {v_res:e}, |M^H w| = {w_res:e}"
        )));
    }

    let eta = bilinear_pairing(&w_raw, &v, l1, l1, op);
    if eta.norm() == 0.0 {
        return Err(AnalysisError::Resonance("eigenvector and adjoint are orthogonal".into()));
    }
    let w = &w_raw / eta.conj();
    let pairing_hh = bilinear_pairing(&w, &v, l1, l1, op);
    let vbar = v.map(|z| z.conj());
    let pairing_hhbar = bilinear_pairing(&w, &vbar, l1, l1.conj(), op);
    if (pairing_hh - 1.0).norm() > EIGEN_TOL || pairing_hhbar.norm() > EIGEN_TOL {
        return Err(AnalysisError::Inconsistency(format!(
            "pairing not orthonormal: <h*,h> = {pairing_hh}, <h*,hbar> = {pairing_hhbar}"
        )));
    }

    Ok(EigenPair {
        lambda1: l1,
        v: v.iter().copied().collect(),
        w: w.iter().copied().collect(),
        eta,
        eta_printed: eta_cf[0],
        tau_split: op.tau2.map(|t2| (op.hill_lag, t2)),
        v_residual: v_res,
        w_residual: w_res,
        v_closed_form_ok: v_ok,
        w_closed_form_ok: w_ok,
        v_closed_form_residual: v_cf_res,
        w_closed_form_residual: w_cf_res,
        pairing_hh,
        pairing_hhbar,
    })
}

/// Values of a history profile at the two points the nonlinearity reads:
/// `theta = 0` and `theta = -hill_lag`.
#[derive(Debug, Clone)]
struct Profile {
    at0: CVec,
    at_lag: CVec,
}

impl Profile {
    fn exponential(v: &CVec, exponent: Complex64, lag: f64) -> Self {
        Profile {
            at0: v.clone(),
            at_lag: v * (-exponent * lag).exp(),
        }
    }
}

/// Model nonlinearity coefficients.
#[derive(Debug, Clone, Copy)]
struct Nonlinearity {
    b12: f64,
    rho2: f64,
    rho3: f64,
    dim: usize,
}

impl Nonlinearity {
    /// Symmetric bilinear form with `F_quad(u) = Q(u, u) / 2`.
    fn quad(&self, x: &Profile, y: &Profile) -> CVec {
        let mut out = CVec::zeros(self.dim);
        out[1] = -(x.at0[1] * y.at0[3] + y.at0[1] * x.at0[3]) * self.b12;
        out[2] = x.at_lag[1] * y.at_lag[1] * self.rho2;
        out
    }

    /// Symmetric trilinear form with `F_cubic(u) = C(u, u, u) / 6`.
    fn cubic(&self, x: &Profile, y: &Profile, z: &Profile) -> CVec {
        let mut out = CVec::zeros(self.dim);
        out[2] = x.at_lag[1] * y.at_lag[1] * z.at_lag[1] * self.rho3;
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GCoefficients {
    pub g20: Complex64,
    pub g11: Complex64,
    pub g02: Complex64,
    /// Cubic coefficient from the center-manifold substitution.
    pub g21: Complex64,
    /// The printed closed-form expression for g21 evaluated on the same
    /// center-manifold data, kept for audit.
    pub g21_printed: Complex64,
    pub e1: Vec<Complex64>,
    pub e2: Vec<Complex64>,
    pub w20_at0: Vec<Complex64>,
    pub w20_at_lag: Vec<Complex64>,
    pub w11_at0: Vec<Complex64>,
    pub w11_at_lag: Vec<Complex64>,
    /// Residuals of the printed component relations between E1/E2 entries.
    pub e_relations: Vec<(String, f64)>,
}

impl GCoefficients {
    pub fn zero() -> Self {
        let z = c(0.0, 0.0);
        GCoefficients {
            g20: z,
            g11: z,
            g02: z,
            g21: z,
            g21_printed: z,
            e1: vec![],
            e2: vec![],
            w20_at0: vec![],
            w20_at_lag: vec![],
            w11_at0: vec![],
            w11_at_lag: vec![],
            e_relations: vec![],
        }
    }
}

const RESONANCE_RCOND: f64 = 1e-13;

pub fn g_coefficients(pair: &EigenPair, lin: &LinearizationCoeffs, hopf: &HopfPoint) -> Result<GCoefficients> {
    let op = DelayOperator::at_hopf(lin, hopf, pair.tau_split.map(|(_, t2)| t2))?;
    g_coefficients_with(pair, lin, hopf, &op)
}

fn g_coefficients_with(
    pair: &EigenPair,
    lin: &LinearizationCoeffs,
    hopf: &HopfPoint,
    op: &DelayOperator,
) -> Result<GCoefficients> {
    let dim = op.dim();
    let nl = Nonlinearity {
        b12: lin.params.b12,
        rho2: lin.rho2,
        rho3: lin.rho3,
        dim,
    };
    let omega = hopf.omega;
    let l1 = pair.lambda1;
    let lag = op.hill_lag;
    let v = pair.v_vec();
    let vbar = v.map(|z| z.conj());
    let q = pair.w_vec().map(|z| z.conj());
    let h = Profile::exponential(&v, l1, lag);
    let hbar = Profile::exponential(&vbar, l1.conj(), lag);

    let q20 = nl.quad(&h, &h);
    let q11 = nl.quad(&h, &hbar);
    let q02 = nl.quad(&hbar, &hbar);
    let g20 = q.dot(&q20);
    let g11 = q.dot(&q11);
    let g02 = q.dot(&q02);

    let m2 = op.char_matrix(l1 * 2.0);
    let m0 = op.char_matrix(c(0.0, 0.0));
    for (m, what) in [(&m2, "2 i omega"), (&m0, "0")] {
        if linalg::rcond(m) < RESONANCE_RCOND {
            return Err(AnalysisError::Resonance(format!(
                "characteristic matrix singular at lambda = {what}"
            )));
        }
    }
    let e1 = linalg::solve(&m2, &q20)
        .ok_or_else(|| AnalysisError::Resonance("singular solve at 2 i omega".into()))?;
    let e2 = linalg::solve(&m0, &q11)
        .ok_or_else(|| AnalysisError::Resonance("singular solve at 0".into()))?;

    let i = c(0.0, 1.0);
    let w20 = |theta: f64| -> CVec {
        &v * (i * g20 / omega * (l1 * theta).exp())
            + &vbar * (i * g02.conj() / (3.0 * omega) * (-l1 * theta).exp())
            + &e1 * (l1 * 2.0 * theta).exp()
    };
    let w11 = |theta: f64| -> CVec {
        &v * (-i * g11 / omega * (l1 * theta).exp())
            + &vbar * (i * g11.conj() / omega * (-l1 * theta).exp())
            + &e2
    };
    let w20p = Profile { at0: w20(0.0), at_lag: w20(-lag) };
    let w11p = Profile { at0: w11(0.0), at_lag: w11(-lag) };

    let cubic_terms = nl.quad(&h, &w11p) * c(2.0, 0.0) + nl.quad(&hbar, &w20p) + nl.cubic(&h, &h, &hbar);
    let g21 = q.dot(&cubic_terms);

    let (b12, rho2, rho3) = (nl.b12, nl.rho2, nl.rho3);
    let l2 = l1.conj();
    let g21_printed = -(vbar[1] * w20p.at0[3] + v[1] * w11p.at0[3] * 2.0 + vbar[3] * w20p.at0[1]
        + w11p.at0[1] * v[3] * 2.0)
        * (3.0 * b12)
        * q[1]
        + q[2]
            * ((v[1] * (l2 * lag).exp() * 2.0 - w11p.at_lag[1]
                + vbar[1] * (l1 * lag).exp() * w20p.at_lag[1] * 6.0)
                * (6.0 * rho2)
                + v[1] * v[1] * (l2 * 2.0 * lag).exp() * vbar[1] * (l1 * lag).exp() * (3.0 * rho3));

    let e_relations = e_relations(lin, hopf, op, &e1, &e2);

    Ok(GCoefficients {
        g20,
        g11,
        g02,
        g21,
        g21_printed,
        e1: e1.iter().copied().collect(),
        e2: e2.iter().copied().collect(),
        w20_at0: w20p.at0.iter().copied().collect(),
        w20_at_lag: w20p.at_lag.iter().copied().collect(),
        w11_at0: w11p.at0.iter().copied().collect(),
        w11_at_lag: w11p.at_lag.iter().copied().collect(),
        e_relations,
    })
}

fn e_relations(lin: &LinearizationCoeffs, hopf: &HopfPoint, op: &DelayOperator, e1: &CVec, e2: &CVec) -> Vec<(String, f64)> {
    let l1 = hopf.lambda1();
    let d2 = lin.params.d2;
    let scale1 = linalg::inf_norm(e1).max(f64::MIN_POSITIVE);
    let scale2 = linalg::inf_norm(e2).max(f64::MIN_POSITIVE);
    let mut out = vec![
        ("E11 = 0".to_string(), e1[0].norm() / scale1),
        ("E12 = 0".to_string(), e2[0].norm() / scale2),
    ];
    match hopf.family {
        KernelFamily::Discrete => {
            let tau2 = op.tau2.unwrap_or(0.0);
            let rhs = (l1 * 2.0 + d2) * (l1 * 2.0 * tau2).exp() * e1[3];
            out.push(("E31 = (2 l1 + d2) e^{-2 l2 tau2} E41".into(), (e1[2] - rhs).norm() / scale1));
            out.push(("E32 = d2 E42".into(), (e2[2] - e2[3] * d2).norm() / scale2));
        }
        KernelFamily::Weak { q2 } => {
            out.push((
                "E31 = (q2 + 2 l1)/q2 E51".into(),
                (e1[2] - (l1 * 2.0 + q2) / q2 * e1[4]).norm() / scale1,
            ));
            out.push((
                "E41 = E51/(d2 + 2 l1)".into(),
                (e1[3] - e1[4] / (l1 * 2.0 + d2)).norm() / scale1,
            ));
            out.push(("E32 = E52".into(), (e2[2] - e2[4]).norm() / scale2));
            out.push(("E42 = E52/d2".into(), (e2[3] - e2[4] / d2).norm() / scale2));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Supercritical,
    Subcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodTrend {
    Increasing,
    Decreasing,
}

/// Outcome of checking the classification against direct simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimAgreement {
    Agrees,
    Disagrees,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalFormSummary {
    pub omega: f64,
    pub c1: Complex64,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
    pub lambda_prime0: Complex64,
    pub direction: Direction,
    pub orbit_stability: OrbitStability,
    pub period_trend: PeriodTrend,
    /// `C1(0)` vanishes; the cubic truncation does not decide the branch.
    pub degenerate: bool,
    /// Same quantities with the printed g21 substituted.
    pub c1_printed_g21: Complex64,
    pub mu2_printed_g21: f64,
    pub beta2_printed_g21: f64,
    pub t2_printed_g21: f64,
    pub sim_agreement: Option<SimAgreement>,
    pub g: GCoefficients,
}

/// `(C1, mu2, beta2, T2)` from the g-coefficients and `lambda'(tau_crit)`.
pub fn lyapunov_quantities(
    g20: Complex64,
    g11: Complex64,
    g02: Complex64,
    g21: Complex64,
    omega: f64,
    lambda_prime: Complex64,
) -> (Complex64, f64, f64, f64) {
    let i = c(0.0, 1.0);
    let c1 = i / (2.0 * omega) * (g20 * g11 - 2.0 * g11.norm_sqr() - g02.norm_sqr() / 3.0) + g21 / 2.0;
    let mu2 = if c1.re == 0.0 { 0.0 } else { -c1.re / lambda_prime.re };
    let beta2 = 2.0 * c1.re;
    let t2 = -(c1.im + mu2 * lambda_prime.im) / omega;
    (c1, mu2, beta2, t2)
}

pub fn hopf_summary(g: &GCoefficients, hopf: &HopfPoint, _lin: &LinearizationCoeffs) -> Result<NormalFormSummary> {
    if hopf.lambda_prime.re == 0.0 {
        return Err(AnalysisError::DegenerateCrossing(0.0));
    }
    let lp = hopf.lambda_prime;
    let (c1, mu2, beta2, t2) = lyapunov_quantities(g.g20, g.g11, g.g02, g.g21, hopf.omega, lp);
    let (c1p, mu2p, beta2p, t2p) = lyapunov_quantities(g.g20, g.g11, g.g02, g.g21_printed, hopf.omega, lp);
    Ok(NormalFormSummary {
        omega: hopf.omega,
        c1,
        mu2,
        beta2,
        t2,
        lambda_prime0: lp,
        direction: if mu2 > 0.0 { Direction::Supercritical } else { Direction::Subcritical },
        orbit_stability: if beta2 < 0.0 { OrbitStability::Stable } else { OrbitStability::Unstable },
        period_trend: if t2 > 0.0 { PeriodTrend::Increasing } else { PeriodTrend::Decreasing },
        degenerate: c1 == c(0.0, 0.0),
        c1_printed_g21: c1p,
        mu2_printed_g21: mu2p,
        beta2_printed_g21: beta2p,
        t2_printed_g21: t2p,
        sim_agreement: None,
        g: g.clone(),
    })
}

/// Everything the reduction produces for one Hopf point.
#[derive(Debug, Clone, Serialize)]
pub struct NormalFormAnalysis {
    pub pair: EigenPair,
    pub summary: NormalFormSummary,
}

impl NormalFormAnalysis {
    /// Leading-order amplitude (half peak-to-peak) of state component `k` on
    /// the bifurcating orbit at delay offset `dtau = tau - tau_crit`:
    /// `2 |v_k| sqrt(dtau / mu2)`. `None` on the side without orbits.
    pub fn predicted_amplitude(&self, k: usize, dtau: f64) -> Option<f64> {
        let eps2 = dtau / self.summary.mu2;
        (eps2 > 0.0).then(|| 2.0 * self.pair.v[k].norm() * eps2.sqrt())
    }

    /// Predicted slope of amplitude^2 against `tau` for component `k`.
    pub fn amplitude_sq_slope(&self, k: usize) -> f64 {
        4.0 * self.pair.v[k].norm_sqr() / self.summary.mu2
    }
}

/// Eigen pair, g-coefficients and summary in one call.
pub fn analyze(lin: &LinearizationCoeffs, hopf: &HopfPoint, tau2: Option<f64>) -> Result<NormalFormAnalysis> {
    let op = DelayOperator::at_hopf(lin, hopf, tau2)?;
    let pair = eigen_pair_with(lin, hopf, &op)?;
    let g = g_coefficients_with(&pair, lin, hopf, &op)?;
    let summary = hopf_summary(&g, hopf, lin)?;
    Ok(NormalFormAnalysis { pair, summary })
}
