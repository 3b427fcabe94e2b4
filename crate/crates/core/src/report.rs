//! JSON output and the end-to-end check against the published worked example.
//!
//! The worked example runs on two tracks. The published steady state does
//! not satisfy the steady-state equations, so linearizing there is the only
//! way to reproduce the published crossing data; simulation, however, can
//! only arbitrate at a true equilibrium. Rows therefore compare the published
//! numbers with the published-state track, and the solved-equilibrium track is
//! reported alongside with the simulation evidence.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::model::{linearize, solve_equilibrium, Equilibrium, LinearizationCoeffs, ModelParams};
use crate::normal_form::{self, Direction, NormalFormAnalysis, OrbitStability, PeriodTrend, SimAgreement};
use crate::sim::{amplitude_scaling_fit, orbit_arbiter, ArbiterOutcome, ScalingFit, SimOptions};
use crate::spectral::{
    critical_delay, crossing_cos_sin, delta1_at, transversality, HopfPoint, KernelFamily, TransversalityReport,
};

/// Pretty JSON with every float written to 17 significant digits.
struct SciFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Deterministic JSON: struct field order, 17-digit floats, trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = SciFormatter {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).expect("serializing to memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// The published steady state `(x10, y10, x20, y20)`.
pub const PUBLISHED_STATE: [f64; 4] = [3.636363636, 0.8347719895, 0.2370744013, 2.370744013];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PublishedClaims {
    pub direction: Direction,
    /// Side of the critical delay where orbits are claimed to exist.
    pub orbits_above: bool,
    pub orbit_stability: OrbitStability,
    pub period_trend: PeriodTrend,
}

/// Published crossing and normal-form values for one kernel configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PublishedCase {
    pub name: &'static str,
    pub family: KernelFamily,
    /// Translation lag used to split the two point delays.
    pub tau2: Option<f64>,
    pub omega: f64,
    pub tau_crit: f64,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
    pub claims: PublishedClaims,
}

pub const PUBLISHED_DISCRETE: PublishedCase = PublishedCase {
    name: "discrete",
    family: KernelFamily::Discrete,
    tau2: Some(3.0),
    omega: 0.1324013896,
    tau_crit: 9.541873607,
    mu2: -0.4204703301,
    beta2: 0.2799153884,
    t2: 0.0005051758260,
    claims: PublishedClaims {
        direction: Direction::Subcritical,
        orbits_above: true,
        orbit_stability: OrbitStability::Unstable,
        period_trend: PeriodTrend::Increasing,
    },
};

pub const PUBLISHED_WEAK: PublishedCase = PublishedCase {
    name: "weak",
    family: KernelFamily::Weak { q2: 0.5 },
    tau2: None,
    omega: 0.1290621026,
    tau_crit: 32.37014890,
    mu2: -0.5993860816,
    beta2: -0.7476750590,
    t2: 0.1798944390,
    claims: PublishedClaims {
        direction: Direction::Subcritical,
        orbits_above: true,
        orbit_stability: OrbitStability::Stable,
        period_trend: PeriodTrend::Increasing,
    },
};

pub const EQUILIBRIUM_TOL: f64 = 1e-6;
pub const CROSSING_REL_TOL: f64 = 1e-4;
pub const NORMAL_FORM_REL_TOL: f64 = 0.10;
pub const CROSSING_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    /// Outside tolerance while simulation confirms the computed
    /// classification.
    Flagged,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub published: f64,
    pub computed: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub status: RowStatus,
    pub note: Option<String>,
}

impl ReportRow {
    fn compare(name: impl Into<String>, published: f64, computed: f64, tolerance: f64) -> Self {
        let abs_diff = (computed - published).abs();
        let rel_diff = abs_diff / published.abs();
        ReportRow {
            name: name.into(),
            published,
            computed,
            abs_diff,
            rel_diff,
            tolerance,
            status: if rel_diff <= tolerance { RowStatus::Pass } else { RowStatus::Fail },
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

/// Crossing, transversality and normal form at one linearization.
#[derive(Debug, Clone, Serialize)]
pub struct CaseAnalysis {
    pub hopf: HopfPoint,
    pub transversality: TransversalityReport,
    pub normal_form: NormalFormAnalysis,
}

pub fn analyze_case(lin: &LinearizationCoeffs, family: KernelFamily, tau2: Option<f64>) -> Result<CaseAnalysis> {
    let hopf = critical_delay(lin, family)?;
    let transversality = transversality(lin, &hopf)?;
    let normal_form = normal_form::analyze(lin, &hopf, tau2)?;
    Ok(CaseAnalysis { hopf, transversality, normal_form })
}

/// Simulation evidence at the solved equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationEvidence {
    pub arbiter: ArbiterOutcome,
    pub scaling: ScalingFit,
    /// `4 |v2|^2 / mu2`, the leading-order slope of amplitude^2 against tau.
    pub predicted_slope: f64,
    /// `|tau_hat - tau_crit| / tau_crit`.
    pub onset_rel_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArbitratedCase {
    pub analysis: CaseAnalysis,
    pub evidence: SimulationEvidence,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub published: PublishedClaims,
    pub published_state: (Direction, OrbitStability, PeriodTrend),
    pub solved_equilibrium: (Direction, OrbitStability, PeriodTrend),
    pub arbiter_agreement: SimAgreement,
}

#[derive(Debug, Clone, Serialize)]
pub struct PublishedStateTrack {
    pub state: Equilibrium,
    pub discrete: CaseAnalysis,
    pub weak: CaseAnalysis,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolvedTrack {
    pub equilibrium: Equilibrium,
    pub discrete: ArbitratedCase,
    pub weak: ArbitratedCase,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StatusCounts {
    pub pass: usize,
    pub fail: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub params: ModelParams,
    pub overall: RowStatus,
    pub counts: StatusCounts,
    pub rows: Vec<ReportRow>,
    pub classification: Vec<(String, Classification)>,
    pub published_state: PublishedStateTrack,
    pub solved: SolvedTrack,
}

/// Step used by the simulation arbiter.
pub const ARBITER_STEP: f64 = 0.02;
/// Delay multiples of the critical delay used for the onset fit.
pub const SCALING_GRID: [f64; 7] = [0.96, 0.98, 1.02, 1.04, 1.06, 1.08, 1.10];

fn simulation_evidence(
    params: &ModelParams,
    case: &CaseAnalysis,
    tau2: Option<f64>,
) -> Result<SimulationEvidence> {
    let hopf = &case.hopf;
    let nf = &case.normal_form;
    let tau2 = tau2.unwrap_or(0.0);
    let arbiter = orbit_arbiter(params, hopf, nf, tau2, ARBITER_STEP)?;
    let taus: Vec<f64> = SCALING_GRID.iter().map(|f| f * hopf.tau_crit).collect();
    let rate = (hopf.lambda_prime.re * 0.02 * hopf.tau_crit).abs().max(1e-6);
    let period = 2.0 * std::f64::consts::PI / hopf.omega;
    let opts = SimOptions {
        horizon: (4.0 / rate).max(40.0 * period),
        step: 0.05,
    };
    let start = nf.predicted_amplitude(1, 0.02 * hopf.tau_crit * nf.summary.mu2.signum()).unwrap_or(0.05);
    let scaling = amplitude_scaling_fit(params, hopf.family, &taus, tau2, start, &opts)?;
    let onset_rel_error = scaling.tau_hat.map(|t| (t - hopf.tau_crit).abs() / hopf.tau_crit);
    Ok(SimulationEvidence {
        arbiter,
        scaling,
        predicted_slope: nf.amplitude_sq_slope(1),
        onset_rel_error,
    })
}

fn triple(nf: &NormalFormAnalysis) -> (Direction, OrbitStability, PeriodTrend) {
    (nf.summary.direction, nf.summary.orbit_stability, nf.summary.period_trend)
}

/// Principal angle of the crossing, in `[0, 2 pi)`.
fn crossing_angle(lin: &LinearizationCoeffs, family: KernelFamily, omega: f64) -> f64 {
    let (cs, sn) = crossing_cos_sin(lin, family, omega);
    sn.atan2(cs).rem_euclid(2.0 * std::f64::consts::PI)
}

fn case_rows(
    published: &PublishedCase,
    lin: &LinearizationCoeffs,
    at_state: &CaseAnalysis,
    arbiter: &ArbiterOutcome,
) -> Vec<ReportRow> {
    let hopf = &at_state.hopf;
    let prefix = published.name;
    let mut rows = Vec::new();

    let resid_ok = hopf.residual < CROSSING_RESIDUAL_TOL;
    let mut omega_row = ReportRow::compare(format!("{prefix}.omega"), published.omega, hopf.omega, CROSSING_REL_TOL)
        .with_note(format!(
            "linearized at the published steady state; |D(i omega, tau)| = {:.3e}",
            hopf.residual
        ));
    let mut tau_row = ReportRow::compare(
        format!("{prefix}.tau_crit"),
        published.tau_crit,
        hopf.tau_crit,
        CROSSING_REL_TOL,
    );
    if !resid_ok {
        omega_row.status = RowStatus::Fail;
        tau_row.status = RowStatus::Fail;
    }
    if tau_row.status == RowStatus::Fail {
        let theta = crossing_angle(lin, published.family, hopf.omega);
        let shifted = (theta + std::f64::consts::PI) / hopf.omega;
        let resid = delta1_at(hopf.lambda1(), lin, published.family, published.tau_crit).norm();
        tau_row = tau_row.with_note(format!(
            "published delay is not a root: |D(i omega, published)| = {resid:.3e}; \
             it equals (theta + pi)/omega = {shifted:.10} to relative {:.1e}",
            (shifted - published.tau_crit).abs() / published.tau_crit
        ));
    } else {
        tau_row = tau_row.with_note(format!("|D(i omega, tau)| = {:.3e}", hopf.residual));
    }
    rows.push(omega_row);
    rows.push(tau_row);

    let s = &at_state.normal_form.summary;
    for (field, pubv, comp) in [
        ("mu2", published.mu2, s.mu2),
        ("beta2", published.beta2, s.beta2),
        ("t2", published.t2, s.t2),
    ] {
        let mut row = ReportRow::compare(format!("{prefix}.{field}"), pubv, comp, NORMAL_FORM_REL_TOL);
        if row.status == RowStatus::Fail && arbiter.agreement == SimAgreement::Agrees {
            row.status = RowStatus::Flagged;
        }
        let sign = if pubv.signum() == comp.signum() { "same sign" } else { "opposite sign" };
        row = row.with_note(format!(
            "{sign}; eigenvector scaled to the closed-form P53-protein entry; \
             simulation arbiter: {:?} orbit, {:?} with the computed classification",
            arbiter.verdict, arbiter.agreement
        ));
        rows.push(row);
    }
    rows
}

/// Runs both published configurations end to end.
pub fn verify_published() -> Result<VerificationReport> {
    let params = ModelParams::reference_set();
    let solved = solve_equilibrium(&params)?;
    let eq = *solved.principal();
    let lin_eq = linearize(&params, &eq)?;
    let published_state = Equilibrium::at_state(&params, PUBLISHED_STATE);
    let lin_pub = linearize(&params, &published_state)?;

    let mut rows = Vec::with_capacity(14);
    let computed = eq.state();
    for (i, name) in ["x10", "y10", "x20", "y20"].iter().enumerate() {
        let mut row = ReportRow::compare(*name, PUBLISHED_STATE[i], computed[i], EQUILIBRIUM_TOL);
        if row.status == RowStatus::Fail {
            row = row.with_note(format!(
                "published steady state leaves a steady-state residual of {:.3e}; {} admissible equilibrium found",
                published_state.residual,
                solved.roots.len()
            ));
        }
        rows.push(row);
    }

    let mut classification = Vec::new();
    let mut tracks = Vec::new();
    for published in [PUBLISHED_DISCRETE, PUBLISHED_WEAK] {
        let at_state = analyze_case(&lin_pub, published.family, published.tau2)?;
        let at_eq = analyze_case(&lin_eq, published.family, published.tau2)?;
        let evidence = simulation_evidence(&params, &at_eq, published.tau2)?;
        rows.extend(case_rows(&published, &lin_pub, &at_state, &evidence.arbiter));
        classification.push((
            published.name.to_string(),
            Classification {
                published: published.claims,
                published_state: triple(&at_state.normal_form),
                solved_equilibrium: triple(&at_eq.normal_form),
                arbiter_agreement: evidence.arbiter.agreement,
            },
        ));
        tracks.push((at_state, ArbitratedCase { analysis: at_eq, evidence }));
    }

    let counts = StatusCounts {
        pass: rows.iter().filter(|r| r.status == RowStatus::Pass).count(),
        fail: rows.iter().filter(|r| r.status == RowStatus::Fail).count(),
        flagged: rows.iter().filter(|r| r.status == RowStatus::Flagged).count(),
    };
    let overall = if counts.fail > 0 {
        RowStatus::Fail
    } else if counts.flagged > 0 {
        RowStatus::Flagged
    } else {
        RowStatus::Pass
    };
    let (weak_pub, weak_eq) = tracks.pop().expect("two cases");
    let (disc_pub, disc_eq) = tracks.pop().expect("two cases");
    Ok(VerificationReport {
        params,
        overall,
        counts,
        rows,
        classification,
        published_state: PublishedStateTrack {
            state: published_state,
            discrete: disc_pub,
            weak: weak_pub,
        },
        solved: SolvedTrack {
            equilibrium: eq,
            discrete: disc_eq,
            weak: weak_eq,
        },
    })
}

/// Human-readable table of the report rows.
pub fn render_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>18} {:>18} {:>10} {:>8}  {}\n",
        "quantity", "published", "computed", "rel diff", "tol", "status"
    ));
    for r in &report.rows {
        out.push_str(&format!(
            "{:<16} {:>18.10e} {:>18.10e} {:>10.2e} {:>8.0e}  {:?}\n",
            r.name, r.published, r.computed, r.rel_diff, r.tolerance, r.status
        ));
    }
    out.push_str(&format!(
        "overall: {:?} ({} pass, {} fail, {} flagged)\n",
        report.overall, report.counts.pass, report.counts.fail, report.counts.flagged
    ));
    for (name, c) in &report.classification {
        out.push_str(&format!(
            "{name}: published {:?}/{:?}, computed {:?}/{:?}, simulation {:?}\n",
            c.published.direction,
            c.published.orbit_stability,
            c.solved_equilibrium.0,
            c.solved_equilibrium.1,
            c.arbiter_agreement
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        b: f64,
        a: Vec<f64>,
        c: Option<f64>,
    }

    #[test]
    fn floats_have_seventeen_digits_and_fields_keep_order() {
        let s = to_json_string(&Sample { b: 0.1, a: vec![1.0, -2.5e-300], c: None });
        assert!(s.contains("\"b\": 1.0000000000000001e-1"));
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.find("\"b\"").unwrap() < s.find("\"a\"").unwrap());
        assert!(s.contains("\"c\": null"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["b"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn non_finite_values_become_null() {
        let s = to_json_string(&vec![f64::NAN, f64::INFINITY]);
        assert_eq!(s.matches("null").count(), 2);
    }
}
