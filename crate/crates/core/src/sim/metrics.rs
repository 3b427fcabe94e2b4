//! Peak-based oscillation measurements and the simulation checks built on
//! them.

use serde::Serialize;

use super::{simulate, HistorySpec, SimOptions, Trajectory};
use crate::error::Result;
use crate::model::ModelParams;
use crate::normal_form::{NormalFormAnalysis, OrbitStability, SimAgreement};
use crate::spectral::{HopfPoint, KernelFamily, KernelSpec};

/// Per-period amplitude ratio below which an oscillation counts as decaying.
pub const DECAY_RATIO: f64 = 0.995;
/// Per-period amplitude ratio above which an oscillation counts as growing.
pub const GROWTH_RATIO: f64 = 1.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeTrend {
    Decaying,
    Sustained,
    Growing,
    NoOscillation,
}

impl AmplitudeTrend {
    pub fn is_oscillating(self) -> bool {
        matches!(self, AmplitudeTrend::Sustained | AmplitudeTrend::Growing)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationMetrics {
    pub component: usize,
    pub transient_fraction: f64,
    pub baseline: f64,
    pub peak_times: Vec<f64>,
    pub peak_values: Vec<f64>,
    pub period_estimate: Option<f64>,
    /// Geometric mean of successive peak-height ratios about the baseline.
    pub amplitude_ratio: Option<f64>,
    pub amplitude_trend: AmplitudeTrend,
}

/// Metrics of one component of a trajectory, measured about the trajectory's
/// equilibrium when it has one.
pub fn oscillation_metrics(traj: &Trajectory, component: usize, transient_fraction: f64) -> OscillationMetrics {
    let values = traj.component(component);
    let baseline = traj.reference_state.filter(|_| component < 4).map(|s| s[component]);
    metrics_from_samples(&traj.times, &values, baseline, component, transient_fraction)
}

/// Metrics of a sampled signal; `baseline = None` measures about the mean of
/// the retained window.
pub fn metrics_from_samples(
    times: &[f64],
    values: &[f64],
    baseline: Option<f64>,
    component: usize,
    transient_fraction: f64,
) -> OscillationMetrics {
    let start = ((times.len() as f64) * transient_fraction.clamp(0.0, 1.0)) as usize;
    let (ts, vs) = (&times[start..], &values[start..]);
    let baseline = baseline.unwrap_or_else(|| vs.iter().sum::<f64>() / vs.len().max(1) as f64);

    let mut peak_times = Vec::new();
    let mut peak_values = Vec::new();
    for i in 1..vs.len().saturating_sub(1) {
        let (a, b, c) = (vs[i - 1], vs[i], vs[i + 1]);
        // a plateau counts once, and only if the signal falls after it
        let falls = || vs[i + 1..].iter().find(|&&x| x != b).is_some_and(|&x| x < b);
        if b > a && b >= c && b > baseline && falls() {
            // vertex of the parabola through the three samples (uniform spacing)
            let h = ts[i + 1] - ts[i];
            let denom = a - 2.0 * b + c;
            let (dt, peak) = if denom < 0.0 {
                let off = 0.5 * (a - c) / denom;
                (off * h, b - 0.25 * (a - c) * off)
            } else {
                (0.0, b)
            };
            peak_times.push(ts[i] + dt);
            peak_values.push(peak);
        }
    }

    let (period_estimate, amplitude_ratio, trend) = if peak_times.len() < 3 {
        (None, None, AmplitudeTrend::NoOscillation)
    } else {
        let m = peak_times.len();
        let period = (peak_times[m - 1] - peak_times[0]) / (m - 1) as f64;
        let heights: Vec<f64> = peak_values.iter().map(|p| p - baseline).collect();
        let ratio = (heights[m - 1] / heights[0]).powf(1.0 / (m - 1) as f64);
        let trend = if ratio < DECAY_RATIO {
            AmplitudeTrend::Decaying
        } else if ratio > GROWTH_RATIO {
            AmplitudeTrend::Growing
        } else {
            AmplitudeTrend::Sustained
        };
        (Some(period), Some(ratio), trend)
    };

    OscillationMetrics {
        component,
        transient_fraction,
        baseline,
        peak_times,
        peak_values,
        period_estimate,
        amplitude_ratio,
        amplitude_trend: trend,
    }
}

/// Half the peak-to-trough range of a component over the trailing `window`
/// time units.
pub fn trailing_amplitude(traj: &Trajectory, component: usize, window: f64) -> f64 {
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    let (lo, hi) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= t_end - window)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| {
            (lo.min(s[component]), hi.max(s[component]))
        });
    if lo.is_finite() {
        0.5 * (hi - lo)
    } else {
        0.0
    }
}

/// Kernel with bifurcation delay `tau`; two point delays keep `tau2` fixed.
fn kernel_at(family: KernelFamily, tau: f64, tau2: f64) -> KernelSpec {
    match family {
        KernelFamily::Discrete => KernelSpec::DiscreteDiscrete { tau1: tau - tau2, tau2 },
        KernelFamily::Weak { q2 } => KernelSpec::DiscreteWeak { tau1: tau, q2 },
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingPoint {
    pub tau: f64,
    /// Saturated half peak-to-trough amplitude, zero when decaying.
    pub amplitude: f64,
    pub trend: AmplitudeTrend,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    /// x-intercept of the amplitude^2 line; `None` when inconclusive.
    pub tau_hat: Option<f64>,
    pub slope: Option<f64>,
    /// `Some(true)` when oscillations sit above the onset.
    pub orbits_above: Option<bool>,
}

/// Least-squares line `amp^2 = slope (tau - tau_hat)` through the oscillating
/// points of a delay sweep.
pub fn fit_amplitude_line(points: &[ScalingPoint]) -> (Option<f64>, Option<f64>) {
    let osc: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.trend.is_oscillating() && p.amplitude > 0.0)
        .map(|p| (p.tau, p.amplitude * p.amplitude))
        .collect();
    if osc.len() < 2 {
        return (None, None);
    }
    let n = osc.len() as f64;
    let mx = osc.iter().map(|p| p.0).sum::<f64>() / n;
    let my = osc.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = osc.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = osc.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 || sxy == 0.0 {
        return (None, None);
    }
    let slope = sxy / sxx;
    (Some(mx - my / slope), Some(slope))
}

/// Simulates each delay in `taus` from a small y1 offset and fits the onset
/// of saturated oscillation. For two point delays `tau2` is the fixed
/// translation lag.
pub fn amplitude_scaling_fit(
    params: &ModelParams,
    family: KernelFamily,
    taus: &[f64],
    tau2: f64,
    perturbation: f64,
    opts: &SimOptions,
) -> Result<ScalingFit> {
    let mut points = Vec::with_capacity(taus.len());
    for &tau in taus {
        let kernel = kernel_at(family, tau, tau2);
        let hist = HistorySpec::ConstantAtEquilibrium {
            perturbation: [0.0, perturbation, 0.0, 0.0],
        };
        let traj = simulate(params, &kernel, &hist, opts)?;
        let m = oscillation_metrics(&traj, 1, 0.75);
        let period = m.period_estimate.unwrap_or(opts.horizon / 4.0);
        let amp = if m.amplitude_trend.is_oscillating() {
            trailing_amplitude(&traj, 1, 2.0 * period)
        } else {
            0.0
        };
        points.push(ScalingPoint { tau, amplitude: amp, trend: m.amplitude_trend });
    }
    let (tau_hat, slope) = fit_amplitude_line(&points);
    Ok(ScalingFit {
        points,
        tau_hat,
        slope,
        orbits_above: slope.map(|s| s > 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitVerdict {
    /// Runs from inside and outside the predicted orbit meet at one amplitude.
    StableOrbit,
    /// The inner run collapses to equilibrium while the outer run escapes.
    UnstableOrbit,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArbiterOutcome {
    pub tau: f64,
    pub predicted_amplitude: f64,
    pub inner_start: f64,
    pub outer_start: f64,
    pub inner_final: f64,
    pub outer_final: f64,
    pub inner_trend: AmplitudeTrend,
    pub outer_trend: AmplitudeTrend,
    pub horizon: f64,
    pub verdict: OrbitVerdict,
    pub agreement: SimAgreement,
}

/// Relative spread under which the inner and outer runs count as converged.
const MEETING_TOL: f64 = 0.1;

/// Direct-simulation check of the normal-form orbit classification: at a 5%
/// delay offset on the side where the orbit is predicted, starts one run
/// inside and one outside the predicted amplitude and watches where they go.
pub fn orbit_arbiter(
    params: &ModelParams,
    hopf: &HopfPoint,
    analysis: &NormalFormAnalysis,
    tau2: f64,
    step: f64,
) -> Result<ArbiterOutcome> {
    let mu2 = analysis.summary.mu2;
    let side = if mu2 >= 0.0 { 1.0 } else { -1.0 };
    let dtau = 0.05 * hopf.tau_crit * side;
    let tau = hopf.tau_crit + dtau;
    let predicted = analysis.predicted_amplitude(1, dtau).unwrap_or(0.0);
    let rate = (hopf.lambda_prime.re * dtau).abs().max(1e-6);
    let period = 2.0 * std::f64::consts::PI / hopf.omega;
    // several amplitude relaxation times, at least forty periods
    let horizon = (4.0 / rate).max(40.0 * period);
    let opts = SimOptions { horizon, step };
    let kernel = kernel_at(hopf.family, tau, tau2);
    let (inner_start, outer_start) = (0.3 * predicted, 2.0 * predicted);

    let run = |amp: f64| -> Result<(f64, AmplitudeTrend)> {
        let hist = HistorySpec::ConstantAtEquilibrium {
            perturbation: [0.0, amp, 0.0, 0.0],
        };
        let traj = simulate(params, &kernel, &hist, &opts)?;
        let m = oscillation_metrics(&traj, 1, 0.8);
        Ok((trailing_amplitude(&traj, 1, 2.0 * period), m.amplitude_trend))
    };
    let (inner_final, inner_trend) = run(inner_start)?;
    let (outer_final, outer_trend) = run(outer_start)?;

    let spread = (inner_final - outer_final).abs() / inner_final.max(outer_final).max(f64::MIN_POSITIVE);
    let verdict = if predicted > 0.0 && spread < MEETING_TOL && inner_final > inner_start {
        OrbitVerdict::StableOrbit
    } else if inner_trend == AmplitudeTrend::Decaying && outer_trend == AmplitudeTrend::Growing {
        OrbitVerdict::UnstableOrbit
    } else {
        OrbitVerdict::Inconclusive
    };
    let agreement = match (verdict, analysis.summary.orbit_stability) {
        (OrbitVerdict::StableOrbit, OrbitStability::Stable) | (OrbitVerdict::UnstableOrbit, OrbitStability::Unstable) => {
            SimAgreement::Agrees
        }
        (OrbitVerdict::Inconclusive, _) => SimAgreement::Inconclusive,
        _ => SimAgreement::Disagrees,
    };
    Ok(ArbiterOutcome {
        tau,
        predicted_amplitude: predicted,
        inner_start,
        outer_start,
        inner_final,
        outer_final,
        inner_trend,
        outer_trend,
        horizon,
        verdict,
        agreement,
    })
}
