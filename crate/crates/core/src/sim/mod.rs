//! Method-of-steps integration of the nonlinear delayed model.
//!
//! Classical RK4 on a fixed grid. Delayed values come from cubic Hermite
//! interpolation of the stored nodes (value and right-hand side at each node).
//! Steps are additionally split at the derivative breakpoints
//! `k1 tau1 + k2 tau2` generated by the constant history, so each interpolated
//! interval sees a smooth solution and the global error stays O(h^4).

mod metrics;

use std::io::Write;

use serde::Serialize;

use crate::error::{AnalysisError, Result};
use crate::model::{hill_eval, Equilibrium, ModelParams};
use crate::spectral::KernelSpec;

pub use metrics::{
    amplitude_scaling_fit, fit_amplitude_line, metrics_from_samples, oscillation_metrics, orbit_arbiter,
    trailing_amplitude, AmplitudeTrend, ArbiterOutcome,
    OrbitVerdict, OscillationMetrics, ScalingFit, ScalingPoint, DECAY_RATIO, GROWTH_RATIO,
};

/// Constant initial history on `(-inf, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistorySpec {
    ConstantAtEquilibrium { perturbation: [f64; 4] },
    ConstantValue { state: [f64; 4] },
}

impl HistorySpec {
    pub fn state(&self, eq: Option<&Equilibrium>) -> Result<[f64; 4]> {
        let s = match *self {
            HistorySpec::ConstantValue { state } => state,
            HistorySpec::ConstantAtEquilibrium { perturbation } => {
                let eq = eq.ok_or_else(|| AnalysisError::Simulation("history needs an equilibrium".into()))?;
                let base = eq.state();
                [
                    base[0] + perturbation[0],
                    base[1] + perturbation[1],
                    base[2] + perturbation[2],
                    base[3] + perturbation[3],
                ]
            }
        };
        if s.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(AnalysisError::InvalidParameter {
                name: "history",
                value: s.iter().cloned().fold(f64::INFINITY, f64::min),
                reason: "history concentrations must be nonnegative",
            });
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub horizon: f64,
    pub step: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { horizon: 500.0, step: 0.01 }
    }
}

/// How the weak-kernel convolution is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakMethod {
    Chain,
    Quadrature,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub columns: Vec<&'static str>,
    pub times: Vec<f64>,
    /// One row per time, `columns.len() - 1` state entries.
    pub states: Vec<Vec<f64>>,
    pub kernel: KernelSpec,
    pub params: ModelParams,
    pub step: f64,
    pub order: u32,
    /// Equilibrium the oscillation metrics measure against.
    pub reference_state: Option<[f64; 4]>,
}

impl Trajectory {
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    pub fn dim(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map(|s| s.as_slice()).unwrap_or(&[])
    }

    /// CSV with a `t,x1,y1,x2,y2[,z]` header and LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for (t, row) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}")?;
            for v in row {
                write!(out, ",{v:.16e}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Stored solution nodes: values and right-hand sides for Hermite lookups.
struct Nodes {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    history: Vec<f64>,
}

impl Nodes {
    fn push(&mut self, t: f64, u: &[f64], du: &[f64]) {
        self.times.push(t);
        self.values.extend_from_slice(u);
        self.slopes.extend_from_slice(du);
    }

    fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Component `k` at time `s <= last node`.
    fn value_at(&self, k: usize, s: f64) -> f64 {
        if s <= 0.0 {
            return self.history[k];
        }
        let n = self.times.len();
        let idx = self.times.partition_point(|&t| t <= s);
        if idx >= n {
            return self.values[(n - 1) * self.dim + k];
        }
        let i = idx - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let th = (s - t0) / h;
        let (y0, y1) = (self.values[i * self.dim + k], self.values[(i + 1) * self.dim + k]);
        let (m0, m1) = (self.slopes[i * self.dim + k], self.slopes[(i + 1) * self.dim + k]);
        let th2 = th * th;
        let th3 = th2 * th;
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
    }
}

trait DelayRhs {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, u: &[f64], nodes: &Nodes, du: &mut [f64]) -> Result<()>;
    /// Called once a step is accepted, after its node has been stored.
    fn accept(&mut self, _t: f64, _u: &[f64], _du: &[f64]) {}
}

fn hill(y: f64, p: &ModelParams) -> Result<f64> {
    hill_eval(y, p).map_err(|_| AnalysisError::Simulation(format!("P53 protein went negative ({y:e})")))
}

/// `u = (x1, y1, x2, y2)` with point lags on y1 and x2.
struct TwoDelay {
    p: ModelParams,
    tau1: f64,
    tau2: f64,
}

impl DelayRhs for TwoDelay {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&mut self, t: f64, u: &[f64], nodes: &Nodes, du: &mut [f64]) -> Result<()> {
        let p = &self.p;
        let y1_lag = if self.tau1 == 0.0 { u[1] } else { nodes.value_at(1, t - self.tau1) };
        let x2_lag = if self.tau2 == 0.0 { u[2] } else { nodes.value_at(2, t - self.tau2) };
        du[0] = p.a1 - p.a2 * u[0];
        du[1] = p.b1 * u[0] - p.b2 * u[1] - p.b12 * u[1] * u[3];
        du[2] = hill(y1_lag, p)? - p.c2 * u[2];
        du[3] = x2_lag - p.d2 * u[3];
        Ok(())
    }
}

/// `u = (x1, y1, x2, y2, z)` with `z' = q2 (x2 - z)` replacing the kernel.
struct WeakChain {
    p: ModelParams,
    tau1: f64,
    q2: f64,
}

impl DelayRhs for WeakChain {
    fn dim(&self) -> usize {
        5
    }

    fn eval(&mut self, t: f64, u: &[f64], nodes: &Nodes, du: &mut [f64]) -> Result<()> {
        let p = &self.p;
        let y1_lag = if self.tau1 == 0.0 { u[1] } else { nodes.value_at(1, t - self.tau1) };
        du[0] = p.a1 - p.a2 * u[0];
        du[1] = p.b1 * u[0] - p.b2 * u[1] - p.b12 * u[1] * u[3];
        du[2] = hill(y1_lag, p)? - p.c2 * u[2];
        du[3] = u[4] - p.d2 * u[3];
        du[4] = self.q2 * (u[2] - u[4]);
        Ok(())
    }
}

/// `int_0^L q e^{-q s} s^k ds` for `k = 0..=3`.
fn exp_moments(q: f64, len: f64) -> [f64; 4] {
    let x = q * len;
    let mut m = [0.0; 4];
    if x < 1.0 {
        // q sum_j (-q)^j L^{k+j+1} / (j! (k+j+1)) = sum_j (-x)^j x L^k / (j! (k+j+1))
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = x; // (-x)^j x / j!
            let mut sum = 0.0;
            for j in 0..40 {
                let add = term / (k + j + 1) as f64;
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
                term *= -x / (j + 1) as f64;
            }
            *mk = sum * len.powi(k as i32);
        }
    } else {
        let e = (-x).exp();
        m[0] = -(-x).exp_m1();
        for k in 1..4 {
            m[k] = -e * len.powi(k as i32) + k as f64 / q * m[k - 1];
        }
    }
    m
}

/// `int_a^b q e^{-q (b - s)} H(s) ds` for the cubic Hermite `H` through
/// `(a, xa, ma)` and `(b, xb, mb)`.
fn hermite_exp_segment(q: f64, len: f64, xa: f64, ma: f64, xb: f64, mb: f64) -> f64 {
    if len == 0.0 {
        return 0.0;
    }
    // H in the backward variable s = b - t: c0 + c1 s + c2 s^2 + c3 s^3
    let c0 = xb;
    let c1 = -mb;
    let r1 = xa - xb + mb * len; // c2 L^2 + c3 L^3
    let r2 = mb - ma; // 2 c2 L + 3 c3 L^2
    let c3 = (r2 * len - 2.0 * r1) / len.powi(3);
    let c2 = (r1 - c3 * len.powi(3)) / (len * len);
    let m = exp_moments(q, len);
    c0 * m[0] + c1 * m[1] + c2 * m[2] + c3 * m[3]
}

/// Four-dimensional weak-kernel model with the convolution evaluated by an
/// exponential-weighted quadrature over the stored x2 nodes. The integrand is
/// the same cubic Hermite interpolant used for delayed lookups, integrated
/// exactly against the kernel, with a running accumulator so each stage costs
/// O(1). The constant history contributes `x2(0) e^{-q t}` exactly.
struct WeakQuadrature {
    p: ModelParams,
    tau1: f64,
    q2: f64,
    x2_hist: f64,
    /// Convolution over `[0, t_n]`, last node `(t_n, x2_n, x2'_n)`.
    acc: f64,
    last: (f64, f64, f64),
}

impl WeakQuadrature {
    fn convolution(&self, t: f64, x2: f64, dx2: f64) -> f64 {
        let (tn, xn, mn) = self.last;
        let len = t - tn;
        self.x2_hist * (-self.q2 * t).exp()
            + (-self.q2 * len).exp() * self.acc
            + hermite_exp_segment(self.q2, len, xn, mn, x2, dx2)
    }
}

impl DelayRhs for WeakQuadrature {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&mut self, t: f64, u: &[f64], nodes: &Nodes, du: &mut [f64]) -> Result<()> {
        let p = &self.p;
        let y1_lag = if self.tau1 == 0.0 { u[1] } else { nodes.value_at(1, t - self.tau1) };
        du[0] = p.a1 - p.a2 * u[0];
        du[1] = p.b1 * u[0] - p.b2 * u[1] - p.b12 * u[1] * u[3];
        du[2] = hill(y1_lag, p)? - p.c2 * u[2];
        du[3] = self.convolution(t, u[2], du[2]) - p.d2 * u[3];
        Ok(())
    }

    fn accept(&mut self, t: f64, u: &[f64], du: &[f64]) {
        let (tn, xn, mn) = self.last;
        let len = t - tn;
        self.acc = (-self.q2 * len).exp() * self.acc + hermite_exp_segment(self.q2, len, xn, mn, u[2], du[2]);
        self.last = (t, u[2], du[2]);
    }
}

/// Kernel mass retained by truncating `q e^{-q s}` at `s_max`.
pub fn kernel_mass(q2: f64, s_max: f64) -> f64 {
    -(-q2 * s_max).exp_m1()
}

fn breakpoints(lags: &[f64], horizon: f64) -> Vec<f64> {
    let positive: Vec<f64> = lags.iter().copied().filter(|&l| l > 0.0).collect();
    let mut out = Vec::new();
    match positive.as_slice() {
        [] => {}
        [l] => {
            for k in 1..=5 {
                out.push(k as f64 * l);
            }
        }
        [l1, l2, ..] => {
            for k1 in 0..=5usize {
                for k2 in 0..=(5 - k1) {
                    if k1 + k2 > 0 {
                        out.push(k1 as f64 * l1 + k2 as f64 * l2);
                    }
                }
            }
        }
    }
    out.retain(|&b| b < horizon);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    out
}

fn check_options(opts: &SimOptions, lags: &[f64]) -> Result<()> {
    let bad = |name, value, reason| Err(AnalysisError::InvalidParameter { name, value, reason });
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return bad("step", opts.step, "step must be positive");
    }
    if !(opts.horizon >= opts.step) || !opts.horizon.is_finite() {
        return bad("horizon", opts.horizon, "horizon must be at least one step");
    }
    for &l in lags {
        if l > 0.0 && opts.step > l / 10.0 * (1.0 + 1e-12) {
            return bad("step", opts.step, "step must not exceed a tenth of each positive delay");
        }
    }
    Ok(())
}

fn integrate<R: DelayRhs>(
    rhs: &mut R,
    u0: &[f64],
    lags: &[f64],
    opts: &SimOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = rhs.dim();
    let h = opts.step;
    let n_steps = (opts.horizon / h * (1.0 + 1e-12)).floor() as usize;
    let horizon = n_steps as f64 * h;
    let bps = breakpoints(lags, horizon);
    let mut nodes = Nodes {
        dim,
        times: Vec::with_capacity(n_steps + bps.len() + 1),
        values: Vec::with_capacity((n_steps + bps.len() + 1) * dim),
        slopes: Vec::with_capacity((n_steps + bps.len() + 1) * dim),
        history: u0.to_vec(),
    };
    let mut u = u0.to_vec();
    let mut du = vec![0.0; dim];
    rhs.eval(0.0, &u, &nodes, &mut du)?;
    nodes.push(0.0, &u, &du);
    rhs.accept(0.0, &u, &du);

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(u.clone());

    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut bp_idx = 0;
    let min_gap = 1e-9 * h;

    for j in 1..=n_steps {
        let target = j as f64 * h;
        loop {
            let t = nodes.last_time();
            while bp_idx < bps.len() && bps[bp_idx] <= t + min_gap {
                bp_idx += 1;
            }
            let next = if bp_idx < bps.len() && bps[bp_idx] < target - min_gap {
                bps[bp_idx]
            } else {
                target
            };
            let dt = next - t;
            let k1 = &du;
            for i in 0..dim {
                tmp[i] = u[i] + 0.5 * dt * k1[i];
            }
            rhs.eval(t + 0.5 * dt, &tmp, &nodes, &mut k2)?;
            for i in 0..dim {
                tmp[i] = u[i] + 0.5 * dt * k2[i];
            }
            rhs.eval(t + 0.5 * dt, &tmp, &nodes, &mut k3)?;
            for i in 0..dim {
                tmp[i] = u[i] + dt * k3[i];
            }
            rhs.eval(next, &tmp, &nodes, &mut k4)?;
            for i in 0..dim {
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(AnalysisError::Simulation(format!("non-finite state at t = {next}")));
            }
            let mut dnew = vec![0.0; dim];
            rhs.eval(next, &u, &nodes, &mut dnew)?;
            nodes.push(next, &u, &dnew);
            rhs.accept(next, &u, &dnew);
            du = dnew;
            if next == target {
                break;
            }
        }
        times.push(target);
        states.push(u.clone());
    }
    Ok((times, states))
}

fn prepare(params: &ModelParams, history: &HistorySpec) -> Result<(Option<Equilibrium>, [f64; 4])> {
    params.require_analyzable()?;
    let eq = match history {
        HistorySpec::ConstantAtEquilibrium { .. } => Some(*crate::model::solve_equilibrium(params)?.principal()),
        // measure against the equilibrium closest to the starting state
        HistorySpec::ConstantValue { state } => crate::model::solve_equilibrium(params).ok().and_then(|set| {
            set.roots.into_iter().min_by(|a, b| {
                let d = |e: &Equilibrium| (e.y10 - state[1]).abs() + (e.y20 - state[3]).abs();
                d(a).total_cmp(&d(b))
            })
        }),
    };
    let u0 = history.state(eq.as_ref())?;
    Ok((eq, u0))
}

pub fn simulate_discrete(
    params: &ModelParams,
    tau1: f64,
    tau2: f64,
    history: &HistorySpec,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let kernel = KernelSpec::DiscreteDiscrete { tau1, tau2 };
    kernel.validate()?;
    check_options(opts, &[tau1, tau2])?;
    let (eq, u0) = prepare(params, history)?;
    let mut rhs = TwoDelay { p: *params, tau1, tau2 };
    let (times, states) = integrate(&mut rhs, &u0, &[tau1, tau2], opts)?;
    Ok(Trajectory {
        columns: vec!["t", "x1", "y1", "x2", "y2"],
        times,
        states,
        kernel,
        params: *params,
        step: opts.step,
        order: 4,
        reference_state: eq.map(|e| e.state()),
    })
}

pub fn simulate_weak_chain(
    params: &ModelParams,
    tau1: f64,
    q2: f64,
    history: &HistorySpec,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let kernel = KernelSpec::DiscreteWeak { tau1, q2 };
    kernel.validate()?;
    check_options(opts, &[tau1])?;
    let (eq, u0) = prepare(params, history)?;
    // the chain variable equals the kernel average of a constant x2 history
    let u0 = [u0[0], u0[1], u0[2], u0[3], u0[2]];
    let mut rhs = WeakChain { p: *params, tau1, q2 };
    let (times, states) = integrate(&mut rhs, &u0, &[tau1], opts)?;
    Ok(Trajectory {
        columns: vec!["t", "x1", "y1", "x2", "y2", "z"],
        times,
        states,
        kernel,
        params: *params,
        step: opts.step,
        order: 4,
        reference_state: eq.map(|e| e.state()),
    })
}

pub fn simulate_weak_quadrature(
    params: &ModelParams,
    tau1: f64,
    q2: f64,
    history: &HistorySpec,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let kernel = KernelSpec::DiscreteWeak { tau1, q2 };
    kernel.validate()?;
    check_options(opts, &[tau1])?;
    let (eq, u0) = prepare(params, history)?;
    let mut rhs = WeakQuadrature {
        p: *params,
        tau1,
        q2,
        x2_hist: u0[2],
        acc: 0.0,
        last: (0.0, u0[2], 0.0),
    };
    let (times, states) = integrate(&mut rhs, &u0, &[tau1], opts)?;
    Ok(Trajectory {
        columns: vec!["t", "x1", "y1", "x2", "y2"],
        times,
        states,
        kernel,
        params: *params,
        step: opts.step,
        order: 4,
        reference_state: eq.map(|e| e.state()),
    })
}

/// Dispatches on the kernel; the weak kernel uses the chain form.
pub fn simulate(params: &ModelParams, kernel: &KernelSpec, history: &HistorySpec, opts: &SimOptions) -> Result<Trajectory> {
    match *kernel {
        KernelSpec::DiscreteDiscrete { tau1, tau2 } => simulate_discrete(params, tau1, tau2, history, opts),
        KernelSpec::DiscreteWeak { tau1, q2 } => simulate_weak_chain(params, tau1, q2, history, opts),
    }
}
