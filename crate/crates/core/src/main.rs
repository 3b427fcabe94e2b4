use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use p53hopf::config::{load_params, KernelChoice, RunConfig, SweepRange};
use p53hopf::error::{AnalysisError, Result};
use p53hopf::model::{linearize, solve_equilibrium, EquilibriumSet, LinearizationCoeffs};
use p53hopf::normal_form::{self, NormalFormAnalysis};
use p53hopf::report::{
    render_text, to_json_string, verify_published, ReportRow, RowStatus, NORMAL_FORM_REL_TOL,
    PUBLISHED_DISCRETE, PUBLISHED_WEAK,
};
use p53hopf::sim::{
    oscillation_metrics, orbit_arbiter, simulate_discrete, simulate_weak_chain, simulate_weak_quadrature, HistorySpec,
    OscillationMetrics, SimOptions,
};
use p53hopf::spectral::{
    critical_delay, rightmost_real_part, stability_zero_delay, transversality, HopfPoint, KernelFamily, RootWindow,
    StabilityReport, TransversalityReport,
};
use p53hopf::ModelParams;

#[derive(Parser)]
#[command(name = "p53hopf", version, about = "Hopf analysis and simulation of a delayed P53-Mdm2 feedback model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Positive equilibria and the selected root.
    Equilibrium(CommonArgs),
    /// Zero-delay stability, critical delay and transversality.
    Hopf(CommonArgs),
    /// Normal-form coefficients and Hopf classification.
    Normalform {
        #[command(flatten)]
        common: CommonArgs,
        /// Also run the simulation arbiter on the orbit classification.
        #[arg(long)]
        arbiter: bool,
    },
    /// Integrate the nonlinear model and measure the oscillation.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Weak-kernel evaluation.
        #[arg(long, value_enum, default_value_t = WeakMethodArg::Chain)]
        weak_method: WeakMethodArg,
        /// Write a gnuplot script for the CSV to this file.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Rightmost characteristic root across a range of delays.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        tau_from: Option<f64>,
        #[arg(long)]
        tau_to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Check the published worked example end to end.
    #[command(name = "verify-published", alias = "verify-paper")]
    VerifyPublished {
        /// Directory for verification.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (`key = value`); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model parameter file (`key = value`).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    tau1: Option<f64>,
    /// Translation lag; for the normal form it splits the critical delay.
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    q2: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Equilibrium selector (0 is the smallest y10).
    #[arg(long)]
    root_index: Option<usize>,
    /// Offset added to y1 in the constant history.
    #[arg(long)]
    perturb: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Discrete,
    Weak,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeakMethodArg {
    Chain,
    Quadrature,
}

/// Translation lag used to split the critical delay when none is given.
const DEFAULT_TAU2: f64 = 3.0;

impl CommonArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_kv(&fs::read_to_string(path)?, path.parent())?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.params {
            cfg.params = load_params(p)?;
            cfg.params_path = Some(p.clone());
        }
        if let Some(k) = self.kernel {
            cfg.kernel = match k {
                KernelArg::Discrete => KernelChoice::Discrete,
                KernelArg::Weak => KernelChoice::Weak,
            };
        }
        cfg.tau1 = self.tau1.or(cfg.tau1);
        cfg.tau2 = self.tau2.or(cfg.tau2);
        cfg.q2 = self.q2.unwrap_or(cfg.q2);
        cfg.horizon = self.horizon.unwrap_or(cfg.horizon);
        cfg.step = self.step.unwrap_or(cfg.step);
        cfg.out = self.out.clone().or(cfg.out);
        cfg.root_index = self.root_index.unwrap_or(cfg.root_index);
        cfg.perturb = self.perturb.unwrap_or(cfg.perturb);
        Ok(cfg)
    }
}

fn family(cfg: &RunConfig) -> KernelFamily {
    match cfg.kernel {
        KernelChoice::Discrete => KernelFamily::Discrete,
        KernelChoice::Weak => KernelFamily::Weak { q2: cfg.q2 },
    }
}

fn linearized(cfg: &RunConfig) -> Result<(EquilibriumSet, LinearizationCoeffs)> {
    let set = solve_equilibrium(&cfg.params)?;
    let eq = *set.select(cfg.root_index)?;
    let lin = linearize(&cfg.params, &eq)?;
    Ok((set, lin))
}

/// Prints JSON to stdout and, with an output directory, writes it there too.
fn emit<T: Serialize>(value: &T, out: Option<&Path>, file: &str) -> Result<()> {
    let text = to_json_string(value);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file), &text)?;
    }
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct EquilibriumOutput<'a> {
    config: &'a RunConfig,
    equilibria: &'a EquilibriumSet,
    selected: usize,
}

fn cmd_equilibrium(args: &CommonArgs) -> Result<()> {
    let cfg = args.run_config()?;
    let set = solve_equilibrium(&cfg.params)?;
    set.select(cfg.root_index)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("{:>4} {:>20} {:>20} {:>20} {:>20} {:>10}", "root", "x10", "y10", "x20", "y20", "residual");
    for (i, e) in set.roots.iter().enumerate() {
        let mark = if i == cfg.root_index { "*" } else { " " };
        eprintln!(
            "{mark}{i:>3} {:>20.12} {:>20.12} {:>20.12} {:>20.12} {:>10.2e}",
            e.x10, e.y10, e.x20, e.y20, e.residual
        );
    }
    emit(
        &EquilibriumOutput { config: &cfg, equilibria: &set, selected: cfg.root_index },
        cfg.out.as_deref(),
        "equilibrium.json",
    )
}

#[derive(Serialize)]
struct HopfOutput<'a> {
    config: &'a RunConfig,
    stability: StabilityReport,
    hopf: HopfPoint,
    transversality: TransversalityReport,
}

fn cmd_hopf(args: &CommonArgs) -> Result<()> {
    let cfg = args.run_config()?;
    let (_, lin) = linearized(&cfg)?;
    let fam = family(&cfg);
    let stability = stability_zero_delay(&lin, fam)?;
    let hopf = critical_delay(&lin, fam)?;
    let transversality = transversality(&lin, &hopf)?;
    eprintln!(
        "omega = {:.10}  tau_crit = {:.10}  Re dlambda/dtau = {:.6e}  zero-delay stable = {}",
        hopf.omega, hopf.tau_crit, hopf.lambda_prime.re, stability.stable
    );
    emit(
        &HopfOutput { config: &cfg, stability, hopf, transversality },
        cfg.out.as_deref(),
        "hopf.json",
    )
}

#[derive(Serialize)]
struct NormalFormOutput<'a> {
    config: &'a RunConfig,
    hopf: HopfPoint,
    analysis: NormalFormAnalysis,
    arbiter: Option<p53hopf::sim::ArbiterOutcome>,
    /// Present for the reference parameters and a published kernel setup.
    published_comparison: Vec<ReportRow>,
}

fn published_rows(cfg: &RunConfig, analysis: &NormalFormAnalysis, tau2: Option<f64>) -> Vec<ReportRow> {
    if cfg.params != ModelParams::reference_set() {
        return Vec::new();
    }
    let published = match (cfg.kernel, tau2) {
        (KernelChoice::Discrete, Some(3.0)) => PUBLISHED_DISCRETE,
        (KernelChoice::Weak, _) if cfg.q2 == 0.5 => PUBLISHED_WEAK,
        _ => return Vec::new(),
    };
    let s = &analysis.summary;
    [("mu2", published.mu2, s.mu2), ("beta2", published.beta2, s.beta2), ("t2", published.t2, s.t2)]
        .into_iter()
        .map(|(name, pubv, comp)| {
            let abs_diff = (comp - pubv).abs();
            let rel_diff = abs_diff / pubv.abs();
            let pass = rel_diff <= NORMAL_FORM_REL_TOL;
            ReportRow {
                name: format!("{}.{name}", published.name),
                published: pubv,
                computed: comp,
                abs_diff,
                rel_diff,
                tolerance: NORMAL_FORM_REL_TOL,
                status: if pass { RowStatus::Pass } else { RowStatus::Flagged },
                note: (!pass).then(|| "computed at the solved equilibrium; see verify-published for the arbiter".into()),
            }
        })
        .collect()
}

fn cmd_normalform(args: &CommonArgs, run_arbiter: bool) -> Result<()> {
    let cfg = args.run_config()?;
    let (_, lin) = linearized(&cfg)?;
    let fam = family(&cfg);
    let tau2 = match cfg.kernel {
        KernelChoice::Discrete => Some(cfg.tau2.unwrap_or(DEFAULT_TAU2)),
        KernelChoice::Weak => None,
    };
    let hopf = critical_delay(&lin, fam)?;
    let mut analysis = normal_form::analyze(&lin, &hopf, tau2)?;
    let arbiter = if run_arbiter {
        let outcome = orbit_arbiter(&cfg.params, &hopf, &analysis, tau2.unwrap_or(0.0), 0.02)?;
        analysis.summary.sim_agreement = Some(outcome.agreement);
        Some(outcome)
    } else {
        None
    };
    let s = &analysis.summary;
    eprintln!(
        "mu2 = {:.6e}  beta2 = {:.6e}  T2 = {:.6e}  ({:?}, {:?} orbits, period {:?})",
        s.mu2, s.beta2, s.t2, s.direction, s.orbit_stability, s.period_trend
    );
    let published_comparison = published_rows(&cfg, &analysis, tau2);
    emit(
        &NormalFormOutput { config: &cfg, hopf, analysis, arbiter, published_comparison },
        cfg.out.as_deref(),
        "normalform.json",
    )
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a RunConfig,
    metrics: Vec<OscillationMetrics>,
}

fn plot_script(csv: &Path, weak_chain: bool) -> String {
    let name = csv.display();
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n");
    s.push_str(&format!("plot '{name}' using 1:3 with lines, '' using 1:5 with lines\npause -1\n"));
    s.push_str("set xlabel 'y1'\nset ylabel 'y2'\n");
    s.push_str(&format!("plot '{name}' using 3:5 with lines notitle\npause -1\n"));
    if weak_chain {
        s.push_str("set xlabel 't'\nunset ylabel\n");
        s.push_str(&format!("plot '{name}' using 1:4 with lines, '' using 1:6 with lines\npause -1\n"));
    }
    s
}

fn cmd_simulate(args: &CommonArgs, method: WeakMethodArg, script: Option<&Path>) -> Result<()> {
    let cfg = args.run_config()?;
    let tau1 = cfg
        .tau1
        .ok_or_else(|| AnalysisError::Config("simulate needs --tau1".into()))?;
    let (set, _) = linearized(&cfg)?;
    let mut state = set.select(cfg.root_index)?.state();
    state[1] += cfg.perturb;
    let hist = HistorySpec::ConstantValue { state };
    let opts = SimOptions { horizon: cfg.horizon, step: cfg.step };
    let traj = match cfg.kernel {
        KernelChoice::Discrete => simulate_discrete(&cfg.params, tau1, cfg.tau2.unwrap_or(0.0), &hist, &opts)?,
        KernelChoice::Weak if method == WeakMethodArg::Quadrature => {
            simulate_weak_quadrature(&cfg.params, tau1, cfg.q2, &hist, &opts)?
        }
        KernelChoice::Weak => simulate_weak_chain(&cfg.params, tau1, cfg.q2, &hist, &opts)?,
    };
    let metrics: Vec<OscillationMetrics> = (0..4).map(|k| oscillation_metrics(&traj, k, 0.5)).collect();
    for m in &metrics {
        eprintln!(
            "{}: {:?}, period {:?}, per-period ratio {:?}",
            traj.columns[m.component + 1],
            m.amplitude_trend,
            m.period_estimate,
            m.amplitude_ratio
        );
    }
    let output = SimulateOutput { config: &cfg, metrics };
    match cfg.out.as_deref() {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let csv = dir.join("trajectory.csv");
            traj.write_csv(std::io::BufWriter::new(fs::File::create(&csv)?))?;
            if let Some(path) = script {
                let weak_chain = traj.columns.len() == 6;
                fs::write(path, plot_script(Path::new("trajectory.csv"), weak_chain))?;
            }
            emit(&output, Some(dir), "metrics.json")
        }
        None => {
            if script.is_some() {
                return Err(AnalysisError::Config("--plot-script needs --out for the CSV it plots".into()));
            }
            let stdout = std::io::stdout();
            traj.write_csv(std::io::BufWriter::new(stdout.lock()))?;
            eprint!("{}", to_json_string(&output));
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    tau: f64,
    rightmost_real_part: Option<f64>,
    stable: Option<bool>,
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    config: &'a RunConfig,
    tau_crit: Option<f64>,
    rows: Vec<SweepRow>,
}

fn cmd_sweep(args: &CommonArgs, from: Option<f64>, to: Option<f64>, points: Option<usize>) -> Result<()> {
    let mut cfg = args.run_config()?;
    let (_, lin) = linearized(&cfg)?;
    let fam = family(&cfg);
    let tau_crit = critical_delay(&lin, fam).ok().map(|h| h.tau_crit);
    let default = cfg.sweep.unwrap_or(SweepRange {
        from: 0.0,
        to: 2.0 * tau_crit.unwrap_or(10.0),
        points: 41,
    });
    let range = SweepRange {
        from: from.unwrap_or(default.from),
        to: to.unwrap_or(default.to),
        points: points.unwrap_or(default.points),
    };
    if range.points < 2 || range.to.partial_cmp(&range.from) != Some(std::cmp::Ordering::Greater) || range.from < 0.0 {
        return Err(AnalysisError::Config("sweep needs 0 <= tau_from < tau_to and at least 2 points".into()));
    }
    cfg.sweep = Some(range);
    let taus: Vec<f64> = (0..range.points)
        .map(|i| range.from + (range.to - range.from) * i as f64 / (range.points - 1) as f64)
        .collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(taus.len());
    let chunk = taus.len().div_ceil(threads);
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let handles: Vec<_> = taus
            .chunks(chunk)
            .map(|part| {
                let lin = &lin;
                s.spawn(move || {
                    part.iter()
                        .map(|&tau| {
                            let re = rightmost_real_part(lin, fam, tau, RootWindow::default());
                            SweepRow { tau, rightmost_real_part: re, stable: re.map(|r| r < 0.0) }
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker")).collect()
    });
    for r in &rows {
        eprintln!("tau = {:>12.6}  max Re = {:?}", r.tau, r.rightmost_real_part);
    }
    emit(&SweepOutput { config: &cfg, tau_crit, rows }, cfg.out.as_deref(), "sweep.json")
}

fn cmd_verify(out: Option<&Path>) -> Result<()> {
    let report = verify_published()?;
    eprint!("{}", render_text(&report));
    emit(&report, out, "verification.json")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Equilibrium(a) => cmd_equilibrium(&a),
        Command::Hopf(a) => cmd_hopf(&a),
        Command::Normalform { common, arbiter } => cmd_normalform(&common, arbiter),
        Command::Simulate { common, weak_method, plot_script } => {
            cmd_simulate(&common, weak_method, plot_script.as_deref())
        }
        Command::Sweep { common, tau_from, tau_to, points } => cmd_sweep(&common, tau_from, tau_to, points),
        Command::VerifyPublished { out } => cmd_verify(out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
