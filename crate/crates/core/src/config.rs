//! Flat `key = value` configuration files.
//!
//! Blank lines and everything after `#` are ignored. Keys are unique per file.
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(serialize(x)) == x` bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{AnalysisError, Result};
use crate::model::ModelParams;
use crate::spectral::KernelSpec;

/// Ordered key/value pairs with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: Vec<(String, String, usize)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AnalysisError::Config(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(AnalysisError::Config(format!("line {line_no}: bad key `{key}`")));
            }
            if entries.iter().any(|(k, _, _)| k == key) {
                return Err(AnalysisError::Config(format!("line {line_no}: duplicate key `{key}`")));
            }
            entries.push((key.to_string(), value.to_string(), line_no));
        }
        Ok(KvFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|(k, _, _)| k == key).map_or(0, |e| e.2)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _, _)| k.as_str())
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    AnalysisError::Config(format!("line {}: `{key}` is not a number: `{v}`", self.line_of(key)))
                })
            })
            .transpose()
    }

    fn require_float(&self, key: &str) -> Result<f64> {
        self.float(key)?
            .ok_or_else(|| AnalysisError::Config(format!("missing key `{key}`")))
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    AnalysisError::Config(format!(
                        "line {}: `{key}` is not a nonnegative integer: `{v}`",
                        self.line_of(key)
                    ))
                })
            })
            .transpose()
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for (k, _, line) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(AnalysisError::Config(format!("line {line}: unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

const PARAM_KEYS: [&str; 10] = ["a1", "a2", "b1", "b2", "b12", "c2", "d2", "d12", "a", "n"];

fn params_from_kv(kv: &KvFile) -> Result<ModelParams> {
    let n = kv
        .uint("n")?
        .ok_or_else(|| AnalysisError::Config("missing key `n`".into()))?;
    Ok(ModelParams {
        a1: kv.require_float("a1")?,
        a2: kv.require_float("a2")?,
        b1: kv.require_float("b1")?,
        b2: kv.require_float("b2")?,
        b12: kv.require_float("b12")?,
        c2: kv.require_float("c2")?,
        d2: kv.require_float("d2")?,
        d12: kv.float("d12")?.unwrap_or(0.0),
        a: kv.require_float("a")?,
        n: u32::try_from(n).map_err(|_| AnalysisError::Config(format!("`n` out of range: {n}")))?,
    })
}

fn write_params(out: &mut String, p: &ModelParams) {
    for (k, v) in [
        ("a1", p.a1),
        ("a2", p.a2),
        ("b1", p.b1),
        ("b2", p.b2),
        ("b12", p.b12),
        ("c2", p.c2),
        ("d2", p.d2),
        ("d12", p.d12),
        ("a", p.a),
    ] {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "n = {}", p.n);
}

/// Parses a parameter file. `d12` may be omitted and defaults to zero.
pub fn parse_params(text: &str) -> Result<ModelParams> {
    let kv = KvFile::parse(text)?;
    kv.reject_unknown(&PARAM_KEYS)?;
    params_from_kv(&kv)
}

pub fn serialize_params(p: &ModelParams) -> String {
    let mut out = String::new();
    write_params(&mut out, p);
    out
}

pub fn load_params(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path)?;
    parse_params(&text).map_err(|e| match e {
        AnalysisError::Config(msg) => AnalysisError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Discrete,
    Weak,
}

impl KernelChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelChoice::Discrete => "discrete",
            KernelChoice::Weak => "weak",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(KernelChoice::Discrete),
            "weak" => Ok(KernelChoice::Weak),
            other => Err(AnalysisError::Config(format!("kernel must be `discrete` or `weak`, got `{other}`"))),
        }
    }
}

/// Delay range for the sweep command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

/// Everything a command needs besides the subcommand name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Parameter file the model was read from; `None` means the reference set.
    pub params_path: Option<PathBuf>,
    pub params: ModelParams,
    pub kernel: KernelChoice,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub q2: f64,
    pub horizon: f64,
    pub step: f64,
    pub sweep: Option<SweepRange>,
    pub out: Option<PathBuf>,
    pub root_index: usize,
    /// Offset added to y1 in the constant history.
    pub perturb: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params_path: None,
            params: ModelParams::reference_set(),
            kernel: KernelChoice::Discrete,
            tau1: None,
            tau2: None,
            q2: 0.5,
            horizon: 500.0,
            step: 0.01,
            sweep: None,
            out: None,
            root_index: 0,
            perturb: 0.05,
        }
    }
}

const RUN_KEYS: [&str; 14] = [
    "params_path",
    "kernel",
    "tau1",
    "tau2",
    "q2",
    "horizon",
    "step",
    "sweep_from",
    "sweep_to",
    "sweep_points",
    "out",
    "root_index",
    "perturb",
    // a run file may carry the model inline instead of a params path
    "inline_params",
];

impl RunConfig {
    /// Kernel spec with explicit delays; `None` until both are known.
    pub fn kernel_spec(&self) -> Option<KernelSpec> {
        match self.kernel {
            KernelChoice::Discrete => Some(KernelSpec::DiscreteDiscrete {
                tau1: self.tau1?,
                tau2: self.tau2?,
            }),
            KernelChoice::Weak => Some(KernelSpec::DiscreteWeak { tau1: self.tau1?, q2: self.q2 }),
        }
    }

    /// Serialized form. The model is always written inline so the file is
    /// self-contained.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.params_path {
            let _ = writeln!(out, "params_path = {}", p.display());
        }
        let _ = writeln!(out, "inline_params = true");
        write_params(&mut out, &self.params);
        let _ = writeln!(out, "kernel = {}", self.kernel.as_str());
        if let Some(t) = self.tau1 {
            let _ = writeln!(out, "tau1 = {t}");
        }
        if let Some(t) = self.tau2 {
            let _ = writeln!(out, "tau2 = {t}");
        }
        let _ = writeln!(out, "q2 = {}", self.q2);
        let _ = writeln!(out, "horizon = {}", self.horizon);
        let _ = writeln!(out, "step = {}", self.step);
        if let Some(s) = &self.sweep {
            let _ = writeln!(out, "sweep_from = {}", s.from);
            let _ = writeln!(out, "sweep_to = {}", s.to);
            let _ = writeln!(out, "sweep_points = {}", s.points);
        }
        if let Some(o) = &self.out {
            let _ = writeln!(out, "out = {}", o.display());
        }
        let _ = writeln!(out, "root_index = {}", self.root_index);
        let _ = writeln!(out, "perturb = {}", self.perturb);
        out
    }

    /// Parses a run file. Without `inline_params = true` the model comes from
    /// `params_path` (resolved relative to `base`) or the reference set.
    pub fn from_kv(text: &str, base: Option<&Path>) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let allowed: Vec<&str> = RUN_KEYS.iter().chain(PARAM_KEYS.iter()).copied().collect();
        kv.reject_unknown(&allowed)?;
        let defaults = RunConfig::default();
        let params_path = kv.get("params_path").map(PathBuf::from);
        let inline = match kv.get("inline_params") {
            None => false,
            Some("true") => true,
            Some("false") => false,
            Some(v) => return Err(AnalysisError::Config(format!("inline_params must be true or false, got `{v}`"))),
        };
        let params = if inline || kv.keys().any(|k| PARAM_KEYS.contains(&k)) {
            params_from_kv(&kv)?
        } else if let Some(p) = &params_path {
            let resolved = match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.clone(),
            };
            load_params(&resolved)?
        } else {
            defaults.params
        };
        let sweep = match (kv.float("sweep_from")?, kv.float("sweep_to")?, kv.uint("sweep_points")?) {
            (None, None, None) => None,
            (Some(from), Some(to), Some(points)) => Some(SweepRange { from, to, points: points as usize }),
            _ => {
                return Err(AnalysisError::Config(
                    "sweep_from, sweep_to and sweep_points go together".into(),
                ))
            }
        };
        Ok(RunConfig {
            params_path,
            params,
            kernel: kv.get("kernel").map(KernelChoice::parse).transpose()?.unwrap_or(defaults.kernel),
            tau1: kv.float("tau1")?,
            tau2: kv.float("tau2")?,
            q2: kv.float("q2")?.unwrap_or(defaults.q2),
            horizon: kv.float("horizon")?.unwrap_or(defaults.horizon),
            step: kv.float("step")?.unwrap_or(defaults.step),
            sweep,
            out: kv.get("out").map(PathBuf::from),
            root_index: kv.uint("root_index")?.map_or(defaults.root_index, |v| v as usize),
            perturb: kv.float("perturb")?.unwrap_or(defaults.perturb),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_params_round_trip() {
        let p = ModelParams::reference_set();
        assert_eq!(parse_params(&serialize_params(&p)).unwrap(), p);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# model\n\na1 = 2   # production\na2=0.55\nb1 = 1\nb2 = 0.8\nb12 = 1.5\nc2 = 0.1\nd2 = 0.1\na = 4\nn = 2\n";
        let p = parse_params(text).unwrap();
        assert_eq!(p, ModelParams::reference_set());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_params("a1 2\n").is_err());
        assert!(parse_params("a1 = two\n").is_err());
        assert!(parse_params("a1 = 1\na1 = 2\n").is_err());
        assert!(parse_params("zeta = 1\n").is_err());
        let missing = serialize_params(&ModelParams::reference_set()).replace("b12 = 1.5\n", "");
        assert!(parse_params(&missing).is_err());
    }

    #[test]
    fn run_config_round_trip() {
        let cfg = RunConfig {
            params_path: Some(PathBuf::from("model.cfg")),
            kernel: KernelChoice::Weak,
            tau1: Some(8.028435948341226),
            tau2: None,
            q2: 0.5,
            horizon: 1234.5,
            step: 0.02,
            sweep: Some(SweepRange { from: 0.1, to: 30.0, points: 61 }),
            out: Some(PathBuf::from("out dir")),
            root_index: 1,
            perturb: 1e-7,
            ..RunConfig::default()
        };
        let back = RunConfig::from_kv(&cfg.to_kv(), None).unwrap();
        assert_eq!(back, cfg);
    }
}
