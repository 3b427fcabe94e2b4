use thiserror::Error;

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Sign of the equilibrium polynomial sampled across the admissible interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SignProfile {
    pub interval: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("d12 = {0} is not supported; every analysis assumes d12 = 0")]
    UnsupportedCoupling(f64),

    #[error("no equilibrium with y10 in ({:.6}, {:.6})", .0.interval.0, .0.interval.1)]
    NoEquilibrium(SignProfile),

    #[error("root index {index} out of range ({count} admissible equilibria)")]
    RootIndex { index: usize, count: usize },

    #[error("no Hopf crossing: resolving polynomial (ascending coefficients {coefficients:?}) has no positive root")]
    NoHopf { coefficients: Vec<f64> },

    #[error("inconsistent crossing: omega = {omega}, tau = {tau}, |Delta1| = {residual:e}")]
    CrossingResidual { omega: f64, tau: f64, residual: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("degenerate crossing: Re(dlambda/dtau) = {0:e}")]
    DegenerateCrossing(f64),

    #[error("resonance: {0}")]
    Resonance(String),

    #[error("invalid simulation setup: {0}")]
    Simulation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AnalysisError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            AnalysisError::NoEquilibrium(_) => 2,
            AnalysisError::NoHopf { .. } => 3,
            AnalysisError::CrossingResidual { .. }
            | AnalysisError::Inconsistency(_)
            | AnalysisError::DegenerateCrossing(_)
            | AnalysisError::Resonance(_) => 4,
            _ => 1,
        }
    }
}
