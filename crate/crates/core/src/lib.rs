//! Equilibrium, Hopf and normal-form analysis of a delayed P53-Mdm2 network,
//! with a method-of-steps integrator to check the predictions.

// `!(x > 0.0)` is used on purpose so that NaN lands on the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod linalg;
pub mod model;
pub mod normal_form;
pub mod poly;
pub mod report;
pub mod sim;
pub mod spectral;

pub use error::{AnalysisError, Result};
pub use model::{linearize, solve_equilibrium, Equilibrium, EquilibriumSet, LinearizationCoeffs, ModelParams};
pub use normal_form::{eigen_pair, g_coefficients, hopf_summary, NormalFormSummary};
pub use spectral::{critical_delay, stability_zero_delay, transversality, HopfPoint, KernelFamily, KernelSpec};
