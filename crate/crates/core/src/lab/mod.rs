//! Experiment harness: initial data, configuration, metrics, residuals,
//! reports and the convergence study.

pub mod config;
pub mod metrics;
pub mod oscillation;
pub mod report;
pub mod residual;
pub mod study;

pub use config::RunConfig;
pub use oscillation::{gen_oscillating_density, limit_measure, OscillationSpec, Profile};
pub use residual::{weak_residual, Equation, TestFunction, TrajectoryView};
pub use study::{run_convergence, ConvergenceReport, ConvergenceRow};
