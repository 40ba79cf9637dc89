//! Convergence studies: ladders of lattice (or composite) prices against
//! Black-Scholes references, with rate fits and residual diagnostics.

pub mod analysis;
pub mod config;
pub mod study;

pub use analysis::{fit_rate, oscillation_flag, residual_order_check, RateFit, ResidualVerdict};
pub use config::{StudyConfig, StudyMode, Tolerances, DEFAULT_LADDER};
pub use study::{reference_price, run_study, ConvergenceReport, ReferenceSource, ReportRow, CSV_HEADER};
