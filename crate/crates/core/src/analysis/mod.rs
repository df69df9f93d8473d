//! Incomplete beta evaluation, closed-form bounds, extinction-time series
//! and the audit that compares them.

pub mod audit;
pub mod beta;
pub mod bounds;
pub mod extinction;

pub use audit::{bounds_audit, AuditGrids, AuditPoint, AuditSummary, BoundReport, Relation};
pub use beta::{reg_inc_beta, reg_inc_beta_exact, BetaArgs};
pub use bounds::{
    closed_form_bound, majority_failure_bound, omega_lower_bound, omega_scan, BoundKind,
};
pub use extinction::{expected_extinction_time, ExtinctionTime};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("parameter outside the bound's domain: {0}")]
    DomainViolation(String),
    #[error("expected A0 >= B0, got A0={a0}, B0={b0}")]
    ArgumentOrder { a0: u64, b0: u64 },
}
