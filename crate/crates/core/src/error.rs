//! Error type shared across the crate.
//!
//! Errors are split roughly into three families: series/evaluation errors
//! (domain violations, missing coefficients), structural errors (singular
//! structure, bad offsets, invalid state selections), and runtime errors
//! from the nonlinear solves and integrators. The CLI maps `is_usage` errors
//! to exit code 1 and everything else to exit code 2.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Division, sqrt, log, or pow hit a singular or out-of-domain leading
    /// coefficient (for example division by a series with zero constant term).
    SingularSeries { op: &'static str },
    /// An operation needed more Taylor coefficients than the operand carries.
    InsufficientOrder { op: &'static str, needed: usize, have: usize },
    /// Residual evaluation produced a non-finite coefficient.
    SingularEvaluation { equation: usize },
    /// No transversal of finite signature entries exists. The listed rows
    /// collectively involve only the listed columns (a Hall violator).
    StructurallySingular { rows: Vec<usize>, cols: Vec<usize> },
    /// The offset fixed-point iteration hit its cap; the supplied transversal
    /// is not a highest-value one.
    NotMaximalTransversal,
    /// A Jacobian needed by the solver is numerically singular.
    SingularJacobian { what: String, rcond: f64 },
    /// A dummy-derivative specification failed validation.
    InvalidDdSpec { reason: String },
    /// Fixed initial items do not form a valid state selection.
    InconsistentIc { reason: String },
    /// A stage Newton iteration failed to converge. `worst` lists the most
    /// violated equations and their residuals.
    NewtonFailure { t: f64, stage: i64, worst: Vec<(String, f64)> },
    /// The current state selection broke down at `t` (ill-conditioned pivot
    /// block or non-convergent solve) and no re-selection fixed it.
    ChartFailure { t: f64, detail: String },
    /// Integration step size shrank below the representable floor.
    StepSizeUnderflow { t: f64 },
    /// The step budget was exhausted before reaching the end time.
    MaxStepsExceeded { t: f64, steps: usize },
    /// Bad solver configuration (caller error).
    InvalidConfig(String),
    /// Bad problem parameters or unknown parameter/IC names (caller error).
    InvalidParams(String),
    /// Unknown problem name (caller error).
    UnknownProblem { name: String, known: Vec<String> },
    /// A request the library cannot serve (caller error).
    Unsupported(String),
    /// Internal invariant violation; indicates a bug.
    Internal(String),
}

impl Error {
    /// True for errors caused by how the library was called rather than by
    /// numerics. The CLI maps these to exit code 1.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidParams(_)
                | Error::UnknownProblem { .. }
                | Error::Unsupported(_)
                | Error::InvalidDdSpec { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SingularSeries { op } => {
                write!(f, "singular series operation: {op} at a non-invertible leading coefficient")
            }
            Error::InsufficientOrder { op, needed, have } => {
                write!(f, "{op}: series carries order {have} but order {needed} is required")
            }
            Error::SingularEvaluation { equation } => {
                write!(f, "residual {equation} evaluated to a non-finite coefficient")
            }
            Error::StructurallySingular { rows, cols } => {
                write!(
                    f,
                    "structurally singular system: equations {rows:?} involve only variables {cols:?}"
                )
            }
            Error::NotMaximalTransversal => {
                write!(f, "offset iteration did not converge: transversal is not highest-value")
            }
            Error::SingularJacobian { what, rcond } => {
                write!(f, "singular {what} (reciprocal condition estimate {rcond:.3e})")
            }
            Error::InvalidDdSpec { reason } => write!(f, "invalid dummy-derivative spec: {reason}"),
            Error::InconsistentIc { reason } => {
                write!(f, "inconsistent initial conditions: {reason}")
            }
            Error::NewtonFailure { t, stage, worst } => {
                write!(f, "Newton failed at t = {t:.6e}, stage {stage}; worst residuals:")?;
                for (name, r) in worst {
                    write!(f, " {name} = {r:.3e}")?;
                }
                Ok(())
            }
            Error::ChartFailure { t, detail } => {
                write!(f, "state selection broke down at t = {t:.6e}: {detail}")
            }
            Error::StepSizeUnderflow { t } => write!(f, "step size underflow at t = {t:.6e}"),
            Error::MaxStepsExceeded { t, steps } => {
                write!(f, "exceeded {steps} steps at t = {t:.6e}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::UnknownProblem { name, known } => {
                write!(f, "unknown problem '{name}'; available: {}", known.join(", "))
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
