//! Structural analysis and integration of differential-algebraic equations,
//! built on truncated Taylor series arithmetic and tape-based adjoints.
//!
//! The crate takes a DAE given only as executable residual code, generic
//! over a scalar type, and from that single definition derives everything
//! else: the signature matrix and offsets, the system Jacobian, a dummy
//! derivatives reduction with automatic state selection, consistent
//! initialization, and both a native Taylor integrator and a classical
//! Runge-Kutta driver over the reduced ODE. A companion facility builds
//! the residuals of mechanical systems directly from a Lagrangian.

pub mod dae;
pub mod error;
pub mod integrator;
pub mod lagrangian;
pub mod linalg;
pub mod problems;
pub mod reduction;
pub mod reverse;
pub mod scalar;
pub mod signature;
pub mod structural;
pub mod taylor;

pub use dae::{DaeSystem, Params, Residual};
pub use error::{Error, Result};
pub use integrator::{
    consistent_initialize, rk_integrate, taylor_integrate, IcSpec, IvpConfig, RunStats, Trajectory,
};
pub use lagrangian::{build_dae, energy, rod_ke, setup_equations, LagrangianModel};
pub use problems::{find, planets_invariants, registry, ProblemDef};
pub use reduction::{
    dd_switch, select_state_vector, solve_cascade, validate_dd_spec, AugmentedSystem, DdScheme,
    DdViolation, ItemLayout, ReducedOde,
};
pub use scalar::{DiffScalar, Scalar};
pub use signature::SignatureScalar;
pub use structural::{
    sa_friendly_check, sigma_table, system_jacobian, SaCheck, SigmaMatrix, StructuralResult,
    DEFAULT_SINGULAR_RCOND,
};
pub use taylor::TaylorScalar;
