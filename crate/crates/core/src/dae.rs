//! DAE system definition: a residual evaluator generic over the scalar type.
//!
//! A DAE is given as n residual functions f_i(t, x_1, x_2, ..., and their
//! time derivatives) = 0 in n variables, written once against the
//! [`DiffScalar`] interface. The same code is then run with
//!
//! * [`TaylorScalar`] inputs for numerical evaluation in power-series form,
//! * [`SignatureScalar`] inputs to extract the structure (which derivative
//!   orders of which variables each equation involves),
//! * [`AdjointScalar<TaylorScalar>`] inputs to obtain the system Jacobian.
//!
//! [`Residual`] is the trait user code implements; it is generic and hence
//! not object-safe, so [`DaeSystem`] stores it behind [`DynResidual`], a
//! monomorphized facade with one entry point per required instantiation.

use crate::error::{Error, Result};
use crate::reverse::AdjointScalar;
use crate::scalar::DiffScalar;
use crate::signature::SignatureScalar;
use crate::taylor::TaylorScalar;
use std::collections::BTreeMap;
use std::fmt;

/// Named real-valued parameters (masses, lengths, counts).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    map: BTreeMap<String, f64>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.map.insert(key.to_string(), value);
        self
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.map.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`")))
    }

    /// Fetch a parameter that must hold a non-negative integer.
    pub fn require_usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::InvalidParams(format!(
                "parameter `{key}` must be a non-negative integer, got {v}"
            )));
        }
        Ok(v as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in self.iter() {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Residual code of a DAE, written once, generic over the scalar.
///
/// Implementations must be structurally deterministic: the sequence of
/// operations may not depend on the values (the scalar interface offers no
/// comparisons, which enforces this for anything built from it alone).
/// Physical parameters are baked in at construction time.
pub trait Residual: Send + Sync + 'static {
    /// Number of equations and variables.
    fn dim(&self) -> usize;

    /// Evaluate all residuals at time `t` and variables `z`.
    fn eval<S: DiffScalar>(&self, t: &S, z: &[S]) -> Vec<S>;
}

/// Object-safe facade over [`Residual`]: one method per instantiation the
/// toolkit needs. Implemented for every `Residual` via a blanket impl.
pub trait DynResidual: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_taylor(&self, t: &TaylorScalar, z: &[TaylorScalar]) -> Vec<TaylorScalar>;
    fn eval_signature(&self, t: &SignatureScalar, z: &[SignatureScalar]) -> Vec<SignatureScalar>;
    fn eval_adjoint_taylor(
        &self,
        t: &AdjointScalar<TaylorScalar>,
        z: &[AdjointScalar<TaylorScalar>],
    ) -> Vec<AdjointScalar<TaylorScalar>>;
}

impl<R: Residual> DynResidual for R {
    fn dim(&self) -> usize {
        Residual::dim(self)
    }
    fn eval_taylor(&self, t: &TaylorScalar, z: &[TaylorScalar]) -> Vec<TaylorScalar> {
        self.eval(t, z)
    }
    fn eval_signature(&self, t: &SignatureScalar, z: &[SignatureScalar]) -> Vec<SignatureScalar> {
        self.eval(t, z)
    }
    fn eval_adjoint_taylor(
        &self,
        t: &AdjointScalar<TaylorScalar>,
        z: &[AdjointScalar<TaylorScalar>],
    ) -> Vec<AdjointScalar<TaylorScalar>> {
        self.eval(t, z)
    }
}

/// A DAE: residual evaluator, variable names, and the parameters it was
/// built with (kept for reporting; the evaluator has them baked in).
pub struct DaeSystem {
    names: Vec<String>,
    params: Params,
    residual: Box<dyn DynResidual>,
}

impl DaeSystem {
    pub fn new<R: Residual>(names: Vec<String>, params: Params, residual: R) -> Self {
        assert_eq!(
            names.len(),
            Residual::dim(&residual),
            "variable name count must match the residual dimension"
        );
        DaeSystem { names, params, residual: Box::new(residual) }
    }

    pub fn n(&self) -> usize {
        self.residual.dim()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Numerical evaluation on Taylor series. Checks arity and that every
    /// output coefficient is finite; IEEE specials surface here, naming the
    /// offending equation.
    pub fn eval_taylor(&self, t: &TaylorScalar, z: &[TaylorScalar]) -> Result<Vec<TaylorScalar>> {
        assert_eq!(z.len(), self.n(), "variable count mismatch");
        let f = self.residual.eval_taylor(t, z);
        if f.len() != self.n() {
            return Err(Error::Internal(format!(
                "residual returned {} values for a size-{} system",
                f.len(),
                self.n()
            )));
        }
        for (i, fi) in f.iter().enumerate() {
            if !fi.is_finite() {
                return Err(Error::SingularEvaluation { equation: i });
            }
        }
        Ok(f)
    }

    /// Structural evaluation: outputs carry, per variable, the highest
    /// derivative order the equation depends on.
    pub fn eval_signature(&self, z: &[SignatureScalar]) -> Result<Vec<SignatureScalar>> {
        assert_eq!(z.len(), self.n(), "variable count mismatch");
        let t = SignatureScalar::constant();
        let f = self.residual.eval_signature(&t, z);
        if f.len() != self.n() {
            return Err(Error::Internal(format!(
                "residual returned {} values for a size-{} system",
                f.len(),
                self.n()
            )));
        }
        Ok(f)
    }

    /// Recorded evaluation over Taylor series, for Jacobians via the
    /// adjoint sweeps.
    pub fn eval_adjoint_taylor(
        &self,
        t: &AdjointScalar<TaylorScalar>,
        z: &[AdjointScalar<TaylorScalar>],
    ) -> Result<Vec<AdjointScalar<TaylorScalar>>> {
        assert_eq!(z.len(), self.n(), "variable count mismatch");
        let f = self.residual.eval_adjoint_taylor(t, z);
        if f.len() != self.n() {
            return Err(Error::Internal(format!(
                "residual returned {} values for a size-{} system",
                f.len(),
                self.n()
            )));
        }
        Ok(f)
    }
}

impl fmt::Debug for DaeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DaeSystem")
            .field("n", &self.n())
            .field("names", &self.names)
            .field("params", &self.params)
            .finish()
    }
}
