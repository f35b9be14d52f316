//! Scalar abstractions that residual and Lagrangian code is written against.
//!
//! All model code in this crate (DAE residuals, Lagrangians, constraints) is
//! generic over a scalar type. Instantiating the same code with different
//! scalars yields different analyses of one definition:
//!
//! * [`f64`] — plain evaluation (no time dependence),
//! * [`crate::taylor::TaylorScalar`] — truncated Taylor series in time,
//! * [`crate::signature::SignatureScalar`] — dependency/derivative-order
//!   tracking for structural analysis,
//! * [`crate::reverse::AdjointScalar`] — reverse-mode overlay on any of the
//!   above, for gradients.
//!
//! [`Scalar`] covers arithmetic and smooth elementary functions. Absolute
//! value and comparisons are deliberately absent: model structure must not
//! branch on values. [`DiffScalar`] adds differentiation with respect to
//! time and is what DAE residuals require; a Lagrangian needs only
//! [`Scalar`] because the time derivatives of its arguments are taken
//! outside of it.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic plus smooth elementary functions.
pub trait Scalar:
    Clone
    + Debug
    + Add<Self, Output = Self>
    + Sub<Self, Output = Self>
    + Mul<Self, Output = Self>
    + Div<Self, Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Sized
    + 'static
{
    fn from_f64(c: f64) -> Self;

    fn sqr(&self) -> Self {
        self.clone() * self.clone()
    }
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, e: f64) -> Self {
        (self.ln() * e).exp()
    }
}

/// A scalar that knows its dependence on time.
pub trait DiffScalar: Scalar {
    /// q-th derivative with respect to time. `diff(x, 0)` is `x` itself.
    fn diff(&self, q: usize) -> Self;

    /// Number of Taylor coefficients the value carries beyond the constant
    /// term, if that notion applies. `None` means unbounded (constants,
    /// structural scalars).
    fn series_order(&self) -> Option<usize> {
        None
    }
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn sqr(&self) -> Self {
        self * self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
}
