//! Dependency-order tracking for structural analysis.
//!
//! A [`SignatureScalar`] records, for each system variable, the highest time
//! derivative of that variable the value depends on. Running a residual on
//! these scalars (one basis scalar per variable, the time argument a plain
//! constant) performs an abstract interpretation of the residual code: the
//! output of equation i is exactly row i of the signature matrix
//! σ_ij = highest order of x_j appearing in f_i, with absent variables as −∞.
//!
//! The arithmetic is deliberately blunt: every binary operation takes the
//! entrywise max over the union of the operand maps, every smooth elementary
//! function keeps the map, and `diff(·, q)` shifts every entry up by q.
//! Cancellation is invisible at this level, which is the right behavior for
//! structure: rescaling an equation or adding terms never changes σ.

use crate::scalar::{DiffScalar, Scalar};
use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Abstract value: variable index → highest derivative order encountered.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SignatureScalar {
    deps: BTreeMap<usize, u32>,
}

impl SignatureScalar {
    /// The basis scalar for variable j: depends on x_j at order 0.
    pub fn variable(j: usize) -> Self {
        SignatureScalar { deps: BTreeMap::from([(j, 0)]) }
    }

    /// No dependencies (numeric constants, the time argument).
    pub fn constant() -> Self {
        SignatureScalar::default()
    }

    /// Highest derivative order of variable j, or None when absent.
    pub fn order_of(&self, j: usize) -> Option<u32> {
        self.deps.get(&j).copied()
    }

    pub fn deps(&self) -> &BTreeMap<usize, u32> {
        &self.deps
    }

    fn combine(a: &Self, b: &Self) -> Self {
        let mut deps = a.deps.clone();
        for (&j, &q) in &b.deps {
            deps.entry(j).and_modify(|e| *e = (*e).max(q)).or_insert(q);
        }
        SignatureScalar { deps }
    }

    fn shift(&self, q: u32) -> Self {
        SignatureScalar { deps: self.deps.iter().map(|(&j, &o)| (j, o + q)).collect() }
    }
}

macro_rules! sig_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for SignatureScalar {
            type Output = SignatureScalar;
            fn $method(self, rhs: SignatureScalar) -> SignatureScalar {
                SignatureScalar::combine(&self, &rhs)
            }
        }
        impl $trait<f64> for SignatureScalar {
            type Output = SignatureScalar;
            fn $method(self, _rhs: f64) -> SignatureScalar {
                self
            }
        }
    };
}

sig_binop!(Add, add);
sig_binop!(Sub, sub);
sig_binop!(Mul, mul);
sig_binop!(Div, div);

impl Neg for SignatureScalar {
    type Output = SignatureScalar;
    fn neg(self) -> SignatureScalar {
        self
    }
}

impl Scalar for SignatureScalar {
    fn from_f64(_c: f64) -> Self {
        Self::constant()
    }
    fn sqr(&self) -> Self {
        self.clone()
    }
    fn sqrt(&self) -> Self {
        self.clone()
    }
    fn sin(&self) -> Self {
        self.clone()
    }
    fn cos(&self) -> Self {
        self.clone()
    }
    fn exp(&self) -> Self {
        self.clone()
    }
    fn ln(&self) -> Self {
        self.clone()
    }
    fn powi(&self, _n: i32) -> Self {
        self.clone()
    }
    fn powf(&self, _e: f64) -> Self {
        self.clone()
    }
}

impl DiffScalar for SignatureScalar {
    fn diff(&self, q: usize) -> Self {
        self.shift(q as u32)
    }
}
