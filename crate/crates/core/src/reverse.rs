//! Reverse-mode (adjoint) differentiation layered over any inner scalar.
//!
//! [`AdjointScalar<S>`] wraps an inner scalar and records every operation on
//! a [`Tape`]. The local partial derivatives are stored as inner-scalar
//! values, so the adjoint sweep runs in the arithmetic of `S`:
//!
//! * `S = f64` — ordinary gradients,
//! * `S = TaylorScalar` — each gradient is a full Taylor series: the partial
//!   ∂f/∂x_i evaluated along the trajectory, ready to be differentiated in
//!   time again. This stacking is what makes Euler–Lagrange assembly and the
//!   DAE system Jacobian pure evaluations, with no symbolics anywhere,
//! * `S = SignatureScalar` — the gradient of a recorded function carries the
//!   union of the structural dependencies along all paths, so structural
//!   analysis runs through recorded code unchanged.
//!
//! Two sweeps are provided. [`Tape::gradients`] is the classic one: seed 1,
//! multiply-accumulate backwards; on Taylor inners the convolution algebra
//! makes the result coefficient-uniform, which is valid precisely because
//! time differentiation never appears *inside* a recording there (the
//! Lagrangian facility differentiates its arguments before declaring them as
//! independents). Recording `diff` is still allowed — DAE residuals do it —
//! and such tapes must use [`Tape::coefficient_sensitivities`], which tracks
//! absolute coefficient indices: a `diff(·, q)` node moves sensitivity from
//! coefficient m of its input to coefficient m−q of its output with weight
//! m!/(m−q)!, a factor that depends on m itself, not only on the lag. That
//! sweep is anchored at the output's top coefficient and propagates a window
//! of sensitivities ∂(out)_k / ∂(node)_{k+s}, s = 0..window.
//!
//! One tape per recording; a tape is single-threaded and recordings are
//! independent of each other.

use crate::error::{Error, Result};
use crate::scalar::{DiffScalar, Scalar};
use crate::taylor::{falling, TaylorScalar};
use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::rc::Rc;

enum Dep<S> {
    /// d(node)/d(parent) as an inner-scalar value.
    Partial { parent: usize, weight: S },
    /// node = diff(parent, q): a linear reindexing, not a pointwise factor.
    Shift { parent: usize, q: usize },
}

struct Node<S> {
    deps: [Option<Dep<S>>; 2],
}

struct TapeInner<S> {
    nodes: Vec<Node<S>>,
    inputs: Vec<usize>,
}

/// Operation recorder; cheap to clone (shared handle).
pub struct Tape<S: Scalar> {
    inner: Rc<RefCell<TapeInner<S>>>,
}

impl<S: Scalar> Clone for Tape<S> {
    fn clone(&self) -> Self {
        Tape { inner: Rc::clone(&self.inner) }
    }
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { inner: Rc::new(RefCell::new(TapeInner { nodes: Vec::new(), inputs: Vec::new() })) }
    }

    fn same_as(&self, other: &Tape<S>) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    fn push(&self, deps: [Option<Dep<S>>; 2]) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node { deps });
        inner.nodes.len() - 1
    }

    /// Declare an independent variable with the given inner value.
    /// Gradient order follows declaration order.
    pub fn input(&self, value: S) -> AdjointScalar<S> {
        let idx = self.push([None, None]);
        self.inner.borrow_mut().inputs.push(idx);
        AdjointScalar { value, node: Some((idx, self.clone())) }
    }

    pub fn num_nodes(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inner.borrow().inputs.len()
    }

    /// Adjoint sweep with seed 1: gradient of `output` with respect to every
    /// input, in declaration order, as inner-scalar values.
    ///
    /// Errors if the recording contains a time-differentiation node; those
    /// tapes need [`Tape::coefficient_sensitivities`].
    pub fn gradients(&self, output: &AdjointScalar<S>) -> Result<Vec<S>> {
        let inner = self.inner.borrow();
        let zero = || S::from_f64(0.0);
        let out = match &output.node {
            None => return Ok(inner.inputs.iter().map(|_| zero()).collect()),
            Some((idx, tape)) => {
                assert!(self.same_as(tape), "output recorded on a different tape");
                *idx
            }
        };
        // Nodes only reference earlier nodes, so one reverse pass both
        // discovers reachability (adj[i] is Some) and accumulates adjoints.
        let mut adj: Vec<Option<S>> = (0..inner.nodes.len()).map(|_| None).collect();
        adj[out] = Some(S::from_f64(1.0));
        for i in (0..=out).rev() {
            let Some(a) = adj[i].clone() else { continue };
            for dep in inner.nodes[i].deps.iter().flatten() {
                match dep {
                    Dep::Partial { parent, weight } => {
                        let add = a.clone() * weight.clone();
                        adj[*parent] = Some(match adj[*parent].take() {
                            None => add,
                            Some(prev) => prev + add,
                        });
                    }
                    Dep::Shift { .. } => {
                        return Err(Error::Unsupported(
                            "recording contains a time derivative; use the anchored \
                             coefficient sweep"
                                .into(),
                        ))
                    }
                }
            }
        }
        Ok(inner.inputs.iter().map(|&i| adj[i].take().unwrap_or_else(zero)).collect())
    }
}

impl Tape<TaylorScalar> {
    /// Anchored adjoint sweep over Taylor coefficients.
    ///
    /// Let k be the index of the output's highest stored coefficient. For
    /// every input j the returned vector w_j satisfies
    ///
    ///   w_j[s] = ∂ (output coefficient k) / ∂ (input j coefficient k + s),
    ///
    /// for s = 0..=window. Sensitivities toward *higher* input coefficients
    /// exist exactly because `diff` nodes shift coefficients down; pointwise
    /// operations only move weight toward lower lags (a convolution with the
    /// stored partial), and a `diff(·, q)` node maps entry s to entry s + q
    /// with the exact factor (k+s+q)!/(k+s)!.
    ///
    /// The sweep tracks coefficient indices k..=k+window at every node and
    /// drops dependence that dips below the anchor k at an intermediate
    /// node. That restriction is exact in the structurally-recorded case:
    /// if input j carries exactly d_j orders and the output settles at
    /// order c_i, a backward path to input coefficient d_j makes
    /// c_i + (shifts on the path) − d_j ≤ c_i + σ_ij − d_j ≤ 0 down-moves
    /// in total, i.e. none, so no contributing path ever leaves the band.
    /// Recording inputs with *more* orders than the structure requires
    /// opens below-anchor routes (a shift raising a low coefficient back
    /// up) that this sweep intentionally does not follow; callers truncate
    /// inputs to their structural orders first.
    pub fn coefficient_sensitivities(
        &self,
        output: &AdjointScalar<TaylorScalar>,
        window: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let inner = self.inner.borrow();
        let zeros = || vec![0.0; window + 1];
        let out = match &output.node {
            None => return Ok(inner.inputs.iter().map(|_| zeros()).collect()),
            Some((idx, tape)) => {
                assert!(self.same_as(tape), "output recorded on a different tape");
                *idx
            }
        };
        let k = match output.value.series_order() {
            Some(p) => p,
            None => return Ok(inner.inputs.iter().map(|_| zeros()).collect()),
        };
        let mut adj: Vec<Option<Vec<f64>>> = (0..inner.nodes.len()).map(|_| None).collect();
        let mut seed = zeros();
        seed[0] = 1.0;
        adj[out] = Some(seed);
        for i in (0..=out).rev() {
            let Some(a) = adj[i].clone() else { continue };
            for dep in inner.nodes[i].deps.iter().flatten() {
                match dep {
                    Dep::Partial { parent, weight } => {
                        let slot = adj[*parent].get_or_insert_with(zeros);
                        for (sp, slot_sp) in slot.iter_mut().enumerate() {
                            let acc: f64 = a[sp..]
                                .iter()
                                .enumerate()
                                .map(|(r, &av)| av * weight.coeff(r))
                                .sum();
                            *slot_sp += acc;
                        }
                    }
                    Dep::Shift { parent, q } => {
                        let slot = adj[*parent].get_or_insert_with(zeros);
                        for (sp, slot_sp) in slot.iter_mut().enumerate().skip(*q) {
                            *slot_sp += a[sp - q] * falling(k + sp, *q);
                        }
                    }
                }
            }
        }
        Ok(inner.inputs.iter().map(|&i| adj[i].take().unwrap_or_else(zeros)).collect())
    }
}

/// Record `f` over fresh inputs on a fresh tape.
pub fn record<S: Scalar>(
    inputs: &[S],
    f: impl FnOnce(&[AdjointScalar<S>]) -> AdjointScalar<S>,
) -> (AdjointScalar<S>, Tape<S>) {
    let tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|v| tape.input(v.clone())).collect();
    (f(&vars), tape)
}

/// Inner scalar lifted onto a tape. Values without a node are constants.
pub struct AdjointScalar<S: Scalar> {
    value: S,
    node: Option<(usize, Tape<S>)>,
}

impl<S: Scalar> Clone for AdjointScalar<S> {
    fn clone(&self) -> Self {
        AdjointScalar { value: self.value.clone(), node: self.node.clone() }
    }
}

impl<S: Scalar> fmt::Debug for AdjointScalar<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdjointScalar")
            .field("value", &self.value)
            .field("recorded", &self.node.is_some())
            .finish()
    }
}

impl<S: Scalar> AdjointScalar<S> {
    pub fn constant(value: S) -> Self {
        AdjointScalar { value, node: None }
    }

    pub fn value(&self) -> &S {
        &self.value
    }

    pub fn into_value(self) -> S {
        self.value
    }

    fn tape_of(a: &Self, b: &Self) -> Option<Tape<S>> {
        match (&a.node, &b.node) {
            (Some((_, ta)), Some((_, tb))) => {
                assert!(ta.same_as(tb), "operands recorded on different tapes");
                Some(ta.clone())
            }
            (Some((_, t)), None) | (None, Some((_, t))) => Some(t.clone()),
            (None, None) => None,
        }
    }

    fn binary(a: &Self, b: &Self, value: S, da: S, db: S) -> Self {
        match Self::tape_of(a, b) {
            None => Self::constant(value),
            Some(tape) => {
                let deps = [
                    a.node.as_ref().map(|(i, _)| Dep::Partial { parent: *i, weight: da }),
                    b.node.as_ref().map(|(i, _)| Dep::Partial { parent: *i, weight: db }),
                ];
                let idx = tape.push(deps);
                AdjointScalar { value, node: Some((idx, tape)) }
            }
        }
    }

    fn unary(a: &Self, value: S, da: S) -> Self {
        match &a.node {
            None => Self::constant(value),
            Some((i, tape)) => {
                let idx = tape.push([Some(Dep::Partial { parent: *i, weight: da }), None]);
                AdjointScalar { value, node: Some((idx, tape.clone())) }
            }
        }
    }
}

impl<S: Scalar> Add for AdjointScalar<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let v = self.value.clone() + rhs.value.clone();
        Self::binary(&self, &rhs, v, S::from_f64(1.0), S::from_f64(1.0))
    }
}

impl<S: Scalar> Sub for AdjointScalar<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let v = self.value.clone() - rhs.value.clone();
        Self::binary(&self, &rhs, v, S::from_f64(1.0), S::from_f64(-1.0))
    }
}

impl<S: Scalar> Mul for AdjointScalar<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let v = self.value.clone() * rhs.value.clone();
        Self::binary(&self, &rhs, v, rhs.value.clone(), self.value.clone())
    }
}

impl<S: Scalar> Div for AdjointScalar<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = self.value.clone() / rhs.value.clone();
        let da = S::from_f64(1.0) / rhs.value.clone();
        let db = -(v.clone() / rhs.value.clone());
        Self::binary(&self, &rhs, v, da, db)
    }
}

impl<S: Scalar> Neg for AdjointScalar<S> {
    type Output = Self;
    fn neg(self) -> Self {
        let v = -self.value.clone();
        Self::unary(&self, v, S::from_f64(-1.0))
    }
}

macro_rules! adj_f64_op {
    ($trait:ident, $method:ident) => {
        impl<S: Scalar> $trait<f64> for AdjointScalar<S> {
            type Output = Self;
            fn $method(self, rhs: f64) -> Self {
                self.$method(Self::constant(S::from_f64(rhs)))
            }
        }
    };
}

adj_f64_op!(Add, add);
adj_f64_op!(Sub, sub);
adj_f64_op!(Mul, mul);
adj_f64_op!(Div, div);

impl<S: Scalar> Scalar for AdjointScalar<S> {
    fn from_f64(c: f64) -> Self {
        Self::constant(S::from_f64(c))
    }
    fn sqr(&self) -> Self {
        Self::unary(self, self.value.sqr(), self.value.clone() * 2.0)
    }
    fn sqrt(&self) -> Self {
        let v = self.value.sqrt();
        let d = S::from_f64(1.0) / (v.clone() * 2.0);
        Self::unary(self, v, d)
    }
    fn sin(&self) -> Self {
        Self::unary(self, self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        Self::unary(self, self.value.cos(), -self.value.sin())
    }
    fn exp(&self) -> Self {
        let v = self.value.exp();
        Self::unary(self, v.clone(), v)
    }
    fn ln(&self) -> Self {
        Self::unary(self, self.value.ln(), S::from_f64(1.0) / self.value.clone())
    }
    fn powi(&self, n: i32) -> Self {
        let d = self.value.powi(n - 1) * n as f64;
        Self::unary(self, self.value.powi(n), d)
    }
    fn powf(&self, e: f64) -> Self {
        let d = self.value.powf(e - 1.0) * e;
        Self::unary(self, self.value.powf(e), d)
    }
}

impl<S: DiffScalar> DiffScalar for AdjointScalar<S> {
    fn diff(&self, q: usize) -> Self {
        if q == 0 {
            return self.clone();
        }
        let v = self.value.diff(q);
        match &self.node {
            None => Self::constant(v),
            Some((i, tape)) => {
                let idx = tape.push([Some(Dep::Shift { parent: *i, q }), None]);
                AdjointScalar { value: v, node: Some((idx, tape.clone())) }
            }
        }
    }

    fn series_order(&self) -> Option<usize> {
        self.value.series_order()
    }
}
