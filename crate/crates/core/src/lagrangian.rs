//! Equations of motion straight from a Lagrangian, with no symbolic step.
//!
//! A mechanical model supplies L(t, q, q̇) and optional holonomic
//! constraints C_j(t, q) as plain generic code over [`Scalar`]. Because
//! that bound has no `diff`, the recordings of L and C contain only
//! pointwise operations, so a single reverse sweep produces ∂L/∂q,
//! ∂L/∂q̇, and ∇C as values of the *underlying* scalar — Taylor series,
//! signature values, or nested adjoints alike. The Euler-Lagrange
//! residuals are then assembled with one outer time differentiation:
//!
//!   f_i = d/dt(∂L/∂q̇_i) − ∂L/∂q_i + Σ_j λ_j ∂C_j/∂q_i,   i < n_q
//!   f_{n_q + j} = C_j(t, q)
//!
//! The trick making d/dt available is that q̇ is formed by `diff` *before*
//! recording: the tape sees q and q̇ as independent inputs whose values
//! happen to be linked series, and the chain rule over those inputs is
//! exactly the partial-derivative structure the equations need.
//!
//! Multipliers enter exactly as written above, against the raw constraint
//! gradients; models that prefer the textbook normalization can rescale
//! their λ variables accordingly.

use crate::dae::{DaeSystem, Params, Residual};
use crate::error::{Error, Result};
use crate::reverse::{AdjointScalar, Tape};
use crate::scalar::{DiffScalar, Scalar};

/// A mechanical system described by its Lagrangian.
///
/// Variables of the resulting DAE are ordered q_0..q_{n_q-1}, then one
/// multiplier per constraint, then any extra variables consumed by
/// [`post_hook`](LagrangianModel::post_hook).
pub trait LagrangianModel: Send + Sync + 'static {
    /// Number of generalized coordinates.
    fn n_q(&self) -> usize;

    /// Number of holonomic constraints (and multipliers).
    fn n_c(&self) -> usize;

    /// Extra variables beyond coordinates and multipliers (driving inputs,
    /// controls); the model's `post_hook` must append one equation each.
    fn n_extra(&self) -> usize {
        0
    }

    /// The Lagrangian. Generic over plain scalars, so it cannot
    /// differentiate with respect to time; the assembly does that once,
    /// outside.
    fn lagrangian<S: Scalar>(&self, t: &S, q: &[S], qdot: &[S]) -> S;

    /// Constraint `idx` as a function of time and coordinates only.
    fn constraint<S: Scalar>(&self, idx: usize, t: &S, q: &[S]) -> S {
        let _ = (idx, t, q);
        unreachable!("model declares no constraints")
    }

    /// Adjust the assembled equations in place: couple extra variables
    /// into the motion equations and append their defining equations.
    fn post_hook<S: DiffScalar>(&self, t: &S, z: &[S], f: &mut Vec<S>) {
        let _ = (t, z, f);
    }
}

/// Split the leading DAE variables into recorded coordinate and velocity
/// inputs on a fresh tape. The velocities are the time derivatives of the
/// coordinate series, formed before recording, so the tape itself stays
/// free of shift nodes and plain gradient sweeps apply.
#[allow(clippy::type_complexity)]
pub fn init_q_qp<S: DiffScalar>(
    n_q: usize,
    z: &[S],
) -> Result<(Tape<S>, Vec<AdjointScalar<S>>, Vec<AdjointScalar<S>>)> {
    for zi in z.iter().take(n_q) {
        if let Some(p) = zi.series_order() {
            if p < 2 {
                return Err(Error::InsufficientOrder {
                    op: "Lagrangian coordinate series",
                    needed: 2,
                    have: p,
                });
            }
        }
    }
    let tape = Tape::new();
    let q: Vec<_> = z.iter().take(n_q).map(|zi| tape.input(zi.clone())).collect();
    let qd: Vec<_> = z.iter().take(n_q).map(|zi| tape.input(zi.diff(1))).collect();
    Ok((tape, q, qd))
}

/// Assemble the Euler-Lagrange residuals for `model` at (t, z).
pub fn setup_equations<S: DiffScalar, M: LagrangianModel>(
    model: &M,
    t: &S,
    z: &[S],
) -> Result<Vec<S>> {
    let n_q = model.n_q();
    let n_c = model.n_c();
    assert_eq!(z.len(), n_q + n_c + model.n_extra());

    let (tape, q, qd) = init_q_qp(n_q, z)?;
    let t_adj = AdjointScalar::constant(t.clone());
    let lag = model.lagrangian(&t_adj, &q, &qd);
    let grads = tape.gradients(&lag)?;
    let (dl_dq, dl_dqd) = grads.split_at(n_q);

    let mut grad_c = Vec::with_capacity(n_c);
    let mut c_values = Vec::with_capacity(n_c);
    for j in 0..n_c {
        let ctape = Tape::new();
        let cq: Vec<_> = z.iter().take(n_q).map(|zi| ctape.input(zi.clone())).collect();
        let tcon = AdjointScalar::constant(t.clone());
        let cj = model.constraint(j, &tcon, &cq);
        c_values.push(cj.value().clone());
        grad_c.push(ctape.gradients(&cj)?);
    }

    let mut f = Vec::with_capacity(n_q + n_c);
    for i in 0..n_q {
        let mut fi = dl_dqd[i].diff(1) - dl_dq[i].clone();
        for j in 0..n_c {
            fi = fi + z[n_q + j].clone() * grad_c[j][i].clone();
        }
        f.push(fi);
    }
    f.extend(c_values);
    model.post_hook(t, z, &mut f);
    if f.len() != z.len() {
        return Err(Error::Internal(format!(
            "Lagrangian assembly produced {} equations for {} variables",
            f.len(),
            z.len()
        )));
    }
    Ok(f)
}

/// Kinetic energy of a uniform thin rod of mass m whose endpoint velocities
/// are (v0x, v0y) and (v1x, v1y): with a linear velocity profile along the
/// rod, ½m∫₀¹|v(s)|²ds collapses to m/6 (v0·v0 + v0·v1 + v1·v1).
pub fn rod_ke<S: Scalar>(m: f64, v0x: &S, v0y: &S, v1x: &S, v1y: &S) -> S {
    let d00 = v0x.sqr() + v0y.sqr();
    let d01 = v0x.clone() * v1x.clone() + v0y.clone() * v1y.clone();
    let d11 = v1x.sqr() + v1y.sqr();
    (d00 + d01 + d11) * (m / 6.0)
}

/// The Hamiltonian Σ q̇_i ∂L/∂q̇_i − L at a plain numeric point, by one
/// scalar-valued recording. For time-independent kinetic-minus-potential
/// Lagrangians this is the conserved total energy.
pub fn energy<M: LagrangianModel>(model: &M, t: f64, q: &[f64], qdot: &[f64]) -> Result<f64> {
    assert_eq!(q.len(), model.n_q());
    assert_eq!(qdot.len(), model.n_q());
    let tape = Tape::new();
    let qa: Vec<_> = q.iter().map(|&v| tape.input(v)).collect();
    let qda: Vec<_> = qdot.iter().map(|&v| tape.input(v)).collect();
    let t_adj = AdjointScalar::constant(t);
    let lag = model.lagrangian(&t_adj, &qa, &qda);
    let grads = tape.gradients(&lag)?;
    let mut h = -lag.value();
    for (qd, g) in qdot.iter().zip(&grads[model.n_q()..]) {
        h += qd * g;
    }
    Ok(h)
}

struct LagrangianResidual<M: LagrangianModel> {
    model: M,
}

impl<M: LagrangianModel> Residual for LagrangianResidual<M> {
    fn dim(&self) -> usize {
        self.model.n_q() + self.model.n_c() + self.model.n_extra()
    }

    fn eval<S: DiffScalar>(&self, t: &S, z: &[S]) -> Vec<S> {
        // The toolkit always evaluates with at least d_j = 2 orders on the
        // coordinates, so the order check cannot fire on that path.
        setup_equations(&self.model, t, z).expect("Lagrangian evaluation")
    }
}

/// Wrap a Lagrangian model as a [`DaeSystem`] with the given variable names.
pub fn build_dae<M: LagrangianModel>(model: M, names: Vec<String>, params: Params) -> DaeSystem {
    DaeSystem::new(names, params, LagrangianResidual { model })
}
