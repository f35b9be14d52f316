//! Built-in example problems: a registry of ready-to-run systems, from
//! two-equation teaching DAEs up to the outer solar system.
//!
//! Each entry carries a builder (parameters in, [`DaeSystem`] out), default
//! parameters, default initial conditions shaped for
//! [`consistent_initialize`](crate::integrator::consistent_initialize), and,
//! where the dynamics conserve it, a total-energy hook for drift checks.

use crate::dae::{DaeSystem, Params, Residual};
use crate::error::{Error, Result};
use crate::integrator::IcSpec;
use crate::lagrangian::{build_dae, energy, rod_ke, LagrangianModel};
use crate::scalar::{DiffScalar, Scalar};

/// Total energy as a function of (params, t, values, first derivatives).
pub type EnergyFn = fn(&Params, f64, &[f64], &[f64]) -> f64;

/// One registry entry.
pub struct ProblemDef {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn(&Params) -> Result<DaeSystem>,
    pub default_params: fn() -> Params,
    /// Default initial data, shaped against the problem's structure.
    pub default_ics: fn(&Params) -> IcSpec,
    /// Present only when the dynamics conserve energy.
    pub energy: Option<EnergyFn>,
}

fn positive(params: &Params, key: &str, default: f64) -> Result<f64> {
    let v = params.get_or(key, default);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParams(format!("parameter `{key}` must be positive, got {v}")))
    }
}

fn non_negative(params: &Params, key: &str, default: f64) -> Result<f64> {
    let v = params.get_or(key, default);
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParams(format!("parameter `{key}` must be non-negative, got {v}")))
    }
}

fn chain_links(params: &Params) -> Result<usize> {
    let v = params.get_or("n", 2.0);
    if v.fract() != 0.0 || !(1.0..=64.0).contains(&v) {
        return Err(Error::InvalidParams(format!(
            "parameter `n` must be an integer in 1..=64, got {v}"
        )));
    }
    Ok(v as usize)
}

// ---------------------------------------------------------------------------
// Pendulum in cartesian coordinates, as a constrained Lagrangian system.

struct PendulumBob {
    m: f64,
    g: f64,
    l: f64,
}

impl LagrangianModel for PendulumBob {
    fn n_q(&self) -> usize {
        2
    }
    fn n_c(&self) -> usize {
        1
    }
    /// y is measured downward, so gravity raises the Lagrangian with y.
    fn lagrangian<S: Scalar>(&self, _t: &S, q: &[S], qdot: &[S]) -> S {
        (qdot[0].sqr() + qdot[1].sqr()) * (0.5 * self.m) + q[1].clone() * (self.m * self.g)
    }
    fn constraint<S: Scalar>(&self, _idx: usize, _t: &S, q: &[S]) -> S {
        q[0].sqr() + q[1].sqr() - self.l * self.l
    }
}

fn pendulum_model(params: &Params) -> Result<PendulumBob> {
    Ok(PendulumBob {
        m: positive(params, "m", 1.0)?,
        g: positive(params, "g", 9.81)?,
        l: positive(params, "l", 10.0)?,
    })
}

fn build_pendulum(params: &Params) -> Result<DaeSystem> {
    let model = pendulum_model(params)?;
    Ok(build_dae(model, vec!["x".into(), "y".into(), "lambda".into()], params.clone()))
}

fn pendulum_params() -> Params {
    Params::new().set("m", 1.0).set("g", 9.81).set("l", 10.0)
}

fn pendulum_ics(params: &Params) -> IcSpec {
    let l = params.get_or("l", 10.0);
    IcSpec {
        fixed: vec![((0, 0), 0.6 * l), ((0, 1), 0.0)],
        guesses: vec![((1, 0), 0.8 * l), ((2, 0), 0.4)],
    }
}

fn pendulum_energy(params: &Params, t: f64, q: &[f64], qdot: &[f64]) -> f64 {
    match pendulum_model(params) {
        Ok(model) => energy(&model, t, &q[..2], &qdot[..2]).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

// ---------------------------------------------------------------------------
// Pendulum as a single angle from the downward vertical: an unconstrained
// Lagrangian system, handy as a minimal second-order ODE.

struct ThetaPendulum {
    m: f64,
    g: f64,
    l: f64,
}

impl LagrangianModel for ThetaPendulum {
    fn n_q(&self) -> usize {
        1
    }
    fn n_c(&self) -> usize {
        0
    }
    fn lagrangian<S: Scalar>(&self, _t: &S, q: &[S], qdot: &[S]) -> S {
        qdot[0].sqr() * (0.5 * self.m * self.l * self.l) + q[0].cos() * (self.m * self.g * self.l)
    }
}

fn theta_model(params: &Params) -> Result<ThetaPendulum> {
    Ok(ThetaPendulum {
        m: positive(params, "m", 1.0)?,
        g: positive(params, "g", 9.81)?,
        l: positive(params, "l", 10.0)?,
    })
}

fn build_pendulum_theta(params: &Params) -> Result<DaeSystem> {
    let model = theta_model(params)?;
    Ok(build_dae(model, vec!["theta".into()], params.clone()))
}

fn theta_params() -> Params {
    Params::new().set("m", 1.0).set("g", 9.81).set("l", 10.0)
}

fn theta_ics(_params: &Params) -> IcSpec {
    IcSpec { fixed: vec![((0, 0), 0.01), ((0, 1), 0.0)], guesses: vec![] }
}

fn theta_energy(params: &Params, t: f64, q: &[f64], qdot: &[f64]) -> f64 {
    match theta_model(params) {
        Ok(model) => energy(&model, t, &q[..1], &qdot[..1]).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

// ---------------------------------------------------------------------------
// Prescribed-motion pendulum: a horizontal force u drives the bob so that
// x(t) = a sin(wt) exactly. Adds one unknown and one equation to the
// cartesian pendulum and leaves no differential degrees of freedom.

struct ControlledPendulum {
    inner: PendulumBob,
    a: f64,
    omega: f64,
}

impl LagrangianModel for ControlledPendulum {
    fn n_q(&self) -> usize {
        2
    }
    fn n_c(&self) -> usize {
        1
    }
    fn n_extra(&self) -> usize {
        1
    }
    fn lagrangian<S: Scalar>(&self, t: &S, q: &[S], qdot: &[S]) -> S {
        self.inner.lagrangian(t, q, qdot)
    }
    fn constraint<S: Scalar>(&self, idx: usize, t: &S, q: &[S]) -> S {
        self.inner.constraint(idx, t, q)
    }
    fn post_hook<S: DiffScalar>(&self, t: &S, z: &[S], f: &mut Vec<S>) {
        f[0] = f[0].clone() - z[3].clone();
        f.push(z[0].clone() - (t.clone() * self.omega).sin() * self.a);
    }
}

fn controlled_model(params: &Params) -> Result<ControlledPendulum> {
    let g = positive(params, "g", 9.8)?;
    let l = positive(params, "l", 10.0)?;
    let inner = PendulumBob { m: positive(params, "m", 1.0)?, g, l };
    let a = positive(params, "a", 1.0)?;
    if a >= l {
        return Err(Error::InvalidParams(format!(
            "drive amplitude a = {a} must be smaller than the rod length l = {l}"
        )));
    }
    let omega = positive(params, "omega", (g / l).sqrt())?;
    Ok(ControlledPendulum { inner, a, omega })
}

fn build_controlled_pendulum(params: &Params) -> Result<DaeSystem> {
    let model = controlled_model(params)?;
    Ok(build_dae(model, vec!["x".into(), "y".into(), "lambda".into(), "u".into()], params.clone()))
}

fn controlled_params() -> Params {
    Params::new().set("m", 1.0).set("g", 9.8).set("l", 10.0).set("a", 1.0)
}

fn controlled_ics(params: &Params) -> IcSpec {
    let l = params.get_or("l", 10.0);
    let g = params.get_or("g", 9.8);
    IcSpec { fixed: vec![], guesses: vec![((1, 0), l), ((2, 0), g / (2.0 * l)), ((3, 0), 0.0)] }
}

// ---------------------------------------------------------------------------
// Spring-mass chain: a block of mass M on a horizontal spring, with n rigid
// rods of mass m and length l hinged below it in a chain. Coordinates are
// the block position x0, the joint positions (x_i, y_i), and one multiplier
// per rod; y points downward.

struct SpringChain {
    n: usize,
    big_m: f64,
    m: f64,
    k: f64,
    l: f64,
    g: f64,
}

impl SpringChain {
    fn joint<S: Scalar>(&self, q: &[S], i: usize) -> (S, S) {
        if i == 0 {
            (q[0].clone(), S::from_f64(0.0))
        } else {
            (q[i].clone(), q[self.n + i].clone())
        }
    }

    fn joint_velocity<S: Scalar>(&self, qdot: &[S], i: usize) -> (S, S) {
        if i == 0 {
            (qdot[0].clone(), S::from_f64(0.0))
        } else {
            (qdot[i].clone(), qdot[self.n + i].clone())
        }
    }
}

impl LagrangianModel for SpringChain {
    fn n_q(&self) -> usize {
        2 * self.n + 1
    }
    fn n_c(&self) -> usize {
        self.n
    }
    fn lagrangian<S: Scalar>(&self, _t: &S, q: &[S], qdot: &[S]) -> S {
        let mut lag = qdot[0].sqr() * (0.5 * self.big_m);
        for i in 1..=self.n {
            let (ax, ay) = self.joint_velocity(qdot, i - 1);
            let (bx, by) = self.joint_velocity(qdot, i);
            lag = lag + rod_ke(self.m, &ax, &ay, &bx, &by);
        }
        // Spring energy, minus gravity: each rod's center of mass sits at
        // the mean of its endpoints, and depth increases potential payoff.
        let mut depth = S::from_f64(0.0);
        for i in 1..self.n {
            depth = depth + q[self.n + i].clone();
        }
        depth = depth + q[2 * self.n].clone() * 0.5;
        lag - q[0].sqr() * (0.5 * self.k) + depth * (self.m * self.g)
    }
    fn constraint<S: Scalar>(&self, idx: usize, _t: &S, q: &[S]) -> S {
        let (ax, ay) = self.joint(q, idx);
        let (bx, by) = self.joint(q, idx + 1);
        (bx - ax).sqr() + (by - ay).sqr() - self.l * self.l
    }
}

fn chain_model(params: &Params) -> Result<SpringChain> {
    Ok(SpringChain {
        n: chain_links(params)?,
        big_m: positive(params, "M", 5.0)?,
        m: positive(params, "m", 2.0)?,
        k: non_negative(params, "k", 10.0)?,
        l: positive(params, "l", 2.0)?,
        g: positive(params, "g", 9.8)?,
    })
}

fn chain_names(n: usize) -> Vec<String> {
    let mut names = vec!["x0".to_string()];
    names.extend((1..=n).map(|i| format!("x{i}")));
    names.extend((1..=n).map(|i| format!("y{i}")));
    names.extend((1..=n).map(|i| format!("lambda{i}")));
    names
}

fn build_spring_chain(params: &Params) -> Result<DaeSystem> {
    let model = chain_model(params)?;
    let names = chain_names(model.n);
    Ok(build_dae(model, names, params.clone()))
}

fn chain_params() -> Params {
    Params::new()
        .set("n", 2.0)
        .set("M", 5.0)
        .set("m", 2.0)
        .set("k", 10.0)
        .set("l", 2.0)
        .set("g", 9.8)
}

fn chain_ics(params: &Params) -> IcSpec {
    let n = chain_links(params).unwrap_or(2);
    let l = params.get_or("l", 2.0);
    // Everything at rest, block displaced to x0 = 4, rods stretched out
    // horizontally to the left. The y positions are states here; the x
    // positions follow from the rod constraints.
    let mut fixed = vec![((0, 0), 4.0), ((0, 1), 0.0)];
    let mut guesses = Vec::new();
    for i in 1..=n {
        fixed.push(((n + i, 0), 0.0));
        fixed.push(((n + i, 1), 0.0));
        guesses.push(((i, 0), 4.0 - i as f64 * l));
    }
    IcSpec { fixed, guesses }
}

fn chain_energy(params: &Params, t: f64, q: &[f64], qdot: &[f64]) -> f64 {
    match chain_model(params) {
        Ok(model) => {
            let nq = model.n_q();
            energy(&model, t, &q[..nq], &qdot[..nq]).unwrap_or(f64::NAN)
        }
        Err(_) => f64::NAN,
    }
}

// ---------------------------------------------------------------------------
// The same physics for one rod, written without constraints: block position
// x and rod angle theta from the downward vertical. The rod has length 2a
// and turns about its upper end.

struct SpringTheta {
    big_m: f64,
    m: f64,
    k: f64,
    a: f64,
    g: f64,
}

impl LagrangianModel for SpringTheta {
    fn n_q(&self) -> usize {
        2
    }
    fn n_c(&self) -> usize {
        0
    }
    fn lagrangian<S: Scalar>(&self, _t: &S, q: &[S], qdot: &[S]) -> S {
        let kinetic = qdot[0].sqr() * (0.5 * (self.big_m + self.m))
            + qdot[0].clone() * qdot[1].clone() * q[1].cos() * (self.m * self.a)
            + qdot[1].sqr() * (2.0 / 3.0 * self.m * self.a * self.a);
        let potential =
            q[0].sqr() * (0.5 * self.k) + (-q[1].cos() + 1.0) * (self.m * self.g * self.a);
        kinetic - potential
    }
}

fn spring_theta_model(params: &Params) -> Result<SpringTheta> {
    Ok(SpringTheta {
        big_m: positive(params, "M", 5.0)?,
        m: positive(params, "m", 2.0)?,
        k: non_negative(params, "k", 10.0)?,
        a: positive(params, "a", 1.0)?,
        g: positive(params, "g", 9.8)?,
    })
}

fn build_spring_theta(params: &Params) -> Result<DaeSystem> {
    let model = spring_theta_model(params)?;
    Ok(build_dae(model, vec!["x".into(), "theta".into()], params.clone()))
}

fn spring_theta_params() -> Params {
    Params::new().set("M", 5.0).set("m", 2.0).set("k", 10.0).set("a", 1.0).set("g", 9.8)
}

fn spring_theta_ics(_params: &Params) -> IcSpec {
    IcSpec {
        fixed: vec![
            ((0, 0), 4.0),
            ((0, 1), 0.0),
            ((1, 0), -std::f64::consts::FRAC_PI_2),
            ((1, 1), 0.0),
        ],
        guesses: vec![],
    }
}

fn spring_theta_energy(params: &Params, t: f64, q: &[f64], qdot: &[f64]) -> f64 {
    match spring_theta_model(params) {
        Ok(model) => energy(&model, t, &q[..2], &qdot[..2]).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

// ---------------------------------------------------------------------------
// Sun and the five outer planets, with positions relative to the sun as the
// 15 generalized coordinates. The Lagrangian converts to barycentric
// positions (the sun sits at minus the mass-weighted planet mean), so total
// linear momentum is zero by construction. Gaussian-style units: lengths in
// AU, times in units of 100 days, G folded into `k2`.

/// Gravitational constant in the data set's units.
pub const FIVE_BODY_K2: f64 = 2.95912208286;

/// Masses of the sun (plus inner planets) and Jupiter through Pluto.
pub const FIVE_BODY_MASSES: [f64; 6] = [
    1.00000597682,
    9.54786104043e-4,
    2.85583733151e-4,
    4.37273164546e-5,
    5.17759138449e-5,
    2.77777777778e-6,
];

/// Heliocentric positions at the epoch, AU.
pub const FIVE_BODY_POSITIONS: [[f64; 3]; 5] = [
    [3.42947415189, 3.35386959711, 1.35494901715],
    [6.64145542550, 5.97156957878, 2.18231499728],
    [11.2630437207, 14.6952576794, 6.27960525067],
    [-30.1552268759, 1.65699966404, 1.43785752721],
    [-21.1238353380, 28.4465098142, 15.3882659679],
];

/// Heliocentric velocities at the epoch, AU per time unit.
pub const FIVE_BODY_VELOCITIES: [[f64; 3]; 5] = [
    [-0.557160570446, 0.505696783289, 0.230578543901],
    [-0.415570776342, 0.365682722812, 0.169143213293],
    [-0.325325669158, 0.189706021964, 0.0877265322780],
    [-0.0240476254170, -0.287659532608, -0.117219543175],
    [-0.176860753121, -0.216393453025, -0.0148647893090],
];

struct Planets {
    k2: f64,
    masses: [f64; 6],
}

impl Planets {
    /// Barycentric positions (or velocities) of all six bodies from the
    /// five sun-relative vectors.
    fn absolute<S: Scalar>(&self, rel: &[S]) -> Vec<[S; 3]> {
        let mtot: f64 = self.masses.iter().sum();
        let mut shift = [S::from_f64(0.0), S::from_f64(0.0), S::from_f64(0.0)];
        for i in 1..=5 {
            for (axis, s) in shift.iter_mut().enumerate() {
                *s = s.clone() + rel[3 * (i - 1) + axis].clone() * (self.masses[i] / mtot);
            }
        }
        let mut out = Vec::with_capacity(6);
        out.push([-shift[0].clone(), -shift[1].clone(), -shift[2].clone()]);
        for i in 1..=5 {
            out.push([
                rel[3 * (i - 1)].clone() - shift[0].clone(),
                rel[3 * (i - 1) + 1].clone() - shift[1].clone(),
                rel[3 * (i - 1) + 2].clone() - shift[2].clone(),
            ]);
        }
        out
    }
}

impl LagrangianModel for Planets {
    fn n_q(&self) -> usize {
        15
    }
    fn n_c(&self) -> usize {
        0
    }
    fn lagrangian<S: Scalar>(&self, _t: &S, q: &[S], qdot: &[S]) -> S {
        let r = self.absolute(q);
        let v = self.absolute(qdot);
        let mut lag = S::from_f64(0.0);
        for (i, vi) in v.iter().enumerate() {
            lag = lag + (vi[0].sqr() + vi[1].sqr() + vi[2].sqr()) * (0.5 * self.masses[i]);
        }
        for i in 0..6 {
            for j in i + 1..6 {
                let d2 = (r[i][0].clone() - r[j][0].clone()).sqr()
                    + (r[i][1].clone() - r[j][1].clone()).sqr()
                    + (r[i][2].clone() - r[j][2].clone()).sqr();
                lag = lag + S::from_f64(self.k2 * self.masses[i] * self.masses[j]) / d2.sqrt();
            }
        }
        lag
    }
}

fn planets_model(params: &Params) -> Result<Planets> {
    let mut masses = [0.0; 6];
    for (i, m) in masses.iter_mut().enumerate() {
        *m = positive(params, &format!("m{i}"), FIVE_BODY_MASSES[i])?;
    }
    Ok(Planets { k2: positive(params, "k2", FIVE_BODY_K2)?, masses })
}

fn planet_names() -> Vec<String> {
    let mut names = Vec::new();
    for i in 1..=5 {
        for axis in ["x", "y", "z"] {
            names.push(format!("{axis}{i}"));
        }
    }
    names
}

fn build_planets(params: &Params) -> Result<DaeSystem> {
    let model = planets_model(params)?;
    Ok(build_dae(model, planet_names(), params.clone()))
}

fn planets_params() -> Params {
    let mut p = Params::new().set("k2", FIVE_BODY_K2);
    for (i, m) in FIVE_BODY_MASSES.iter().enumerate() {
        p = p.set(&format!("m{i}"), *m);
    }
    p
}

fn planets_ics(_params: &Params) -> IcSpec {
    let mut fixed = Vec::with_capacity(30);
    for i in 0..5 {
        for axis in 0..3 {
            fixed.push(((3 * i + axis, 0), FIVE_BODY_POSITIONS[i][axis]));
            fixed.push(((3 * i + axis, 1), FIVE_BODY_VELOCITIES[i][axis]));
        }
    }
    IcSpec { fixed, guesses: vec![] }
}

fn planets_energy(params: &Params, _t: f64, q: &[f64], qdot: &[f64]) -> f64 {
    planets_invariants(params, q, qdot).map(|(e, _)| e).unwrap_or(f64::NAN)
}

/// Total energy and angular momentum of the barycentric six-body system.
pub fn planets_invariants(params: &Params, q: &[f64], qdot: &[f64]) -> Result<(f64, [f64; 3])> {
    let model = planets_model(params)?;
    let r = model.absolute(&q[..15]);
    let v = model.absolute(&qdot[..15]);
    let mut e = 0.0;
    let mut l = [0.0; 3];
    for i in 0..6 {
        let m = model.masses[i];
        e += 0.5 * m * (v[i][0] * v[i][0] + v[i][1] * v[i][1] + v[i][2] * v[i][2]);
        l[0] += m * (r[i][1] * v[i][2] - r[i][2] * v[i][1]);
        l[1] += m * (r[i][2] * v[i][0] - r[i][0] * v[i][2]);
        l[2] += m * (r[i][0] * v[i][1] - r[i][1] * v[i][0]);
    }
    for i in 0..6 {
        for j in i + 1..6 {
            let d = ((r[i][0] - r[j][0]).powi(2)
                + (r[i][1] - r[j][1]).powi(2)
                + (r[i][2] - r[j][2]).powi(2))
            .sqrt();
            e -= model.k2 * model.masses[i] * model.masses[j] / d;
        }
    }
    Ok((e, l))
}

// ---------------------------------------------------------------------------
// Teaching-scale two-equation systems driven by u(t) = sin t.

/// x1 follows the drive, x2 integrates it: one free constant.
struct ToyIntegrator;
impl Residual for ToyIntegrator {
    fn dim(&self) -> usize {
        2
    }
    fn eval<S: DiffScalar>(&self, t: &S, z: &[S]) -> Vec<S> {
        vec![z[0].clone() - t.sin(), z[0].clone() - z[1].diff(1)]
    }
}

/// x2 follows the drive, x1 is its derivative: fully determined.
struct ToyDifferentiator;
impl Residual for ToyDifferentiator {
    fn dim(&self) -> usize {
        2
    }
    fn eval<S: DiffScalar>(&self, t: &S, z: &[S]) -> Vec<S> {
        vec![z[1].clone() - t.sin(), z[0].clone() - z[1].diff(1)]
    }
}

/// Eliminating x1 leaves the scalar ODE x2' = x2 + sin t.
struct ToyOde;
impl Residual for ToyOde {
    fn dim(&self) -> usize {
        2
    }
    fn eval<S: DiffScalar>(&self, t: &S, z: &[S]) -> Vec<S> {
        vec![z[0].clone() - z[1].clone() - t.sin(), z[0].clone() - z[1].diff(1)]
    }
}

fn toy_names() -> Vec<String> {
    vec!["x1".into(), "x2".into()]
}

fn build_toy_integrator(params: &Params) -> Result<DaeSystem> {
    Ok(DaeSystem::new(toy_names(), params.clone(), ToyIntegrator))
}

fn build_toy_differentiator(params: &Params) -> Result<DaeSystem> {
    Ok(DaeSystem::new(toy_names(), params.clone(), ToyDifferentiator))
}

fn build_toy_ode(params: &Params) -> Result<DaeSystem> {
    Ok(DaeSystem::new(toy_names(), params.clone(), ToyOde))
}

fn no_params() -> Params {
    Params::new()
}

fn toy_state_ic(_params: &Params) -> IcSpec {
    IcSpec { fixed: vec![((1, 0), 1.0)], guesses: vec![] }
}

fn no_ics(_params: &Params) -> IcSpec {
    IcSpec::default()
}

// ---------------------------------------------------------------------------

static REGISTRY: &[ProblemDef] = &[
    ProblemDef {
        name: "pendulum",
        summary: "planar pendulum in cartesian coordinates with a length constraint",
        build: build_pendulum,
        default_params: pendulum_params,
        default_ics: pendulum_ics,
        energy: Some(pendulum_energy),
    },
    ProblemDef {
        name: "pendulum_theta",
        summary: "planar pendulum as a single angle, no constraints",
        build: build_pendulum_theta,
        default_params: theta_params,
        default_ics: theta_ics,
        energy: Some(theta_energy),
    },
    ProblemDef {
        name: "controlled_pendulum",
        summary: "pendulum driven by a horizontal force so that x(t) = a sin(wt)",
        build: build_controlled_pendulum,
        default_params: controlled_params,
        default_ics: controlled_ics,
        energy: None,
    },
    ProblemDef {
        name: "spring_chain",
        summary: "block on a spring with a chain of n rigid rods hinged below",
        build: build_spring_chain,
        default_params: chain_params,
        default_ics: chain_ics,
        energy: Some(chain_energy),
    },
    ProblemDef {
        name: "spring_theta",
        summary: "one-rod spring chain in minimal coordinates (block position, rod angle)",
        build: build_spring_theta,
        default_params: spring_theta_params,
        default_ics: spring_theta_ics,
        energy: Some(spring_theta_energy),
    },
    ProblemDef {
        name: "planets",
        summary: "sun and five outer planets, barycentric Lagrangian in sun-relative coordinates",
        build: build_planets,
        default_params: planets_params,
        default_ics: planets_ics,
        energy: Some(planets_energy),
    },
    ProblemDef {
        name: "toy_integrator",
        summary: "two-equation DAE whose second variable integrates sin t",
        build: build_toy_integrator,
        default_params: no_params,
        default_ics: toy_state_ic,
        energy: None,
    },
    ProblemDef {
        name: "toy_differentiator",
        summary: "two-equation DAE whose first variable differentiates sin t",
        build: build_toy_differentiator,
        default_params: no_params,
        default_ics: no_ics,
        energy: None,
    },
    ProblemDef {
        name: "toy_ode",
        summary: "two-equation DAE hiding the scalar ODE x2' = x2 + sin t",
        build: build_toy_ode,
        default_params: no_params,
        default_ics: toy_state_ic,
        energy: None,
    },
];

/// All built-in problems.
pub fn registry() -> &'static [ProblemDef] {
    REGISTRY
}

/// Look a problem up by name.
pub fn find(name: &str) -> Result<&'static ProblemDef> {
    registry().iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownProblem {
        name: name.to_string(),
        known: registry().iter().map(|p| p.name.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{consistent_initialize, taylor_integrate, IvpConfig};
    use crate::structural::{sa_friendly_check, StructuralResult};
    use approx::assert_relative_eq;

    fn analyze(name: &str) -> (DaeSystem, StructuralResult) {
        let p = find(name).unwrap();
        let params = (p.default_params)();
        let dae = (p.build)(&params).unwrap();
        let sr = StructuralResult::analyze(&dae).unwrap();
        (dae, sr)
    }

    #[test]
    fn registry_names_are_unique_and_findable() {
        let mut names: Vec<&str> = registry().iter().map(|p| p.name).collect();
        assert_eq!(names.len(), 9);
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 9);
        assert!(find("pendulum").is_ok());
        match find("pendulm") {
            Err(Error::UnknownProblem { name, known }) => {
                assert_eq!(name, "pendulm");
                assert!(known.contains(&"pendulum".to_string()));
            }
            Err(other) => panic!("expected UnknownProblem, got {other:?}"),
            Ok(_) => panic!("lookup of a misspelled name succeeded"),
        }
    }

    #[test]
    fn pendulum_structure_is_unchanged_by_the_lagrangian_route() {
        let (_, sr) = analyze("pendulum");
        assert_eq!(sr.c, vec![0, 0, 2]);
        assert_eq!(sr.d, vec![2, 2, 0]);
        assert_eq!(sr.dof, 2);
        assert_eq!(sr.nu, 2);
    }

    #[test]
    fn controlled_pendulum_has_the_pinned_structure() {
        let (_, sr) = analyze("controlled_pendulum");
        assert_eq!(sr.c, vec![0, 0, 2, 2]);
        assert_eq!(sr.d, vec![2, 2, 0, 0]);
        assert_eq!(sr.dof, 0);
        // The drive equation mentions x alone, at order zero.
        assert_eq!(sr.sigma.get(3, 0), Some(0));
        assert_eq!(sr.sigma.get(3, 1), None);
        assert_eq!(sr.sigma.get(3, 2), None);
        assert_eq!(sr.sigma.get(3, 3), None);
        // The only transversal pairs the drive row with x, the constraint
        // with y, and the dynamic rows with u and lambda.
        assert_eq!(sr.transversal, vec![3, 2, 1, 0]);
        assert_eq!(sr.hvt_value, 0);
    }

    #[test]
    fn controlled_pendulum_rejects_an_impossible_amplitude() {
        let params = controlled_params().set("a", 10.0);
        assert!(matches!(build_controlled_pendulum(&params), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn chain_sizes_scale_with_the_link_count() {
        for n in [1usize, 3] {
            let params = chain_params().set("n", n as f64);
            let dae = build_spring_chain(&params).unwrap();
            assert_eq!(dae.n(), 3 * n + 1);
            let sr = StructuralResult::analyze(&dae).unwrap();
            assert_eq!(sr.dof, 2 * n + 2);
        }
        assert!(matches!(
            build_spring_chain(&chain_params().set("n", 0.0)),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn minimal_coordinate_variant_is_an_ode_of_four_freedoms() {
        let (_, sr) = analyze("spring_theta");
        assert_eq!(sr.c, vec![0, 0]);
        assert_eq!(sr.d, vec![2, 2]);
        assert_eq!(sr.dof, 4);
    }

    #[test]
    fn planets_reduce_to_thirty_first_order_states() {
        let (dae, sr) = analyze("planets");
        assert_eq!(dae.n(), 15);
        assert_eq!(sr.dof, 30);
        assert!(sr.c.iter().all(|&c| c == 0));
        assert!(sr.d.iter().all(|&d| d == 2));
    }

    #[test]
    fn five_body_constants_checksum() {
        let mut sum = FIVE_BODY_K2;
        sum += FIVE_BODY_MASSES.iter().sum::<f64>();
        sum += FIVE_BODY_POSITIONS.iter().flatten().sum::<f64>();
        sum += FIVE_BODY_VELOCITIES.iter().flatten().sum::<f64>();
        assert_relative_eq!(sum, 54.19600799339128, epsilon = 1e-12);
        assert_eq!(FIVE_BODY_MASSES[5], 2.77777777778e-6);
        assert_eq!(FIVE_BODY_POSITIONS[0][0], 3.42947415189);
        assert_eq!(FIVE_BODY_VELOCITIES[4][2], -0.0148647893090);
    }

    #[test]
    fn epoch_invariants_match_the_frozen_oracle() {
        let params = planets_params();
        let ics = planets_ics(&params);
        let mut q = vec![0.0; 15];
        let mut qdot = vec![0.0; 15];
        for ((j, l), v) in ics.fixed {
            if l == 0 {
                q[j] = v;
            } else {
                qdot[j] = v;
            }
        }
        let (e, l) = planets_invariants(&params, &q, &qdot).unwrap();
        assert_relative_eq!(e, -3.218790880911258e-4, max_relative = 1e-12);
        assert_relative_eq!(l[0], 1.682324719440612e-4, max_relative = 1e-12);
        assert_relative_eq!(l[1], -2.3787749690463134e-3, max_relative = 1e-12);
        assert_relative_eq!(l[2], 5.616506282497668e-3, max_relative = 1e-12);
        // Total linear momentum vanishes by the barycentric construction.
        let model = planets_model(&params).unwrap();
        let v = model.absolute(&qdot[..]);
        let mut p = [0.0; 3];
        for (m, vi) in model.masses.iter().zip(&v) {
            for (pa, via) in p.iter_mut().zip(vi) {
                *pa += m * via;
            }
        }
        for pa in p {
            assert!(pa.abs() < 1e-15);
        }
    }

    #[test]
    fn rest_multiplier_reflects_the_gradient_convention() {
        // Unit rod, bob at rest below the pivot: the multiplier solved in
        // initialization is m g / (2 l), half the classical value because
        // the constraint gradient is (2x, 2y).
        let params = pendulum_params().set("l", 1.0);
        let dae = build_pendulum(&params).unwrap();
        let sr = StructuralResult::analyze(&dae).unwrap();
        let ic = IcSpec { fixed: vec![((0, 0), 0.0), ((0, 1), 0.0)], guesses: vec![((1, 0), 1.0)] };
        let (items, _) = consistent_initialize(&dae, &sr, &ic, 0.0, 1e-12).unwrap();
        let layout = crate::reduction::ItemLayout::for_structure(&sr);
        assert_relative_eq!(items[layout.index(2, 0)], 9.81 / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn every_problem_initializes_at_its_defaults() {
        for p in registry() {
            let params = (p.default_params)();
            let dae = (p.build)(&params).expect(p.name);
            let sr = StructuralResult::analyze(&dae).expect(p.name);
            let ic = (p.default_ics)(&params);
            let (items, _) = consistent_initialize(&dae, &sr, &ic, 0.0, 1e-10).expect(p.name);
            let layout = crate::reduction::ItemLayout::for_structure(&sr);
            let series = layout.series(&items, 0);
            let check = sa_friendly_check(&dae, &sr, 0.0, &series, 1e-9).expect(p.name);
            assert!(check.is_friendly(), "{} not SA-friendly at defaults", p.name);
        }
    }

    #[test]
    fn toy_trajectories_match_their_closed_forms() {
        let cfg = IvpConfig { tol: 1e-10, t_end: 1.0, ..IvpConfig::default() };
        let run = |name: &str| {
            let p = find(name).unwrap();
            let params = (p.default_params)();
            let dae = (p.build)(&params).unwrap();
            let sr = StructuralResult::analyze(&dae).unwrap();
            taylor_integrate(&dae, &sr, &(p.default_ics)(&params), &cfg).unwrap()
        };

        let traj = run("toy_integrator");
        let last = traj.last_items();
        // x2' = sin t from x2(0) = 1: x2(1) = 2 - cos 1.
        assert_relative_eq!(last[traj.item_index(1, 0)], 2.0 - 1f64.cos(), epsilon = 1e-8);

        let traj = run("toy_differentiator");
        let last = traj.last_items();
        assert_relative_eq!(last[traj.item_index(0, 0)], 1f64.cos(), epsilon = 1e-8);

        let traj = run("toy_ode");
        let last = traj.last_items();
        let want = 1.5 * 1f64.exp() - (1f64.sin() + 1f64.cos()) / 2.0;
        assert_relative_eq!(last[traj.item_index(1, 0)], want, epsilon = 1e-8);
    }
}
