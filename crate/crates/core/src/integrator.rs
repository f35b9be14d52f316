//! Consistent initialization and the two integration drivers.
//!
//! The Taylor driver advances the DAE directly: at each accepted point it
//! develops every variable as a truncated Taylor series by one Jacobian
//! factorization plus one linear solve per additional order (the stage
//! equations above order zero are linear in the new top coefficients),
//! picks the step from the last two coefficients of each series, steps by
//! series evaluation, and projects the predicted point back onto the
//! constraint manifold by re-solving the dummy items of the current chart.
//!
//! The Runge-Kutta driver instead integrates the reduced ODE of the
//! current chart with the Dormand-Prince 5(4) embedded pair, solving the
//! algebraic cascade at every stage evaluation.
//!
//! Both drivers watch the chart's pivot quality at accepted points and
//! switch selections in place when it degrades; item values never change
//! across a switch, only which of them the integrator treats as states.

use std::io::{self, Write};
use std::time::Instant;

use crate::dae::DaeSystem;
use crate::error::{Error, Result};
use crate::reduction::{
    dd_switch, select_state_vector, solve_cascade, validate_dd_spec, DdScheme, ItemLayout,
    ReducedOde,
};
use crate::structural::{system_jacobian, StructuralResult};
use crate::taylor::{factorial, TaylorScalar};
use nalgebra::DVector;

/// Solver configuration shared by both drivers.
#[derive(Clone, Debug)]
pub struct IvpConfig {
    /// Local error tolerance per step.
    pub tol: f64,
    /// Total series order for the Taylor driver (top stage index is
    /// `order − max d_j`).
    pub order: usize,
    pub t0: f64,
    pub t_end: f64,
    /// Budget on accepted plus rejected steps.
    pub max_steps: usize,
    /// Convergence tolerance for the algebraic solves; defaults to
    /// tol / 100 when unset.
    pub newton_tol: Option<f64>,
    /// Pivot-quality floor below which the chart is switched.
    pub switch_threshold: f64,
    /// Hard cap on the step size.
    pub max_h: Option<f64>,
}

impl Default for IvpConfig {
    fn default() -> Self {
        IvpConfig {
            tol: 1e-8,
            order: 15,
            t0: 0.0,
            t_end: 1.0,
            max_steps: 500_000,
            newton_tol: None,
            switch_threshold: 1e-3,
            max_h: None,
        }
    }
}

impl IvpConfig {
    pub fn effective_newton_tol(&self) -> f64 {
        self.newton_tol.unwrap_or(self.tol * 0.01)
    }

    fn validate(&self, sr: &StructuralResult) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.t_end < self.t0 || !self.t0.is_finite() || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig("need finite t0 <= t_end".into()));
        }
        if self.order < sr.max_d() + 2 {
            return Err(Error::InvalidConfig(format!(
                "series order {} is too low for derivatives up to {}; need at least {}",
                self.order,
                sr.max_d(),
                sr.max_d() + 2
            )));
        }
        if let Some(h) = self.max_h {
            if h <= 0.0 || h.is_nan() {
                return Err(Error::InvalidConfig("max_h must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Initial data: `fixed` pins exactly the degrees of freedom (the state
/// items of some valid selection); `guesses` seed the Newton solves for
/// everything else.
#[derive(Clone, Debug, Default)]
pub struct IcSpec {
    pub fixed: Vec<((usize, usize), f64)>,
    pub guesses: Vec<((usize, usize), f64)>,
}

/// Counters and extremes from one integration run.
#[derive(Clone, Debug)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    pub switches: usize,
    pub switch_times: Vec<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub cpu_s: f64,
}

impl Default for RunStats {
    fn default() -> Self {
        RunStats {
            accepted: 0,
            rejected: 0,
            switches: 0,
            switch_times: Vec::new(),
            h_min: f64::INFINITY,
            h_max: 0.0,
            cpu_s: 0.0,
        }
    }
}

/// A solution: per accepted time, all items plus one extra derivative
/// level per variable (the slope of the top item, for interpolation).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub d: Vec<usize>,
    pub times: Vec<f64>,
    /// Extended layout: levels 0..=d_j+1 per variable.
    pub layout: ItemLayout,
    pub samples: Vec<Vec<f64>>,
    pub stats: RunStats,
}

impl Trajectory {
    fn new(names: Vec<String>, d: Vec<usize>) -> Self {
        let layout = ItemLayout::new(d.iter().map(|&dj| dj + 2).collect());
        Trajectory {
            names,
            d,
            times: Vec::new(),
            layout,
            samples: Vec::new(),
            stats: RunStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Final sample in the extended layout.
    pub fn last_items(&self) -> &[f64] {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Extended-layout index of item (j, l), l ≤ d_j + 1.
    pub fn item_index(&self, j: usize, l: usize) -> usize {
        self.layout.index(j, l)
    }

    /// Values and first derivatives of every variable at sample `idx`.
    pub fn q_qdot(&self, idx: usize) -> (Vec<f64>, Vec<f64>) {
        let s = &self.samples[idx];
        let n = self.names.len();
        let q = (0..n).map(|j| s[self.layout.index(j, 0)]).collect();
        let qd = (0..n).map(|j| s[self.layout.index(j, 1)]).collect();
        (q, qd)
    }

    /// Cubic Hermite interpolation of every item (j, l) with l ≤ d_j,
    /// using the stored level l+1 as the slope at each sample. Exact for
    /// the samples themselves; `t` must lie within the covered interval.
    pub fn dense_output(&self, t: f64) -> Result<Vec<f64>> {
        let (t_first, t_last) = (self.times[0], *self.times.last().unwrap());
        if !(t >= t_first && t <= t_last) {
            return Err(Error::InvalidConfig(format!(
                "dense output at t = {t} outside [{t_first}, {t_last}]"
            )));
        }
        if self.times.len() == 1 {
            let s = &self.samples[0];
            let mut out = Vec::new();
            for (j, &dj) in self.d.iter().enumerate() {
                out.extend((0..=dj).map(|l| s[self.layout.index(j, l)]));
            }
            return Ok(out);
        }
        let seg = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
        .min(self.times.len() - 2);
        let (ta, tb) = (self.times[seg], self.times[seg + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let a = &self.samples[seg];
        let b = &self.samples[seg + 1];
        let mut out = Vec::new();
        for j in 0..self.names.len() {
            for l in 0..=self.d[j] {
                let (pa, ma) = (a[self.layout.index(j, l)], a[self.layout.index(j, l + 1)]);
                let (pb, mb) = (b[self.layout.index(j, l)], b[self.layout.index(j, l + 1)]);
                out.push(h00 * pa + h10 * h * ma + h01 * pb + h11 * h * mb);
            }
        }
        Ok(out)
    }

    /// Columns written by [`write_csv`](Trajectory::write_csv): time, then
    /// each variable's levels 0..=max(d_j − 1, 0) with primed names.
    pub fn csv_header(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        for (j, name) in self.names.iter().enumerate() {
            for l in 0..=self.d[j].saturating_sub(1) {
                cols.push(format!("{}{}", name, "'".repeat(l)));
            }
        }
        cols
    }

    /// Write the trajectory as CSV with full (17 significant digit)
    /// precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.csv_header().join(","))?;
        for (t, sample) in self.times.iter().zip(&self.samples) {
            write!(out, "{t:.16e}")?;
            for j in 0..self.names.len() {
                for l in 0..=self.d[j].saturating_sub(1) {
                    write!(out, ",{:.16e}", sample[self.layout.index(j, l)])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Produce a consistent full item vector at `t0` from pinned state items
/// and guesses. The fixed items must be the state set of a valid
/// selection: contiguous leading levels per variable, one item per degree
/// of freedom, passing the stage accounting.
pub fn consistent_initialize(
    dae: &DaeSystem,
    sr: &StructuralResult,
    ic: &IcSpec,
    t0: f64,
    newton_tol: f64,
) -> Result<(Vec<f64>, DdScheme)> {
    let layout = ItemLayout::for_structure(sr);
    let n = dae.n();
    let mut delta = vec![0usize; n];
    let mut seen = vec![false; layout.len()];
    for &((j, l), _) in &ic.fixed {
        if j >= n || l > sr.d[j] {
            return Err(Error::InconsistentIc {
                reason: format!("fixed item ({j}, {l}) does not exist in this structure"),
            });
        }
        let idx = layout.index(j, l);
        if seen[idx] {
            return Err(Error::InconsistentIc {
                reason: format!("item ({j}, {l}) is fixed twice"),
            });
        }
        seen[idx] = true;
        delta[j] = delta[j].max(l + 1);
    }
    // Contiguity: the fixed levels of each variable must be 0..delta_j.
    let fixed_count: usize = ic.fixed.len();
    let implied: usize = delta.iter().sum();
    if implied != fixed_count {
        return Err(Error::InconsistentIc {
            reason: "fixed items must pin contiguous leading derivatives of each variable".into(),
        });
    }
    if fixed_count != sr.dof {
        return Err(Error::InconsistentIc {
            reason: format!(
                "{} items fixed, but the structure has {} degrees of freedom",
                fixed_count, sr.dof
            ),
        });
    }
    if let Err(v) = validate_dd_spec(sr, &delta) {
        return Err(Error::InconsistentIc { reason: v.reason });
    }
    let mut items = vec![0.0; layout.len()];
    for &((j, l), v) in &ic.guesses {
        if j >= n || l > sr.d[j] {
            return Err(Error::InconsistentIc {
                reason: format!("guess item ({j}, {l}) does not exist in this structure"),
            });
        }
        items[layout.index(j, l)] = v;
    }
    for &((j, l), v) in &ic.fixed {
        items[layout.index(j, l)] = v;
    }
    let scheme = DdScheme::new(delta);
    solve_cascade(dae, sr, &scheme, t0, &mut items, newton_tol)?;
    Ok((items, scheme))
}

/// Build per-variable series of order d_j + extra from items (derivative
/// form in, coefficient form out), zero-padded above the item levels.
fn padded_series(layout: &ItemLayout, items: &[f64], extra: usize) -> Vec<TaylorScalar> {
    layout.series(items, extra)
}

/// One full Taylor development at (t, items): stages 1..=top are linear in
/// each new level of coefficients and share one factorization of J.
fn develop_series(
    dae: &DaeSystem,
    sr: &StructuralResult,
    layout: &ItemLayout,
    t: f64,
    items: &[f64],
    top: usize,
) -> Result<Vec<TaylorScalar>> {
    let n = dae.n();
    let mut coeffs: Vec<Vec<f64>> =
        padded_series(layout, items, top).iter().map(|s| s.coeffs().to_vec()).collect();
    let jac = system_jacobian(dae, sr, t, &padded_series(layout, items, 0))?;
    let lu = jac.lu();
    if lu.determinant() == 0.0 {
        return Err(Error::ChartFailure { t, detail: "system Jacobian is singular".into() });
    }
    let ord_t = sr.max_d() + top + sr.max_c() + 4;
    let tt = TaylorScalar::time(t, ord_t);
    for k in 1..=top {
        let z: Vec<TaylorScalar> =
            coeffs.iter().map(|c| TaylorScalar::from_coeffs(c.clone())).collect();
        let f = dae.eval_taylor(&tt, &z)?;
        let rhs = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let l = sr.c[i] + k;
                -f[i].coeff(l) * factorial(l)
            }),
        );
        let w = lu
            .solve(&rhs)
            .ok_or(Error::ChartFailure { t, detail: "system Jacobian is singular".into() })?;
        for j in 0..n {
            let l = sr.d[j] + k;
            coeffs[j][l] = w[j] / factorial(l);
        }
    }
    Ok(coeffs.into_iter().map(TaylorScalar::from_coeffs).collect())
}

/// Record one extended sample (levels 0..=d_j+1) from a developed series.
fn sample_from_series(sr: &StructuralResult, series: &[TaylorScalar]) -> Vec<f64> {
    let mut out = Vec::new();
    for (j, s) in series.iter().enumerate() {
        for l in 0..=sr.d[j] + 1 {
            out.push(s.coeff(l) * factorial(l));
        }
    }
    out
}

/// Error-controlled step proposal from the top two coefficients of each
/// developed series.
fn propose_step(sr: &StructuralResult, series: &[TaylorScalar], top: usize, tol: f64) -> f64 {
    let mut h = f64::INFINITY;
    for (j, s) in series.iter().enumerate() {
        let scale = tol * (1.0 + s.coeff(0).abs());
        for k in [sr.d[j] + top - 1, sr.d[j] + top] {
            let ck = s.coeff(k).abs();
            if ck > 0.0 {
                h = h.min((scale / ck).powf(1.0 / k as f64));
            }
        }
    }
    0.8 * h
}

/// Native Taylor-series integration of the full DAE.
pub fn taylor_integrate(
    dae: &DaeSystem,
    sr: &StructuralResult,
    ic: &IcSpec,
    cfg: &IvpConfig,
) -> Result<Trajectory> {
    cfg.validate(sr)?;
    let started = Instant::now();
    let ntol = cfg.effective_newton_tol();
    let layout = ItemLayout::for_structure(sr);
    let top = cfg.order - sr.max_d();
    let (mut items, _) = consistent_initialize(dae, sr, ic, cfg.t0, ntol)?;
    let (mut scheme, _) = select_state_vector(dae, sr, cfg.t0, &items)?;

    let mut traj = Trajectory::new(dae.names().to_vec(), sr.d.clone());
    let mut t = cfg.t0;
    let mut h_prev: Option<f64> = None;
    loop {
        let series = develop_series(dae, sr, &layout, t, &items, top)?;
        traj.times.push(t);
        traj.samples.push(sample_from_series(sr, &series));
        if t >= cfg.t_end {
            break;
        }
        if traj.stats.accepted + traj.stats.rejected >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded { t, steps: cfg.max_steps });
        }

        let mut h = propose_step(sr, &series, top, cfg.tol);
        if let Some(hp) = h_prev {
            h = h.clamp(0.2 * hp, 2.5 * hp);
        }
        if let Some(hm) = cfg.max_h {
            h = h.min(hm);
        }
        if !h.is_finite() {
            // A polynomial solution truncates to exact zeros; stride ahead.
            h = cfg.max_h.unwrap_or(cfg.t_end - t);
        }
        // Stretch up to 5% to land on t_end exactly rather than leave a
        // sliver step behind.
        if t + 1.05 * h >= cfg.t_end {
            h = cfg.t_end - t;
        }
        let floor = 16.0 * f64::EPSILON * t.abs().max(1.0);

        // Predict-and-project, halving on failure, reselecting the chart
        // when the projection blames it.
        loop {
            let h_eff = h.min(cfg.t_end - t);
            if h_eff < floor {
                return Err(Error::StepSizeUnderflow { t });
            }
            let mut predicted = Vec::with_capacity(layout.len());
            for (j, s) in series.iter().enumerate() {
                for l in 0..=sr.d[j] {
                    predicted.push(s.try_diff(l)?.eval_at(h_eff));
                }
            }
            let mut projected = predicted;
            match solve_cascade(dae, sr, &scheme, t + h_eff, &mut projected, ntol) {
                Ok(()) => {
                    t += h_eff;
                    if cfg.t_end - t <= floor {
                        t = cfg.t_end;
                    }
                    items = projected;
                    h_prev = Some(h_eff);
                    traj.stats.accepted += 1;
                    traj.stats.h_min = traj.stats.h_min.min(h_eff);
                    traj.stats.h_max = traj.stats.h_max.max(h_eff);
                    break;
                }
                Err(Error::NewtonFailure { .. }) | Err(Error::ChartFailure { .. }) => {
                    traj.stats.rejected += 1;
                    if let Ok((fresh, switched)) =
                        dd_switch(dae, sr, t, &items, &scheme, cfg.switch_threshold)
                    {
                        if switched {
                            traj.stats.switches += 1;
                            traj.stats.switch_times.push(t);
                            scheme = fresh;
                            continue;
                        }
                    }
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }

        // Proactive chart maintenance at the accepted point.
        let (fresh, switched) = dd_switch(dae, sr, t, &items, &scheme, cfg.switch_threshold)?;
        if switched {
            traj.stats.switches += 1;
            traj.stats.switch_times.push(t);
            scheme = fresh;
        }
    }
    traj.stats.cpu_s = started.elapsed().as_secs_f64();
    Ok(traj)
}

/// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Classical Runge-Kutta integration of the reduced ODE on the current
/// chart, with cascade solves at every stage and chart switching at
/// accepted points. Requires at least one degree of freedom.
pub fn rk_integrate(
    dae: &DaeSystem,
    sr: &StructuralResult,
    ic: &IcSpec,
    cfg: &IvpConfig,
) -> Result<Trajectory> {
    cfg.validate(sr)?;
    if sr.dof == 0 {
        return Err(Error::InvalidConfig(
            "the reduced ODE has no states; use the Taylor driver".into(),
        ));
    }
    let started = Instant::now();
    let ntol = cfg.effective_newton_tol();
    let (items0, _) = consistent_initialize(dae, sr, ic, cfg.t0, ntol)?;
    let (scheme, _) = select_state_vector(dae, sr, cfg.t0, &items0)?;
    let mut ode = ReducedOde::new(dae, sr, scheme, items0.clone(), ntol);

    let mut traj = Trajectory::new(dae.names().to_vec(), sr.d.clone());
    let mut t = cfg.t0;
    let mut x = ode.state_of(&items0);

    let push_sample =
        |traj: &mut Trajectory, ode: &ReducedOde, t: f64, items: &[f64]| -> Result<()> {
            let tops = ode.extend_one_stage(t, items)?;
            let layout = ode.layout();
            let mut sample = Vec::new();
            for j in 0..dae.n() {
                for l in 0..=sr.d[j] {
                    sample.push(items[layout.index(j, l)]);
                }
                sample.push(tops[j]);
            }
            traj.times.push(t);
            traj.samples.push(sample);
            Ok(())
        };
    push_sample(&mut traj, &ode, t, &items0)?;

    let mut k1 = ode.eval(t, &x)?;
    let span = cfg.t_end - cfg.t0;
    if span == 0.0 {
        traj.stats.cpu_s = started.elapsed().as_secs_f64();
        return Ok(traj);
    }
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut h = 0.01 * (1.0 + norm(&x)) / (1.0 + norm(&k1));
    h = h.min(0.1 * span).min(cfg.max_h.unwrap_or(f64::INFINITY));
    let mut err_prev: f64 = 1.0;

    while t < cfg.t_end {
        if traj.stats.accepted + traj.stats.rejected >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded { t, steps: cfg.max_steps });
        }
        let floor = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < floor {
            return Err(Error::StepSizeUnderflow { t });
        }
        let h_eff = if t + 1.05 * h >= cfg.t_end { cfg.t_end - t } else { h.min(cfg.t_end - t) };
        let start_items = ode.items();

        // The six follow-up stages; k1 is fresh from the last acceptance.
        let mut ks: Vec<Vec<f64>> = vec![k1.clone()];
        let mut failed = false;
        for (s, a_row) in DP_A.iter().enumerate() {
            let mut xs = x.clone();
            for (xi, xv) in xs.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (ai, ki) in a_row.iter().zip(&ks) {
                    acc += ai * ki[xi];
                }
                *xv += h_eff * acc;
            }
            match ode.eval(t + DP_C[s] * h_eff, &xs) {
                Ok(k) => ks.push(k),
                Err(Error::NewtonFailure { .. }) | Err(Error::ChartFailure { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failed {
            // Roll back, try a chart switch at the step start, shrink.
            traj.stats.rejected += 1;
            ode.set_items(start_items.clone());
            let (fresh, switched) =
                dd_switch(dae, sr, t, &start_items, ode.scheme(), cfg.switch_threshold)?;
            if switched {
                traj.stats.switches += 1;
                traj.stats.switch_times.push(t);
                ode.set_scheme(fresh);
                x = ode.state_of(&start_items);
                k1 = ode.eval(t, &x)?;
            }
            h *= 0.5;
            continue;
        }

        // 5th-order solution is stage row 7 (FSAL): x_new from the last
        // A row, already evaluated as ks[6]'s abscissa.
        let mut x_new = x.clone();
        for xi in 0..x.len() {
            let mut acc = 0.0;
            for (ai, ki) in DP_A[5].iter().zip(&ks) {
                acc += ai * ki[xi];
            }
            x_new[xi] += h_eff * acc;
        }
        // ks[6] = f(t + h, x_new) is the FSAL stage.
        let err = {
            let mut worst: f64 = 0.0;
            for xi in 0..x.len() {
                let mut e = 0.0;
                for (ei, ki) in DP_E.iter().zip(&ks) {
                    e += ei * ki[xi];
                }
                let sc = cfg.tol * (1.0 + x[xi].abs().max(x_new[xi].abs()));
                worst = worst.max((h_eff * e / sc).abs());
            }
            worst
        };

        if err <= 1.0 {
            // Accept; ks[6] was evaluated at (t+h, x_new), so the ode's
            // warm items are the solved items there.
            t += h_eff;
            if cfg.t_end - t <= floor {
                t = cfg.t_end;
            }
            x = x_new;
            k1 = ks[6].clone();
            let items = ode.eval_full(t, &x)?;
            traj.stats.accepted += 1;
            traj.stats.h_min = traj.stats.h_min.min(h_eff);
            traj.stats.h_max = traj.stats.h_max.max(h_eff);
            let (fresh, switched) =
                dd_switch(dae, sr, t, &items, ode.scheme(), cfg.switch_threshold)?;
            if switched {
                traj.stats.switches += 1;
                traj.stats.switch_times.push(t);
                ode.set_scheme(fresh);
                x = ode.state_of(&items);
                k1 = ode.eval(t, &x)?;
            }
            push_sample(&mut traj, &ode, t, &items)?;
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            err_prev = err.max(1e-10);
            h = h_eff * fac.clamp(0.2, 5.0);
            if let Some(hm) = cfg.max_h {
                h = h.min(hm);
            }
        } else {
            traj.stats.rejected += 1;
            ode.set_items(start_items);
            let fac = 0.9 * err.powf(-0.2);
            h = h_eff * fac.clamp(0.1, 0.9);
        }
    }
    traj.stats.cpu_s = started.elapsed().as_secs_f64();
    Ok(traj)
}
