//! Dummy-derivatives reduction of a high-index DAE to an ODE on a chart.
//!
//! After structural analysis the augmented system carries n + Σc equations
//! (each residual and its first c_i time derivatives) in n + Σd unknowns
//! (each variable and its first d_j derivatives, the "items"). A state
//! selection picks Σd − Σc of the items as ODE states; the rest — the
//! dummies — are solved algebraically, stage by stage, using blocks of the
//! one system Jacobian (which, in derivative form, is the stage Jacobian
//! of every stage at once). Selections are local charts: when the pivot
//! blocks of the current selection degrade along a trajectory, the solver
//! switches to a fresh selection at the same point without disturbing any
//! item values.

use std::cell::RefCell;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dae::DaeSystem;
use crate::error::{Error, Result};
use crate::linalg::pick_columns;
use crate::linalg::rcond_1;
use crate::structural::{system_jacobian, StructuralResult, DEFAULT_SINGULAR_RCOND};
use crate::taylor::{factorial, TaylorScalar};

/// Addressing for the flat item vector: variable j contributes its value
/// and derivatives up to a per-variable level count (d_j + 1 levels in the
/// standard reduction; one more in trajectory storage).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemLayout {
    levels: Vec<usize>,
    starts: Vec<usize>,
    total: usize,
}

impl ItemLayout {
    pub fn new(levels: Vec<usize>) -> Self {
        let mut starts = Vec::with_capacity(levels.len());
        let mut total = 0;
        for &l in &levels {
            assert!(l > 0, "every variable stores at least its value");
            starts.push(total);
            total += l;
        }
        ItemLayout { levels, starts, total }
    }

    /// The standard reduction layout: levels 0..=d_j for each variable.
    pub fn for_structure(sr: &StructuralResult) -> Self {
        Self::new(sr.d.iter().map(|&d| d + 1).collect())
    }

    pub fn n_vars(&self) -> usize {
        self.levels.len()
    }

    /// Number of stored levels for variable j (highest level + 1).
    pub fn levels(&self, j: usize) -> usize {
        self.levels[j]
    }

    /// Total number of items.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Flat index of item (j, l), the l-th derivative of variable j.
    pub fn index(&self, j: usize, l: usize) -> usize {
        assert!(
            l < self.levels[j],
            "variable {j} stores {} levels, asked for level {l}",
            self.levels[j]
        );
        self.starts[j] + l
    }

    /// Item names in flat order, derivatives marked with primes: x, x', x''.
    pub fn item_names(&self, names: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.total);
        for (j, name) in names.iter().enumerate() {
            for l in 0..self.levels[j] {
                out.push(format!("{}{}", name, "'".repeat(l)));
            }
        }
        out
    }

    /// Build one Taylor series per variable from derivative-form items,
    /// with `extra` additional zero coefficients above the stored levels.
    pub fn series(&self, items: &[f64], extra: usize) -> Vec<TaylorScalar> {
        assert_eq!(items.len(), self.total);
        (0..self.n_vars())
            .map(|j| {
                let lv = self.levels[j];
                let mut coeffs = Vec::with_capacity(lv + extra);
                for l in 0..lv {
                    coeffs.push(items[self.starts[j] + l] / factorial(l));
                }
                coeffs.extend(std::iter::repeat_n(0.0, extra));
                TaylorScalar::from_coeffs(coeffs)
            })
            .collect()
    }

    /// Read derivative-form items back out of per-variable series.
    pub fn harvest(&self, series: &[TaylorScalar]) -> Vec<f64> {
        assert_eq!(series.len(), self.n_vars());
        let mut items = Vec::with_capacity(self.total);
        for (j, s) in series.iter().enumerate() {
            for l in 0..self.levels[j] {
                items.push(s.coeff(l) * factorial(l));
            }
        }
        items
    }
}

/// Equation label for diagnostics: the l-th derivative of residual i is
/// rendered like the item names, f1'' for l = 2.
pub(crate) fn eq_name(i: usize, l: usize) -> String {
    format!("f{}{}", i, "'".repeat(l))
}

/// Rows of stage k: equations whose (k + c_i)-th derivative is active.
pub fn stage_rows(sr: &StructuralResult, k: i64) -> Vec<usize> {
    (0..sr.n()).filter(|&i| k + sr.c[i] as i64 >= 0).collect()
}

/// Columns of stage k: variables whose level k + d_j exists.
pub fn stage_cols(sr: &StructuralResult, k: i64) -> Vec<usize> {
    (0..sr.n()).filter(|&j| k + sr.d[j] as i64 >= 0).collect()
}

/// A dummy-derivatives state selection: variable j keeps its levels
/// 0..δ_j as ODE states; levels δ_j..=d_j are solved algebraically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdScheme {
    delta: Vec<usize>,
}

impl DdScheme {
    pub fn new(delta: Vec<usize>) -> Self {
        DdScheme { delta }
    }

    pub fn delta(&self) -> &[usize] {
        &self.delta
    }

    pub fn n_states(&self) -> usize {
        self.delta.iter().sum()
    }

    pub fn is_state(&self, j: usize, l: usize) -> bool {
        l < self.delta[j]
    }

    /// State items in flat (variable-major) order.
    pub fn state_items(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_states());
        for (j, &dj) in self.delta.iter().enumerate() {
            for l in 0..dj {
                out.push((j, l));
            }
        }
        out
    }

    /// Variables whose stage-k level is solved (not a state) at stage k.
    pub fn solved_cols(&self, sr: &StructuralResult, k: i64) -> Vec<usize> {
        stage_cols(sr, k)
            .into_iter()
            .filter(|&j| k + sr.d[j] as i64 >= self.delta[j] as i64)
            .collect()
    }
}

/// Why a proposed selection cannot serve as a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdViolation {
    pub reason: String,
}

impl fmt::Display for DdViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

/// Check a proposed δ against the structure: per-variable bounds, the
/// total state count, and stage-by-stage solvability accounting (stage k
/// must solve exactly as many items as it has equations).
pub fn validate_dd_spec(
    sr: &StructuralResult,
    delta: &[usize],
) -> std::result::Result<(), DdViolation> {
    let n = sr.n();
    if delta.len() != n {
        return Err(DdViolation {
            reason: format!("selection has {} entries for {} variables", delta.len(), n),
        });
    }
    for (j, (&keep, &have)) in delta.iter().zip(&sr.d).enumerate() {
        if keep > have {
            return Err(DdViolation {
                reason: format!(
                    "variable {j} keeps {keep} state levels but only carries derivatives up to {have}"
                ),
            });
        }
    }
    let total: usize = delta.iter().sum();
    if total != sr.dof {
        return Err(DdViolation {
            reason: format!(
                "selection keeps {total} states, structure has {} degrees of freedom",
                sr.dof
            ),
        });
    }
    let scheme = DdScheme::new(delta.to_vec());
    for k in sr.k_d()..=0 {
        let m = stage_rows(sr, k).len();
        let solved = scheme.solved_cols(sr, k).len();
        if solved != m {
            return Err(DdViolation {
                reason: format!(
                    "stage {k} solves {solved} items against {m} equations; \
                     the selected states are not independent there"
                ),
            });
        }
    }
    Ok(())
}

fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| a[(rows[r], cols[c])])
}

/// Stage-upward greedy selection from a precomputed system Jacobian.
/// Columns already committed as dummies stay locked at later stages, so
/// δ_j is simply d_j plus the stage at which column j was first picked.
fn select_from_jacobian(sr: &StructuralResult, jac: &DMatrix<f64>) -> Result<(DdScheme, f64)> {
    let n = sr.n();
    let mut delta: Vec<Option<usize>> = vec![None; n];
    let mut quality: f64 = 1.0;
    for k in sr.k_d()..=0 {
        let rows = stage_rows(sr, k);
        if rows.is_empty() {
            continue;
        }
        let cols = stage_cols(sr, k);
        let sub = submatrix(jac, &rows, &cols);
        let locked: Vec<usize> = cols
            .iter()
            .enumerate()
            .filter(|(_, &j)| delta[j].is_some())
            .map(|(idx, _)| idx)
            .collect();
        let (picked, q) = pick_columns(&sub, &locked, rows.len());
        quality = quality.min(q);
        for idx in picked {
            let j = cols[idx];
            if delta[j].is_none() {
                delta[j] = Some((k + sr.d[j] as i64) as usize);
            }
        }
    }
    let delta: Vec<usize> = delta
        .into_iter()
        .map(|d| d.ok_or_else(|| Error::Internal("stage sweep left a variable unselected".into())))
        .collect::<Result<_>>()?;
    if let Err(v) = validate_dd_spec(sr, &delta) {
        return Err(Error::Internal(format!("constructed selection fails validation: {v}")));
    }
    Ok((DdScheme::new(delta), quality))
}

/// Quality of an existing selection at a point: the pivot strength of its
/// own dummy columns relative to the best available, minimized over stages.
fn assess_scheme(sr: &StructuralResult, jac: &DMatrix<f64>, scheme: &DdScheme) -> f64 {
    let mut quality: f64 = 1.0;
    for k in sr.k_d()..=0 {
        let rows = stage_rows(sr, k);
        if rows.is_empty() {
            continue;
        }
        let cols = stage_cols(sr, k);
        let solved = scheme.solved_cols(sr, k);
        let locked: Vec<usize> = cols
            .iter()
            .enumerate()
            .filter(|(_, j)| solved.contains(j))
            .map(|(idx, _)| idx)
            .collect();
        let sub = submatrix(jac, &rows, &cols);
        let (_, q) = pick_columns(&sub, &locked, locked.len());
        quality = quality.min(q);
    }
    quality
}

/// Select a state vector at the given point by stage-upward greedy column
/// pivoting on the system Jacobian. Returns the selection and its quality
/// (1 is ideal; values near zero mean even the best chart is marginal).
pub fn select_state_vector(
    dae: &DaeSystem,
    sr: &StructuralResult,
    t0: f64,
    items: &[f64],
) -> Result<(DdScheme, f64)> {
    let layout = ItemLayout::for_structure(sr);
    let z = layout.series(items, 0);
    let jac = system_jacobian(dae, sr, t0, &z)?;
    let rcond = rcond_1(&jac);
    if rcond < DEFAULT_SINGULAR_RCOND {
        return Err(Error::SingularJacobian {
            what: "system Jacobian during state selection".into(),
            rcond,
        });
    }
    select_from_jacobian(sr, &jac)
}

/// Keep the current selection if its pivot blocks are still acceptable at
/// this point (bitwise-identical scheme, no disturbance); otherwise pick a
/// fresh one. Returns the scheme and whether a switch happened.
pub fn dd_switch(
    dae: &DaeSystem,
    sr: &StructuralResult,
    t0: f64,
    items: &[f64],
    current: &DdScheme,
    threshold: f64,
) -> Result<(DdScheme, bool)> {
    let layout = ItemLayout::for_structure(sr);
    let z = layout.series(items, 0);
    let jac = system_jacobian(dae, sr, t0, &z)?;
    if assess_scheme(sr, &jac, current) >= threshold {
        return Ok((current.clone(), false));
    }
    let (fresh, _) = select_from_jacobian(sr, &jac)?;
    let switched = fresh != *current;
    Ok((fresh, switched))
}

/// The augmented system bookkeeping: residuals and their derivatives up to
/// c_i, items up to d_j, and evaluation helpers shared by the consistency
/// and reduction machinery.
pub struct AugmentedSystem<'a> {
    pub dae: &'a DaeSystem,
    pub sr: &'a StructuralResult,
    pub layout: ItemLayout,
}

impl<'a> AugmentedSystem<'a> {
    pub fn new(dae: &'a DaeSystem, sr: &'a StructuralResult) -> Self {
        AugmentedSystem { dae, sr, layout: ItemLayout::for_structure(sr) }
    }

    /// n + Σc: residuals counted with their differentiations.
    pub fn n_equations(&self) -> usize {
        self.dae.n() + self.sr.c.iter().sum::<usize>()
    }

    /// n + Σd: items.
    pub fn n_unknowns(&self) -> usize {
        self.layout.len()
    }

    /// Raw residual series at the full structural orders (+`extra`).
    pub fn residual_series(
        &self,
        t0: f64,
        items: &[f64],
        extra: usize,
    ) -> Result<Vec<TaylorScalar>> {
        let z = self.layout.series(items, extra);
        let ord = z.iter().map(|s| s.order()).max().unwrap_or(0) + self.sr.max_c() + 4;
        self.dae.eval_taylor(&TaylorScalar::time(t0, ord), &z)
    }

    /// All augmented residuals in derivative form, f_i^(l) for l = 0..=c_i,
    /// flattened equation-major.
    pub fn residual_items(&self, t0: f64, items: &[f64]) -> Result<Vec<f64>> {
        let f = self.residual_series(t0, items, 0)?;
        let mut out = Vec::with_capacity(self.n_equations());
        for (i, fi) in f.iter().enumerate() {
            for l in 0..=self.sr.c[i] {
                out.push(fi.coeff(l) * factorial(l));
            }
        }
        Ok(out)
    }

    /// System Jacobian at the point described by the items.
    pub fn jacobian(&self, t0: f64, items: &[f64]) -> Result<DMatrix<f64>> {
        system_jacobian(self.dae, self.sr, t0, &self.layout.series(items, 0))
    }
}

/// Solve every non-state item from the state items, stage by stage from
/// k_d up to 0, by damped-free chord Newton on each stage block. On
/// return the items satisfy the whole augmented system at `t0`.
///
/// Stage k adjusts item (j, k + d_j) for each solved column j so that the
/// (k + c_i)-th residual derivatives vanish. Residuals are evaluated at
/// the full structural orders: by the offset duality path bound, the
/// stage-k residual derivative cannot depend on any item above level
/// k + d_j, so not-yet-solved junk in higher levels is invisible.
pub fn solve_cascade(
    dae: &DaeSystem,
    sr: &StructuralResult,
    scheme: &DdScheme,
    t0: f64,
    items: &mut [f64],
    newton_tol: f64,
) -> Result<()> {
    let aug = AugmentedSystem::new(dae, sr);
    for k in sr.k_d()..=0 {
        let rows = stage_rows(sr, k);
        if rows.is_empty() {
            continue;
        }
        let solved = scheme.solved_cols(sr, k);
        if solved.len() != rows.len() {
            return Err(Error::Internal(format!(
                "stage {k} has {} equations but solves {} items",
                rows.len(),
                solved.len()
            )));
        }
        solve_stage(&aug, t0, items, k, &rows, &solved, newton_tol)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve_stage(
    aug: &AugmentedSystem<'_>,
    t0: f64,
    items: &mut [f64],
    k: i64,
    rows: &[usize],
    solved: &[usize],
    newton_tol: f64,
) -> Result<()> {
    let sr = aug.sr;
    let m = rows.len();
    let slots: Vec<usize> =
        solved.iter().map(|&j| aug.layout.index(j, (k + sr.d[j] as i64) as usize)).collect();
    let residual = |items: &[f64]| -> Result<DVector<f64>> {
        let f = aug.residual_series(t0, items, 0)?;
        Ok(DVector::from_iterator(
            m,
            rows.iter().map(|&i| {
                let l = (k + sr.c[i] as i64) as usize;
                f[i].coeff(l) * factorial(l)
            }),
        ))
    };

    let max_iter = 25;
    let mut lu = None;
    let mut refreshes = 0;
    let mut prev_norm = f64::INFINITY;
    for iter in 0.. {
        let r = residual(items)?;
        let norm = r.amax();
        let scale = 1.0 + slots.iter().map(|&s| items[s].abs()).fold(0.0, f64::max);
        if norm <= newton_tol * scale {
            return Ok(());
        }
        let stalled = norm > 0.5 * prev_norm;
        if iter >= max_iter || (stalled && refreshes >= 3) {
            let mut worst: Vec<(String, f64)> = rows
                .iter()
                .zip(r.iter())
                .map(|(&i, &ri)| (eq_name(i, (k + sr.c[i] as i64) as usize), ri))
                .collect();
            worst.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
            worst.truncate(3);
            return Err(Error::NewtonFailure { t: t0, stage: k, worst });
        }
        if lu.is_none() || stalled {
            if lu.is_some() {
                refreshes += 1;
            }
            let jac = aug.jacobian(t0, items)?;
            let g = submatrix(&jac, rows, solved);
            let fact = g.lu();
            if fact.determinant() == 0.0 {
                return Err(Error::ChartFailure {
                    t: t0,
                    detail: format!("stage {k} pivot block is singular"),
                });
            }
            lu = Some(fact);
        }
        let step = lu.as_ref().unwrap().solve(&(-&r)).ok_or_else(|| Error::ChartFailure {
            t: t0,
            detail: format!("stage {k} pivot block is singular"),
        })?;
        if !step.iter().all(|x| x.is_finite()) {
            return Err(Error::ChartFailure {
                t: t0,
                detail: format!("stage {k} Newton step is not finite"),
            });
        }
        for (idx, &slot) in slots.iter().enumerate() {
            items[slot] += step[idx];
        }
        prev_norm = norm;
    }
    unreachable!()
}

/// The reduced ODE ẋ = F(t, x) on the current chart: x collects the state
/// items, F solves the cascade for everything else and reads off each
/// state's next level. Carries warm-started items between evaluations.
pub struct ReducedOde<'a> {
    dae: &'a DaeSystem,
    sr: &'a StructuralResult,
    layout: ItemLayout,
    scheme: DdScheme,
    items: RefCell<Vec<f64>>,
    newton_tol: f64,
}

impl<'a> ReducedOde<'a> {
    pub fn new(
        dae: &'a DaeSystem,
        sr: &'a StructuralResult,
        scheme: DdScheme,
        items: Vec<f64>,
        newton_tol: f64,
    ) -> Self {
        let layout = ItemLayout::for_structure(sr);
        assert_eq!(items.len(), layout.len());
        ReducedOde { dae, sr, layout, scheme, items: RefCell::new(items), newton_tol }
    }

    pub fn n_states(&self) -> usize {
        self.scheme.n_states()
    }

    pub fn scheme(&self) -> &DdScheme {
        &self.scheme
    }

    pub fn layout(&self) -> &ItemLayout {
        &self.layout
    }

    /// Install a different chart; item values are untouched.
    pub fn set_scheme(&mut self, scheme: DdScheme) {
        self.scheme = scheme;
    }

    /// Current warm-start items.
    pub fn items(&self) -> Vec<f64> {
        self.items.borrow().clone()
    }

    /// Replace the warm-start items (used when rolling back a rejected step).
    pub fn set_items(&self, items: Vec<f64>) {
        assert_eq!(items.len(), self.layout.len());
        *self.items.borrow_mut() = items;
    }

    /// Read the state vector out of an item vector.
    pub fn state_of(&self, items: &[f64]) -> Vec<f64> {
        self.scheme.state_items().iter().map(|&(j, l)| items[self.layout.index(j, l)]).collect()
    }

    /// Solve the cascade at (t, x) and return the full item vector.
    pub fn eval_full(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(x.len(), self.n_states());
        let mut items = self.items.borrow().clone();
        for (xi, &(j, l)) in x.iter().zip(self.scheme.state_items().iter()) {
            items[self.layout.index(j, l)] = *xi;
        }
        solve_cascade(self.dae, self.sr, &self.scheme, t, &mut items, self.newton_tol)?;
        *self.items.borrow_mut() = items.clone();
        Ok(items)
    }

    /// The ODE right-hand side: the time derivative of state item (j, l)
    /// is item (j, l + 1), which always exists because δ_j ≤ d_j.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let items = self.eval_full(t, x)?;
        Ok(self
            .scheme
            .state_items()
            .iter()
            .map(|&(j, l)| items[self.layout.index(j, l + 1)])
            .collect())
    }

    /// One extra linear stage above the top: from consistent items, compute
    /// the derivative of each variable's highest item, x_j^(d_j + 1). The
    /// stage-1 equations are linear in those values with matrix J, so a
    /// single factorization solves them exactly.
    pub fn extend_one_stage(&self, t: f64, items: &[f64]) -> Result<Vec<f64>> {
        let aug = AugmentedSystem::new(self.dae, self.sr);
        let f = aug.residual_series(t, items, 1)?;
        let n = self.dae.n();
        let rhs = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let l = self.sr.c[i] + 1;
                -f[i].coeff(l) * factorial(l)
            }),
        );
        let jac = aug.jacobian(t, items)?;
        let rc = rcond_1(&jac);
        let sol = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or(Error::SingularJacobian { what: "top-level extension".into(), rcond: rc })?;
        Ok(sol.iter().copied().collect())
    }
}
