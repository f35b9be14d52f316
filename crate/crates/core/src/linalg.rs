//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Reciprocal 1-norm condition number, 1/(‖A‖₁‖A⁻¹‖₁).
///
/// Returns 0 for a singular matrix and 1 for an empty one. Computing the
/// explicit inverse is fine at the sizes this crate works with (the matrices
/// are system Jacobians, a few dozen rows at most).
pub fn rcond_1(a: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), a.ncols(), "rcond of a non-square matrix");
    if a.nrows() == 0 {
        return 1.0;
    }
    let norm_a = norm_1(a);
    if !norm_a.is_finite() || norm_a == 0.0 {
        return 0.0;
    }
    match a.clone().try_inverse() {
        None => 0.0,
        Some(inv) => {
            let norm_inv = norm_1(&inv);
            if norm_inv.is_finite() {
                1.0 / (norm_a * norm_inv)
            } else {
                0.0
            }
        }
    }
}

fn norm_1(a: &DMatrix<f64>) -> f64 {
    let mut max = 0.0_f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|v| v.abs()).sum();
        max = max.max(s);
    }
    max
}

/// Greedy choice of `want` columns of `a` forming a well-conditioned square
/// block, by modified Gram–Schmidt with column pivoting.
///
/// Columns listed in `locked` are taken first, in order, whether or not they
/// pivot well; the remaining picks always take the largest orthogonalized
/// residual. The returned quality is the worst ratio (chosen column norm) /
/// (best available norm) over all steps, so it is 1.0 when the greedy choice
/// was never overridden and collapses toward 0 when a locked column has
/// become nearly dependent on the span of the earlier ones. Callers treat a
/// tiny quality as "this selection has degraded, pick a fresh one".
pub fn pick_columns(a: &DMatrix<f64>, locked: &[usize], want: usize) -> (Vec<usize>, f64) {
    let n = a.ncols();
    assert!(want <= n, "cannot pick {want} of {n} columns");
    assert!(locked.len() <= want);
    let mut cols: Vec<nalgebra::DVector<f64>> = (0..n).map(|j| a.column(j).into_owned()).collect();
    let mut avail = vec![true; n];
    let mut chosen = Vec::with_capacity(want);
    let mut quality = 1.0_f64;
    for step in 0..want {
        let best_norm =
            (0..n).filter(|&j| avail[j]).map(|j| cols[j].norm()).fold(0.0_f64, f64::max);
        let pick = if step < locked.len() {
            let j = locked[step];
            assert!(avail[j], "locked column {j} listed twice");
            j
        } else {
            let mut arg = usize::MAX;
            let mut best = -1.0;
            for (j, c) in cols.iter().enumerate() {
                if avail[j] && !locked.contains(&j) {
                    let nrm = c.norm();
                    if nrm > best {
                        best = nrm;
                        arg = j;
                    }
                }
            }
            arg
        };
        let pnorm = cols[pick].norm();
        quality = quality.min(if best_norm > 0.0 { pnorm / best_norm } else { 0.0 });
        avail[pick] = false;
        chosen.push(pick);
        if pnorm > 0.0 {
            let q = &cols[pick] / pnorm;
            for j in 0..n {
                if avail[j] {
                    let r = q.dot(&cols[j]);
                    cols[j] -= &q * r;
                }
            }
        }
    }
    (chosen, quality)
}
