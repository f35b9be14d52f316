//! Helpers shared between the integration test binaries.
#![allow(dead_code)]

use daekit::problems::find;
use daekit::structural::StructuralResult;
use daekit::{DaeSystem, IcSpec, Params};

pub fn build(name: &str) -> (DaeSystem, Params, StructuralResult, IcSpec) {
    let p = find(name).unwrap();
    let params = (p.default_params)();
    let dae = (p.build)(&params).unwrap();
    let sr = StructuralResult::analyze(&dae).unwrap();
    let ic = (p.default_ics)(&params);
    (dae, params, sr, ic)
}

/// Enumerate every dual pair with entries bounded by `cap` and check the
/// canonical offsets are the elementwise minimum over all of them.
pub fn assert_minimal_offsets(name: &str, cap: usize) {
    let (_, _, sr, _) = build(name);
    let n = sr.sigma.n();
    assert!(n <= 4, "brute force only meant for small systems");

    // All transversals with finite entries. Feasibility plus equality on
    // any of them already implies that transversal is value-maximal.
    let mut transversals = Vec::new();
    let mut perm = vec![0usize; n];
    let mut used = vec![false; n];
    fn rec(
        i: usize,
        n: usize,
        sr: &StructuralResult,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == n {
            out.push(perm.clone());
            return;
        }
        for j in 0..n {
            if !used[j] && sr.sigma.get(i, j).is_some() {
                used[j] = true;
                perm[i] = j;
                rec(i + 1, n, sr, perm, used, out);
                used[j] = false;
            }
        }
    }
    rec(0, n, &sr, &mut perm, &mut used, &mut transversals);
    assert!(!transversals.is_empty());

    let mut min_c = vec![usize::MAX; n];
    let mut min_d = vec![usize::MAX; n];
    let mut c = vec![0usize; n];
    let mut d = vec![0usize; n];
    let total = (cap + 1).pow(2 * n as u32);
    for code in 0..total {
        let mut rest = code;
        for v in c.iter_mut().chain(d.iter_mut()) {
            *v = rest % (cap + 1);
            rest /= cap + 1;
        }
        let feasible = (0..n).all(|i| {
            (0..n).all(|j| match sr.sigma.get(i, j) {
                Some(s) => d[j] as i64 - c[i] as i64 >= s as i64,
                None => true,
            })
        });
        if !feasible {
            continue;
        }
        let tight = transversals
            .iter()
            .any(|t| (0..n).all(|i| d[t[i]] - c[i] == sr.sigma.get(i, t[i]).unwrap()));
        if !tight {
            continue;
        }
        for i in 0..n {
            min_c[i] = min_c[i].min(c[i]);
            min_d[i] = min_d[i].min(d[i]);
        }
    }
    assert_eq!(sr.c, min_c, "{name}: c offsets not elementwise minimal");
    assert_eq!(sr.d, min_d, "{name}: d offsets not elementwise minimal");
}
