#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use strata::sequence::{
    apply_move, enumerate_moves, AugmentedConfiguration, MoveKind, ParentSequence,
};

pub fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn phi(x: f64) -> f64 {
    std_normal().pdf(x)
}

pub fn big_phi(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn big_phi_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let (lm, flm) = (0.5 * (a + m), f(0.5 * (a + m)));
    let (rm, frm) = (0.5 * (m + b), f(0.5 * (m + b)));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let f: &dyn Fn(f64) -> f64 = &f;
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Breadth-first closure of a configuration under every feasible move, each
/// split point taken at the middle of its interval. One representative is
/// kept per support pattern, since move feasibility depends only on which
/// layers are positive.
pub fn reachable(
    start: &AugmentedConfiguration,
    parent: &ParentSequence,
    limit: usize,
) -> Vec<AugmentedConfiguration> {
    let key = |c: &AugmentedConfiguration| c.support();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([start.clone()]);
    seen.insert(key(start));
    while let Some(cfg) = queue.pop_front() {
        for kind in MoveKind::ALL {
            for site in enumerate_moves(&cfg, parent, kind) {
                let split = site.interval(&cfg).map_or(0.0, |w| 0.5 * w);
                let next = apply_move(&cfg, parent, &site.with_split(split)).expect("enumerated move applies");
                if seen.len() < limit && seen.insert(key(&next)) {
                    queue.push_back(next);
                }
            }
        }
        out.push(cfg);
    }
    out
}

/// Sets of positive layers over a list of configurations.
pub fn support_patterns(configs: &[AugmentedConfiguration]) -> BTreeSet<Vec<usize>> {
    configs.iter().map(|c| c.support()).collect()
}

/// Every 0/1 pattern of `m` layers whose observed image equals `observed`,
/// found by exhaustive enumeration of the `2^m` supports.
pub fn brute_force_patterns(parent: &ParentSequence, observed: &[&str]) -> BTreeSet<Vec<usize>> {
    let m = parent.len();
    (0u32..1 << m)
        .filter_map(|mask| {
            let support: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
            let mut image: Vec<&str> = Vec::new();
            for &j in &support {
                let f = parent.facies(j).as_str();
                if image.last() != Some(&f) {
                    image.push(f);
                }
            }
            (image == observed).then_some(support)
        })
        .collect()
}
