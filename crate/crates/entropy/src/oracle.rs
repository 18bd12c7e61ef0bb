//! Naive reference computations used to cross-check the closed forms.
//!
//! These are intentionally simple: they define the quantity being
//! computed in the most literal way the test suites can afford, and the
//! production code is checked against them. Nothing here should be used
//! for real work — the closed forms are both exact and faster.

use bitdist::Dist;

use crate::clip_excess;

/// Largest threshold on the grid `{0, step, 2·step, …} ∪ {n}` whose clip
/// excess is within `eps` — a gridded `H^ε`. Binary search over the grid;
/// valid because `E(2^{−k})` is nondecreasing in `k`, so the predicate
/// `E ≤ ε` is monotone along the grid.
pub fn grid_smooth_min_entropy(x: &Dist, eps: f64, step: f64) -> f64 {
    // Same point set as `grid`, indexed lazily: materializing millions of
    // thresholds per call would dwarf the ~log₂(n/step) probes the search
    // actually makes.
    let n = x.n_bits() as f64;
    let count = (n / step).floor() as usize;
    let last = if (count as f64) * step < n { count + 1 } else { count };
    let ks = |i: usize| if i > count { n } else { i as f64 * step };
    // Invariant: predicate holds at `lo`, fails beyond `hi`.
    if !holds(x, ks(0), eps) {
        return ks(0);
    }
    let (mut lo, mut hi) = (0usize, last);
    if holds(x, ks(hi), eps) {
        return ks(hi);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(x, ks(mid), eps) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ks(lo)
}

/// Same grid, scanned linearly. Exists to pin the binary search down in
/// tests; quadratically slower, so only used with coarse steps.
pub fn grid_smooth_min_entropy_linear(x: &Dist, eps: f64, step: f64) -> f64 {
    let mut best = 0.0;
    for k in grid(x.n_bits(), step) {
        if holds(x, k, eps) {
            best = k;
        } else {
            break;
        }
    }
    best
}

fn grid(n_bits: usize, step: f64) -> Vec<f64> {
    let n = n_bits as f64;
    let count = (n / step).floor() as usize;
    let mut ks: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    if *ks.last().unwrap() < n {
        ks.push(n);
    }
    ks
}

fn holds(x: &Dist, k: f64, eps: f64) -> bool {
    clip_excess(x, (-k).exp2()) <= eps
}
