//! Distance to the convex hull of somewhere-flat sources, as an exact
//! linear program.
//!
//! A somewhere-flat source at rate `r` keeps at least one row marginal
//! below `2^{−r}` pointwise. The hull of these is the set of mixtures
//! `Σᵢ wᵢ Pᵢ` where branch `i`'s component has its `i`-th row capped.
//! Total-variation distance from a candidate `s` to that hull is a linear
//! program once each branch component is written unnormalized, `Qᵢ`, with
//! the cap scaled by its own mass:
//!
//! ```text
//! minimize   Σᵤ eᵤ / 2
//! subject to Σᵢ Qᵢ(u) − s(u) ∈ [−eᵤ, +eᵤ]        for every state u
//!            Σᵢ Σᵤ Qᵢ(u) = 1
//!            Σ_{u: rowᵢ(u)=v} Qᵢ(u) ≤ 2^{−r} Σᵤ Qᵢ(u)   per branch i, value v
//!            Qᵢ, e ≥ 0
//! ```
//!
//! The solver is a dense two-phase simplex with Bland's rule — slow and
//! boring on purpose, so the companion alternating-projection oracle in
//! [`oracle`] has something exact to disagree with. The program is always
//! feasible (the uniform distribution lies in every branch polytope when
//! `r ≤ row_bits`), so an infeasible verdict is reported as a failure,
//! never trusted.

use bitdist::Dist;

use crate::{Error, Result};

/// Upper bound on tableau columns (structural variables plus one
/// artificial per row). Dense simplex memory is quadratic in this.
pub const LP_SIZE_CAP: usize = 10_000;

/// Entries smaller than this are not trusted as pivots.
const PIVOT_TOL: f64 = 1e-9;
/// Phase-one objective above this means the basis never became feasible.
const FEAS_TOL: f64 = 1e-7;
/// Bland's rule terminates in finitely many pivots; this cap converts
/// "finitely many" into an error instead of a hang.
const PIVOT_CAP: usize = 200_000;

/// Total-variation distance from `s` (read as `rows` rows of equal width)
/// to the hull of rate-`r` somewhere-flat sources.
pub fn hull_distance(s: &Dist, rows: usize, r: f64) -> Result<f64> {
    let n_bits = s.n_bits();
    if rows == 0 || n_bits % rows != 0 {
        return Err(Error::RowLayout {
            rows,
            row_bits: if rows == 0 { 0 } else { n_bits / rows },
            n_bits,
        });
    }
    let w = n_bits / rows;
    if !r.is_finite() || r < 0.0 || r > w as f64 {
        return Err(Error::BadRowEntropy {
            claimed: r,
            row_bits: w,
        });
    }
    let n = s.len();
    let vals = 1usize << w;
    // Columns: Q (rows·n), e, sp, s2 (n each), branch slacks (rows·vals).
    let q0 = 0;
    let e0 = rows * n;
    let sp0 = e0 + n;
    let s20 = sp0 + n;
    let s30 = s20 + n;
    let n_struct = s30 + rows * vals;
    let n_rows = 2 * n + 1 + rows * vals;
    let size = n_struct + n_rows;
    if size > LP_SIZE_CAP {
        return Err(Error::LpTooLarge {
            size,
            cap: LP_SIZE_CAP,
        });
    }

    let cap = (-r).exp2();
    let row_of = |i: usize, u: usize| (u >> ((rows - 1 - i) * w)) & (vals - 1);

    // Tableau rows carry the right-hand side in the last slot. Artificial
    // columns n_struct.. are added only where no slack can start basic:
    // the e−sp rows and the mass row.
    let mut need_art = Vec::new();
    let mut a = vec![vec![0.0; n_struct + 1]; n_rows];
    let mut basis = vec![0usize; n_rows];
    for u in 0..n {
        // Σᵢ Qᵢ(u) + e_u − sp_u = s_u
        for i in 0..rows {
            a[u][q0 + i * n + u] = 1.0;
        }
        a[u][e0 + u] = 1.0;
        a[u][sp0 + u] = -1.0;
        a[u][n_struct] = s.prob(u);
        need_art.push(u);
        // Σᵢ Qᵢ(u) − e_u + s2_u = s_u
        let row = n + u;
        for i in 0..rows {
            a[row][q0 + i * n + u] = 1.0;
        }
        a[row][e0 + u] = -1.0;
        a[row][s20 + u] = 1.0;
        a[row][n_struct] = s.prob(u);
        basis[row] = s20 + u;
    }
    let mass_row = 2 * n;
    for c in q0..e0 {
        a[mass_row][c] = 1.0;
    }
    a[mass_row][n_struct] = 1.0;
    need_art.push(mass_row);
    for i in 0..rows {
        for v in 0..vals {
            let row = 2 * n + 1 + i * vals + v;
            for u in 0..n {
                a[row][q0 + i * n + u] = if row_of(i, u) == v { 1.0 - cap } else { -cap };
            }
            a[row][s30 + i * vals + v] = 1.0;
            basis[row] = s30 + i * vals + v;
        }
    }

    // Phase one: widen each row by the artificial block, minimize its sum.
    let n_art = need_art.len();
    for row in a.iter_mut() {
        let rhs = row.pop().expect("rhs present");
        row.extend(std::iter::repeat(0.0).take(n_art));
        row.push(rhs);
    }
    let mut cost1 = vec![0.0; n_struct + n_art];
    for (j, &row) in need_art.iter().enumerate() {
        a[row][n_struct + j] = 1.0;
        basis[row] = n_struct + j;
        cost1[n_struct + j] = 1.0;
    }
    let phase1 = run_simplex(&mut a, &mut basis, &cost1)?;
    if phase1 > FEAS_TOL {
        return Err(Error::LpFailed(format!(
            "phase one stalled at {phase1:.3e}; the program should always be feasible"
        )));
    }

    // Drive any artificial still basic (at value zero) out of the basis,
    // or drop its row as redundant.
    let mut keep = vec![true; a.len()];
    for row in 0..a.len() {
        if basis[row] < n_struct {
            continue;
        }
        match (0..n_struct).find(|&j| a[row][j].abs() > PIVOT_TOL) {
            Some(j) => pivot(&mut a, &mut basis, row, j),
            None => keep[row] = false,
        }
    }
    let mut ii = 0;
    a.retain(|_| {
        ii += 1;
        keep[ii - 1]
    });
    let mut ii = 0;
    basis.retain(|_| {
        ii += 1;
        keep[ii - 1]
    });

    // Phase two on the structural columns alone.
    for row in a.iter_mut() {
        let rhs = row[n_struct + n_art];
        row.truncate(n_struct);
        row.push(rhs);
    }
    let mut cost2 = vec![0.0; n_struct];
    for u in 0..n {
        cost2[e0 + u] = 1.0;
    }
    let l1 = run_simplex(&mut a, &mut basis, &cost2)?;
    Ok((l1 / 2.0).max(0.0))
}

/// Minimizes `cost · x` over the canonical tableau `a` (each row ends in
/// its right-hand side; `basis[row]` names the unit column it starts
/// with). Bland's smallest-index rule on both the entering and leaving
/// choice, so cycling cannot happen.
fn run_simplex(a: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64]) -> Result<f64> {
    let n_rows = a.len();
    let cols = cost.len();
    let mut z = vec![0.0; cols + 1];
    for (j, slot) in z.iter_mut().enumerate() {
        let mut acc = if j < cols { cost[j] } else { 0.0 };
        for row in 0..n_rows {
            acc -= cost[basis[row]] * a[row][j];
        }
        *slot = acc;
    }
    for _ in 0..PIVOT_CAP {
        let Some(enter) = (0..cols).find(|&j| z[j] < -PIVOT_TOL) else {
            return Ok(-z[cols]);
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for row in 0..n_rows {
            if a[row][enter] > PIVOT_TOL {
                let ratio = a[row][cols] / a[row][enter];
                let tie = (ratio - best).abs() <= 1e-12;
                if ratio < best - 1e-12 || (tie && leave.is_some_and(|l| basis[row] < basis[l])) {
                    best = ratio;
                    leave = Some(row);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(Error::LpFailed("unbounded column".into()));
        };
        pivot(a, basis, leave, enter);
        let f = z[enter];
        if f != 0.0 {
            for j in 0..=cols {
                z[j] -= f * a[leave][j];
            }
        }
    }
    Err(Error::LpFailed(format!("no optimum after {PIVOT_CAP} pivots")))
}

/// Gauss–Jordan step: makes column `enter` the unit vector of row `leave`.
fn pivot(a: &mut [Vec<f64>], basis: &mut [usize], leave: usize, enter: usize) {
    let inv = 1.0 / a[leave][enter];
    for v in a[leave].iter_mut() {
        *v *= inv;
    }
    for row in 0..a.len() {
        if row != leave {
            let f = a[row][enter];
            if f != 0.0 {
                for j in 0..a[row].len() {
                    a[row][j] -= f * a[leave][j];
                }
            }
        }
    }
    basis[leave] = enter;
}

/// An independent check on the program: alternating exact L1 projections
/// onto the branch polytopes, swept over a grid of mixture weights with
/// random restarts. Every iterate is feasible, so the value is always an
/// upper bound on the true distance; agreement with [`hull_distance`] is
/// what the tests assert.
pub mod oracle {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Best hull approximation found by projected alternation over a
    /// weight grid (`weight_grid` intervals for two branches) with
    /// `restarts` extra random initializations per weight vector.
    pub fn grid_projection(
        s: &Dist,
        rows: usize,
        r: f64,
        weight_grid: usize,
        restarts: usize,
        seed: u64,
    ) -> Result<f64> {
        let n_bits = s.n_bits();
        if rows == 0 || n_bits % rows != 0 {
            return Err(Error::RowLayout {
                rows,
                row_bits: if rows == 0 { 0 } else { n_bits / rows },
                n_bits,
            });
        }
        let w = n_bits / rows;
        if !r.is_finite() || r < 0.0 || r > w as f64 {
            return Err(Error::BadRowEntropy {
                claimed: r,
                row_bits: w,
            });
        }
        let n = s.len();
        let vals = 1usize << w;
        let cap = (-r).exp2();
        let groups: Vec<Vec<usize>> = (0..rows)
            .map(|i| (0..n).map(|u| (u >> ((rows - 1 - i) * w)) & (vals - 1)).collect())
            .collect();
        let target: Vec<f64> = (0..n).map(|u| s.prob(u)).collect();

        let weights = weight_vectors(rows, weight_grid);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut best = f64::INFINITY;
        for wvec in &weights {
            for restart in 0..=restarts {
                let mut comps: Vec<Vec<f64>> = (0..rows)
                    .map(|i| {
                        let raw: Vec<f64> = if restart == 0 {
                            vec![1.0 / n as f64; n]
                        } else {
                            (0..n).map(|_| rng.gen::<f64>()).collect()
                        };
                        project_branch(&raw, &groups[i], vals, cap)
                    })
                    .collect();
                let mut last = f64::INFINITY;
                for _ in 0..100 {
                    for j in 0..rows {
                        if wvec[j] <= 1e-12 {
                            continue;
                        }
                        let y: Vec<f64> = (0..n)
                            .map(|u| {
                                let others: f64 = (0..rows)
                                    .filter(|&i| i != j)
                                    .map(|i| wvec[i] * comps[i][u])
                                    .sum();
                                (target[u] - others) / wvec[j]
                            })
                            .collect();
                        comps[j] = project_branch(&y, &groups[j], vals, cap);
                    }
                    let cost: f64 = (0..n)
                        .map(|u| {
                            let mixed: f64 = (0..rows).map(|i| wvec[i] * comps[i][u]).sum();
                            (target[u] - mixed).abs()
                        })
                        .sum();
                    if last - cost < 1e-12 {
                        last = cost.min(last);
                        break;
                    }
                    last = cost;
                }
                best = best.min(last);
            }
        }
        Ok((best / 2.0).max(0.0))
    }

    /// Exact L1 projection of `y` onto the branch polytope
    /// `{p ≥ 0, Σp = 1, Σ_{u∈ group v} p(u) ≤ cap}`. Negative entries clip
    /// to zero, over-cap groups scale down, and the mass defect or excess
    /// is settled one unit of cost per unit of mass — every adjustment
    /// moves strictly away from `y`, so the order of the sweep does not
    /// change the cost.
    fn project_branch(y: &[f64], group_of: &[usize], n_groups: usize, cap: f64) -> Vec<f64> {
        let mut p: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
        let mut gsum = vec![0.0; n_groups];
        for (u, &g) in group_of.iter().enumerate() {
            gsum[g] += p[u];
        }
        for g in 0..n_groups {
            if gsum[g] > cap {
                let scale = cap / gsum[g];
                for (u, &gg) in group_of.iter().enumerate() {
                    if gg == g {
                        p[u] *= scale;
                    }
                }
                gsum[g] = cap;
            }
        }
        let mass: f64 = p.iter().sum();
        if mass < 1.0 {
            let mut need = 1.0 - mass;
            for (u, &g) in group_of.iter().enumerate() {
                if need <= 0.0 {
                    break;
                }
                let room = (cap - gsum[g]).max(0.0);
                let take = room.min(need);
                p[u] += take;
                gsum[g] += take;
                need -= take;
            }
        } else if mass > 1.0 {
            let mut drop = mass - 1.0;
            for (u, &g) in group_of.iter().enumerate() {
                if drop <= 0.0 {
                    break;
                }
                let take = p[u].min(drop);
                p[u] -= take;
                gsum[g] -= take;
                drop -= take;
            }
        }
        p
    }

    /// All mixture weights to sweep: trivial for one branch, a grid for
    /// two, random simplex points otherwise.
    fn weight_vectors(rows: usize, grid: usize) -> Vec<Vec<f64>> {
        match rows {
            1 => vec![vec![1.0]],
            2 => (0..=grid)
                .map(|i| {
                    let a = i as f64 / grid.max(1) as f64;
                    vec![a, 1.0 - a]
                })
                .collect(),
            _ => {
                let mut rng = ChaCha12Rng::seed_from_u64(grid as u64);
                (0..(grid + 1).max(8))
                    .map(|_| {
                        let raw: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>() + 1e-3).collect();
                        let total: f64 = raw.iter().sum();
                        raw.into_iter().map(|v| v / total).collect()
                    })
                    .collect()
            }
        }
    }
}
