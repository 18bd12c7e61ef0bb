//! Bucket schedules for recursive chaining.
//!
//! A schedule for `t` blocks is a multiset of bucket sizes
//! `b₁ ≥ b₂ ≥ … ≥ b_L` with `Σ bᵢ = t`, the last bucket pinned at
//! `b_L = 2` (the two-block base case), and every other bucket small
//! enough to be seeded by the one after it: `bᵢ ≤ 2^{bᵢ₊₁}`.
//!
//! Feasibility is exactly characterized by the cap chain `c_L = 2`,
//! `cᵢ = 2^{cᵢ₊₁}`: in any valid schedule, downward induction from the
//! pinned last bucket gives `bᵢ ≤ cᵢ`, so `2L ≤ t ≤ Σ cᵢ` is necessary
//! for length `L`; the constructor below shows it is sufficient. In
//! particular `t = 3` has no schedule at any length (L = 1 forces
//! `t = 2`, L = 2 already needs `t ≥ 4`), and every other `t ≥ 2` has
//! one.

use crate::{Error, Result};

/// `min(2^e, cap)` without overflow.
fn pow2_capped(e: u64, cap: u64) -> u64 {
    if e >= 63 {
        cap
    } else {
        (1u64 << e).min(cap)
    }
}

/// The cap chain of length `len`, values clamped at `t` (larger caps
/// never matter when the total is `t`).
fn caps(len: usize, t: u64) -> Vec<u64> {
    let mut c = vec![0u64; len];
    c[len - 1] = 2;
    for i in (0..len - 1).rev() {
        c[i] = pow2_capped(c[i + 1], t);
    }
    c
}

/// Builds the shortest valid schedule for `t`: find the minimal length
/// `L` with `2L ≤ t` and cap-chain sum `≥ t`, start all buckets at 2,
/// raise the interior buckets to their caps back to front only while the
/// leading bucket cannot absorb the remainder, then let it absorb the
/// rest and sort.
///
/// Fails with [`Error::ScheduleInfeasible`] when no length works — which
/// happens exactly at `t = 3`.
pub fn bucket_schedule(t: u64) -> Result<Vec<u64>> {
    if t < 2 {
        return Err(Error::ScheduleTooSmall(t));
    }
    let mut len = 1usize;
    loop {
        if 2 * len as u64 > t {
            return Err(Error::ScheduleInfeasible(t));
        }
        if caps(len, t).iter().map(|&c| c as u128).sum::<u128>() >= t as u128 {
            break;
        }
        len += 1;
    }

    let mut b = vec![2u64; len];
    let mut leftover = t - 2 * len as u64;
    for i in (1..len.saturating_sub(1)).rev() {
        if leftover == 0 || 2 + leftover <= pow2_capped(b[1], t) {
            break;
        }
        let cap = pow2_capped(b[i + 1], t);
        let add = leftover.min(cap - 2);
        b[i] += add;
        leftover -= add;
    }
    b[0] += leftover;
    b.sort_unstable_by(|x, y| y.cmp(x));
    debug_assert!(check_schedule(t, &b));
    Ok(b)
}

/// Checks every schedule constraint: nonempty, nonincreasing, all
/// buckets ≥ 2, last bucket exactly 2, each bucket coverable by the next
/// (`bᵢ ≤ 2^{bᵢ₊₁}`), total exactly `t`.
pub fn check_schedule(t: u64, schedule: &[u64]) -> bool {
    let Some(&last) = schedule.last() else {
        return false;
    };
    last == 2
        && schedule.iter().all(|&b| b >= 2)
        && schedule.windows(2).all(|w| w[0] >= w[1])
        && schedule
            .windows(2)
            .all(|w| w[1] >= 63 || w[0] <= 1u64 << w[1])
        && schedule.iter().map(|&b| b as u128).sum::<u128>() == t as u128
}
