//! Cutoff-aware variants of the truncated absolute solvers.
//!
//! A search only needs the exact minimum when it is below the incumbent. The
//! objective `F(t) = Σ min{dist(t, [l_i, u_i]), ξ_i}` is piecewise linear, so
//! its values on a uniform grid follow from prefix sums over slope changes
//! without any sorting. Between two grid points the slope is at least minus
//! the number of falling ramps and at most the number of rising ramps
//! present, which bounds `F` on every cell. Cells whose bound reaches the
//! cutoff are dropped, and pairs that stay at their cap on every remaining
//! cell are left out of the exact sweep.

use super::{
    check_lengths, trunc_abs_interval, trunc_abs_interval_objective, trunc_abs_objective,
    trunc_abs_point, ScalarSolution,
};
use crate::error::Result;
use crate::geometry::ScalarInterval;

/// Below this many pairs the plain sweep is cheap enough.
const SCREEN_MIN: usize = 2048;
/// Grid cells per mean threshold.
const CELLS_PER_XI: f64 = 8.0;
const MAX_CELLS: usize = 1 << 16;

/// Outcome of a solve against a cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounded {
    /// The exact minimum.
    Exact(ScalarSolution),
    /// The minimum is at least this value, which is itself at least the
    /// cutoff.
    AtLeast(f64),
}

impl Bounded {
    /// The exact value, or a lower bound on it that reaches the cutoff.
    pub fn value(&self) -> f64 {
        match self {
            Self::Exact(s) => s.value,
            Self::AtLeast(v) => *v,
        }
    }
}

/// [`trunc_abs_point`], exact whenever the minimum is below `cutoff`.
pub fn trunc_abs_point_below(a: &[f64], xi: &[f64], cutoff: f64) -> Result<Bounded> {
    check_lengths(a.len(), xi.len())?;
    match screen(a.len(), |i| a[i], |i| a[i], xi, cutoff) {
        Screen::All => Ok(Bounded::Exact(trunc_abs_point(a, xi)?)),
        Screen::Pruned(v) => Ok(Bounded::AtLeast(v)),
        Screen::Subset(keep) => {
            let sub: Vec<f64> = keep.iter().map(|&i| a[i]).collect();
            let sub_xi: Vec<f64> = keep.iter().map(|&i| xi[i]).collect();
            let t = trunc_abs_point(&sub, &sub_xi)?.minimizer;
            Ok(confirm(t, trunc_abs_objective(a, xi, t), cutoff))
        }
    }
}

/// [`trunc_abs_interval`], exact whenever the minimum is below `cutoff`.
pub fn trunc_abs_interval_below(b: &[ScalarInterval], xi: &[f64], cutoff: f64) -> Result<Bounded> {
    check_lengths(b.len(), xi.len())?;
    match screen(b.len(), |i| b[i].lo, |i| b[i].hi, xi, cutoff) {
        Screen::All => Ok(Bounded::Exact(trunc_abs_interval(b, xi)?)),
        Screen::Pruned(v) => Ok(Bounded::AtLeast(v)),
        Screen::Subset(keep) => {
            let sub: Vec<ScalarInterval> = keep.iter().map(|&i| b[i]).collect();
            let sub_xi: Vec<f64> = keep.iter().map(|&i| xi[i]).collect();
            let t = trunc_abs_interval(&sub, &sub_xi)?.minimizer;
            Ok(confirm(t, trunc_abs_interval_objective(b, xi, t), cutoff))
        }
    }
}

/// The subset objective plus the caps of the dropped pairs is never below
/// `F` and agrees with it on every surviving cell, so when `min F` is below
/// the cutoff the subset minimizer attains it.
fn confirm(t: f64, value: f64, cutoff: f64) -> Bounded {
    if value < cutoff {
        Bounded::Exact(ScalarSolution {
            minimizer: t,
            value,
        })
    } else {
        Bounded::AtLeast(cutoff)
    }
}

enum Screen {
    All,
    Pruned(f64),
    Subset(Vec<usize>),
}

fn screen(
    n: usize,
    lo: impl Fn(usize) -> f64,
    hi: impl Fn(usize) -> f64,
    xi: &[f64],
    cutoff: f64,
) -> Screen {
    let total: f64 = xi.iter().sum();
    // F never exceeds Σξ, so a cutoff at or above it prunes nothing.
    if n < SCREEN_MIN || !(cutoff < total) {
        return Screen::All;
    }
    let (mut left, mut right) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        left = left.min(lo(i) - xi[i]);
        right = right.max(hi(i) + xi[i]);
    }
    let span = right - left;
    if !(span > 0.0 && span.is_finite()) {
        return Screen::All;
    }
    let cells = ((span * n as f64 / total * CELLS_PER_XI).ceil() as usize).clamp(1, MAX_CELLS);
    let w = span / cells as f64;
    let inv = cells as f64 / span;

    // Grid point k sits at t_k = left + k·w. A slope change at p enters the
    // prefix sums from the first grid point at or right of p.
    let first_point = |p: f64| (((p - left) * inv).ceil().max(0.0) as usize).min(cells + 1);
    // Cell containing p, widened by one on either side against rounding.
    let cell = |p: f64| (((p - left) * inv).floor().max(0.0) as usize).min(cells - 1);
    let mut slope = vec![0i64; cells + 2];
    let mut moment = vec![0.0f64; cells + 2];
    let mut falling = vec![0i64; cells + 2];
    let mut rising = vec![0i64; cells + 2];
    for i in 0..n {
        let (l, u, x) = (lo(i), hi(i), xi[i]);
        for (p, s) in [(l - x, -1i64), (l, 1), (u, 1), (u + x, -1)] {
            let k = first_point(p);
            slope[k] += s;
            moment[k] += s as f64 * (p - left);
        }
        falling[cell(l - x).saturating_sub(1)] += 1;
        falling[cell(l) + 2] -= 1;
        rising[cell(u).saturating_sub(1)] += 1;
        rising[cell(u + x) + 2] -= 1;
    }

    // Worst-case rounding of the prefix sums and grid evaluations.
    let delta = 8.0 * (4 * n + cells) as f64 * f64::EPSILON * (4.0 * n as f64 * span + total);
    let mut values = Vec::with_capacity(cells + 1);
    let (mut s, mut m) = (0i64, 0.0f64);
    for k in 0..=cells {
        s += slope[k];
        m += moment[k];
        values.push(total + s as f64 * (k as f64 * w) - m);
    }

    let mut alive = vec![false; cells];
    let mut floor = f64::INFINITY;
    let (mut down, mut up) = (0i64, 0i64);
    for k in 0..cells {
        down += falling[k];
        up += rising[k];
        let bound = (values[k] - down as f64 * w).max(values[k + 1] - up as f64 * w) - delta;
        floor = floor.min(bound);
        alive[k] = bound < cutoff;
    }
    if !alive.iter().any(|&a| a) {
        return Screen::Pruned(floor.min(total));
    }

    // alive_before[k]: surviving cells among the first k.
    let mut alive_before = Vec::with_capacity(cells + 1);
    alive_before.push(0u32);
    for &a in &alive {
        alive_before.push(alive_before.last().unwrap() + a as u32);
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| {
            let first = cell(lo(i) - xi[i]).saturating_sub(1);
            let last = (cell(hi(i) + xi[i]) + 1).min(cells - 1);
            alive_before[last + 1] > alive_before[first]
        })
        .collect();
    if keep.len() * 2 > n {
        Screen::All
    } else {
        Screen::Subset(keep)
    }
}
