//! Exact one-dimensional solvers for truncated residual sums.
//!
//! Every solver sorts the breakpoints of its piecewise objective once and
//! sweeps them left to right. At equal keys entries are processed in the
//! order left endpoint, anchor, right endpoint, so that degenerate inputs
//! (repeated values, zero thresholds) are handled deterministically.

mod abs;
mod oracle;
mod screen;
mod sq;
mod stab;

pub use abs::{
    solve_trunc_abs_interval, solve_trunc_abs_point, trunc_abs_interval, trunc_abs_point,
};
pub use oracle::{
    oracle_trunc_abs_interval, oracle_trunc_abs_point, oracle_trunc_sq_interval,
    oracle_trunc_sq_point, DEFAULT_ORACLE_CAP,
};
pub use screen::{trunc_abs_interval_below, trunc_abs_point_below, Bounded};
pub use sq::{solve_trunc_sq_interval, solve_trunc_sq_point, trunc_sq_interval, trunc_sq_point};
pub use stab::{interval_stab, stab_region, StabRegion};

use crate::error::{Error, Result};
use crate::geometry::ScalarInterval;

/// Anchors `a_i` with thresholds `xi_i`, shared by the absolute and squared
/// point solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncAbsPointInstance {
    pub a: Vec<f64>,
    pub xi: Vec<f64>,
}

impl TruncAbsPointInstance {
    pub fn new(a: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        check_thresholds(a.len(), &xi)?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("anchor is not finite".into()));
        }
        Ok(Self { a, xi })
    }
}

/// Offset intervals `[b_il, b_iu]` with thresholds `xi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncAbsIntervalInstance {
    pub b: Vec<ScalarInterval>,
    pub xi: Vec<f64>,
}

impl TruncAbsIntervalInstance {
    pub fn new(b: Vec<ScalarInterval>, xi: Vec<f64>) -> Result<Self> {
        check_thresholds(b.len(), &xi)?;
        if b.iter()
            .any(|iv| !(iv.lo <= iv.hi && iv.lo.is_finite() && iv.hi.is_finite()))
        {
            return Err(Error::InvalidInput(
                "offset interval is inverted or not finite".into(),
            ));
        }
        Ok(Self { b, xi })
    }
}

/// A set of closed intervals to stab.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StabSet {
    pub intervals: Vec<ScalarInterval>,
}

/// Minimizer (or stabber) and the attained value (or stab count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSolution {
    pub minimizer: f64,
    pub value: f64,
}

fn check_thresholds(n: usize, xi: &[f64]) -> Result<()> {
    if xi.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} entries but {} thresholds",
            xi.len()
        )));
    }
    if xi.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(
            "threshold is negative or not finite".into(),
        ));
    }
    Ok(())
}

fn check_lengths(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    if n != m {
        return Err(Error::InvalidInput(format!(
            "{n} entries but {m} thresholds"
        )));
    }
    Ok(())
}

/// Distance from `t` to the closed interval `iv`.
#[inline]
pub fn interval_distance(iv: &ScalarInterval, t: f64) -> f64 {
    if t < iv.lo {
        iv.lo - t
    } else if t > iv.hi {
        t - iv.hi
    } else {
        0.0
    }
}

/// `Σ min{|a_i − t|, ξ_i}`.
pub fn trunc_abs_objective(a: &[f64], xi: &[f64], t: f64) -> f64 {
    a.iter().zip(xi).map(|(&a, &x)| (a - t).abs().min(x)).sum()
}

/// `Σ min{dist(t, [b_il, b_iu]), ξ_i}`.
pub fn trunc_abs_interval_objective(b: &[ScalarInterval], xi: &[f64], t: f64) -> f64 {
    b.iter()
        .zip(xi)
        .map(|(iv, &x)| interval_distance(iv, t).min(x))
        .sum()
}

/// `Σ min{(a_i − t)², ξ_i²}`.
pub fn trunc_sq_objective(a: &[f64], xi: &[f64], t: f64) -> f64 {
    a.iter()
        .zip(xi)
        .map(|(&a, &x)| ((a - t) * (a - t)).min(x * x))
        .sum()
}

/// `Σ min{dist(t, [b_il, b_iu])², ξ_i²}`.
pub fn trunc_sq_interval_objective(b: &[ScalarInterval], xi: &[f64], t: f64) -> f64 {
    b.iter()
        .zip(xi)
        .map(|(iv, &x)| {
            let d = interval_distance(iv, t);
            (d * d).min(x * x)
        })
        .sum()
}

/// Sweep entry: breakpoint, kind (tie priority) and owning pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Event {
    pub key: f64,
    pub kind: u8,
    pub idx: u32,
}

const PAR_SORT_MIN: usize = 1 << 15;

/// Order-preserving image of a float in the unsigned integers. Integer
/// sorts run well ahead of float comparison sorts.
#[inline]
fn key_bits(x: f64) -> u64 {
    // `+ 0.0` folds `-0.0` into `+0.0` so signed zeros are one breakpoint.
    let b = (x + 0.0).to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}

#[inline]
fn key_value(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

fn sort_u64(v: &mut [u64]) {
    use rayon::slice::ParallelSliceMut;
    if v.len() >= PAR_SORT_MIN {
        v.par_sort_unstable();
    } else {
        v.sort_unstable();
    }
}

/// Ascending copy of `keys`.
pub(crate) fn sorted_keys(keys: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut bits: Vec<u64> = keys.map(key_bits).collect();
    sort_u64(&mut bits);
    bits.into_iter().map(key_value).collect()
}

/// The common threshold when every pair has the same one.
pub(crate) fn uniform(xi: &[f64]) -> Option<f64> {
    let first = *xi.first()?;
    xi.iter().all(|&x| x == first).then_some(first)
}

/// Walks sorted streams in merged order, calling `visit(key, kind)` where
/// `kind` is the stream's position. Each stream is an ascending slice plus a
/// constant added to every key, so one sorted slice can serve several
/// streams. Equal keys come out in stream order.
pub(crate) fn merge_streams<const K: usize>(
    streams: [(&[f64], f64); K],
    mut visit: impl FnMut(f64, u8),
) {
    let head = |k: usize, p: usize| match streams[k].0.get(p) {
        Some(&v) => v + streams[k].1 + 0.0,
        None => f64::INFINITY,
    };
    let mut pos = [0usize; K];
    let mut heads: [f64; K] = std::array::from_fn(|k| head(k, 0));
    let total: usize = streams.iter().map(|s| s.0.len()).sum();
    for _ in 0..total {
        let (mut k, mut key) = (0, heads[0]);
        for (j, &h) in heads.iter().enumerate().skip(1) {
            if h < key {
                (k, key) = (j, h);
            }
        }
        visit(key, k as u8);
        pos[k] += 1;
        heads[k] = head(k, pos[k]);
    }
}

/// Builds the `K` events of each of `n` pairs and sorts them by key, then
/// kind. `keys(i)[k]` is the key of pair `i`'s event of kind `k`.
pub(crate) fn sorted_events<const K: usize>(
    n: usize,
    keys: impl Fn(usize) -> [f64; K],
) -> Vec<Event> {
    let mut tagged: Vec<(u64, u8, u32)> = Vec::with_capacity(K * n);
    for i in 0..n {
        for (k, key) in keys(i).into_iter().enumerate() {
            tagged.push((key_bits(key), k as u8, i as u32));
        }
    }
    tagged.sort_unstable();
    tagged
        .into_iter()
        .map(|(key, kind, idx)| Event {
            key: key_value(key),
            kind,
            idx,
        })
        .collect()
}
