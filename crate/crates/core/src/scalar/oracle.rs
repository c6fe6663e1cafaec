//! Quadratic-time reference solvers used to cross-check the sweeps.
//!
//! They evaluate the objective directly at every candidate location instead
//! of maintaining running state, which makes them slow but hard to get wrong.

use super::{
    check_lengths, interval_distance, trunc_abs_interval_objective, trunc_abs_objective,
    trunc_sq_interval_objective, trunc_sq_objective, ScalarSolution, TruncAbsIntervalInstance,
    TruncAbsPointInstance,
};
use crate::error::{Error, Result};
use crate::geometry::ScalarInterval;

pub const DEFAULT_ORACLE_CAP: usize = 10_000;

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::OracleCap { n, cap })
    } else {
        Ok(())
    }
}

fn argmin(candidates: impl Iterator<Item = f64>, f: impl Fn(f64) -> f64) -> ScalarSolution {
    let mut best = ScalarSolution {
        minimizer: f64::NAN,
        value: f64::INFINITY,
    };
    for t in candidates {
        let v = f(t);
        if v < best.value {
            best = ScalarSolution {
                minimizer: t,
                value: v,
            };
        }
    }
    best
}

pub fn oracle_trunc_abs_point(inst: &TruncAbsPointInstance, cap: usize) -> Result<ScalarSolution> {
    let (a, xi) = (&inst.a, &inst.xi);
    check_lengths(a.len(), xi.len())?;
    check_cap(a.len(), cap)?;
    let candidates = a.iter().zip(xi).flat_map(|(&a, &x)| [a, a - x, a + x]);
    Ok(argmin(candidates, |t| trunc_abs_objective(a, xi, t)))
}

pub fn oracle_trunc_abs_interval(
    inst: &TruncAbsIntervalInstance,
    cap: usize,
) -> Result<ScalarSolution> {
    let (b, xi) = (&inst.b, &inst.xi);
    check_lengths(b.len(), xi.len())?;
    check_cap(b.len(), cap)?;
    let candidates = b
        .iter()
        .zip(xi)
        .flat_map(|(iv, &x)| [iv.lo, iv.hi, iv.lo - x, iv.hi + x]);
    Ok(argmin(candidates, |t| {
        trunc_abs_interval_objective(b, xi, t)
    }))
}

/// Sorted distinct breakpoints.
fn breakpoints(mut keys: Vec<f64>) -> Vec<f64> {
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    keys
}

/// Clamped mean of `centers` on `[lo, hi]`, or `lo` when nothing is active.
fn clamped_mean(centers: &[f64], lo: f64, hi: f64) -> f64 {
    if centers.is_empty() {
        lo
    } else {
        (centers.iter().sum::<f64>() / centers.len() as f64).clamp(lo, hi)
    }
}

pub fn oracle_trunc_sq_point(inst: &TruncAbsPointInstance, cap: usize) -> Result<ScalarSolution> {
    let (a, xi) = (&inst.a, &inst.xi);
    check_lengths(a.len(), xi.len())?;
    check_cap(a.len(), cap)?;
    let keys = breakpoints(
        a.iter()
            .zip(xi)
            .flat_map(|(&a, &x)| [a - x, a + x])
            .collect(),
    );
    let mut candidates = keys.clone();
    for w in keys.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        // Which terms are quadratic on this stretch, decided at its midpoint.
        let centers: Vec<f64> = a
            .iter()
            .zip(xi)
            .filter(|(&a, &x)| (a - m).abs() < x)
            .map(|(&a, _)| a)
            .collect();
        candidates.push(clamped_mean(&centers, w[0], w[1]));
    }
    Ok(argmin(candidates.into_iter(), |t| {
        trunc_sq_objective(a, xi, t)
    }))
}

pub fn oracle_trunc_sq_interval(
    inst: &TruncAbsIntervalInstance,
    cap: usize,
) -> Result<ScalarSolution> {
    let (b, xi) = (&inst.b, &inst.xi);
    check_lengths(b.len(), xi.len())?;
    check_cap(b.len(), cap)?;
    let keys = breakpoints(
        b.iter()
            .zip(xi)
            .flat_map(|(iv, &x)| [iv.lo - x, iv.lo, iv.hi, iv.hi + x])
            .collect(),
    );
    let mut candidates = keys.clone();
    for w in keys.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let centers: Vec<f64> = b
            .iter()
            .zip(xi)
            .filter_map(|(iv, &x)| nearest_end(iv, m, x))
            .collect();
        candidates.push(clamped_mean(&centers, w[0], w[1]));
    }
    Ok(argmin(candidates.into_iter(), |t| {
        trunc_sq_interval_objective(b, xi, t)
    }))
}

/// The interval end a term is quadratic around at `t`, if it is quadratic there.
fn nearest_end(iv: &ScalarInterval, t: f64, xi: f64) -> Option<f64> {
    let d = interval_distance(iv, t);
    if d > 0.0 && d < xi {
        Some(if t < iv.lo { iv.lo } else { iv.hi })
    } else {
        None
    }
}
