//! Truncated squared residuals: anchored at points and at intervals.
//!
//! Between consecutive breakpoints the objective is a sum of the quadratics
//! currently active plus a constant, so its minimum on that stretch is the
//! mean of the active centers clamped into the stretch.

use super::{
    check_lengths, sorted_events, trunc_sq_interval_objective, trunc_sq_objective, ScalarSolution,
    TruncAbsIntervalInstance, TruncAbsPointInstance,
};
use crate::error::Result;
use crate::geometry::ScalarInterval;

/// Minimum of `count·t² − 2·sum·t + sumsq` over `[lo, hi]`, in shifted
/// coordinates.
#[inline]
fn clamped_quadratic(count: usize, sum: f64, sumsq: f64, lo: f64, hi: f64) -> (f64, f64) {
    let c = count as f64;
    let t = (sum / c).clamp(lo, hi);
    let v = sumsq - 2.0 * t * sum + c * t * t;
    (t, v.max(0.0))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (n, s) = v.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn solve_trunc_sq_point(inst: &TruncAbsPointInstance) -> Result<ScalarSolution> {
    trunc_sq_point(&inst.a, &inst.xi)
}

/// Minimizes `Σ min{(a_i − t)², ξ_i²}` over `t` in O(N log N).
pub fn trunc_sq_point(a: &[f64], xi: &[f64]) -> Result<ScalarSolution> {
    check_lengths(a.len(), xi.len())?;
    let (mut best, mut best_t) = (f64::INFINITY, 0.0);
    scan_point(a, xi, |t, v| {
        if v < best {
            best = v;
            best_t = t;
        }
    });
    Ok(ScalarSolution {
        minimizer: best_t,
        value: trunc_sq_objective(a, xi, best_t),
    })
}

const ENTER: u8 = 0;
const LEAVE: u8 = 1;

/// Calls `visit(t, value)` with the local minimizer of every stretch between
/// breakpoints, plus the fully truncated value left of all breakpoints.
fn scan_point(a: &[f64], xi: &[f64], mut visit: impl FnMut(f64, f64)) {
    // Work relative to the mean anchor to keep the running sums small.
    let shift = mean(a.iter().copied());
    let events = sorted_events(a.len(), |i| [a[i] - xi[i], a[i] + xi[i]]);

    let total: f64 = xi.iter().map(|x| x * x).sum();
    let mut cap = total;
    let (mut count, mut sum, mut sumsq) = (0usize, 0.0, 0.0);
    visit(events[0].key, total);
    for k in 0..events.len() {
        let e = events[k];
        let i = e.idx as usize;
        let d = a[i] - shift;
        let x2 = xi[i] * xi[i];
        if e.kind == ENTER {
            count += 1;
            sum += d;
            sumsq += d * d;
            cap -= x2;
        } else {
            debug_assert_eq!(e.kind, LEAVE);
            count -= 1;
            sum -= d;
            sumsq -= d * d;
            cap += x2;
            if count == 0 {
                (sum, sumsq, cap) = (0.0, 0.0, total);
            }
        }
        let Some(next) = events.get(k + 1) else { break };
        if next.key > e.key {
            if count == 0 {
                visit(e.key, cap);
            } else {
                let (t, q) = clamped_quadratic(count, sum, sumsq, e.key - shift, next.key - shift);
                visit(t + shift, q + cap.max(0.0));
            }
        }
    }
}

pub fn solve_trunc_sq_interval(inst: &TruncAbsIntervalInstance) -> Result<ScalarSolution> {
    trunc_sq_interval(&inst.b, &inst.xi)
}

/// Minimizes `Σ min{dist(t, [b_il, b_iu])², ξ_i²}` over `t`.
///
/// A term is quadratic around `b_il` on `[b_il − ξ_i, b_il]`, zero across the
/// interval and quadratic around `b_iu` on `[b_iu, b_iu + ξ_i]`. The active
/// quadratics are re-summed at every breakpoint, so the sweep costs O(N²) in
/// the worst case.
pub fn trunc_sq_interval(b: &[ScalarInterval], xi: &[f64]) -> Result<ScalarSolution> {
    check_lengths(b.len(), xi.len())?;
    let (mut best, mut best_t) = (f64::INFINITY, 0.0);
    scan_interval(b, xi, |t, v| {
        if v < best {
            best = v;
            best_t = t;
        }
    });
    Ok(ScalarSolution {
        minimizer: best_t,
        value: trunc_sq_interval_objective(b, xi, best_t),
    })
}

const ENTER_LOWER: u8 = 0;
const LEAVE_LOWER: u8 = 1;
const ENTER_UPPER: u8 = 2;
const LEAVE_UPPER: u8 = 3;

fn scan_interval(b: &[ScalarInterval], xi: &[f64], mut visit: impl FnMut(f64, f64)) {
    const NONE: u32 = u32::MAX;
    let shift = mean(b.iter().map(|iv| iv.mid()));
    let events = sorted_events(b.len(), |i| {
        [b[i].lo - xi[i], b[i].lo, b[i].hi, b[i].hi + xi[i]]
    });

    let total: f64 = xi.iter().map(|x| x * x).sum();
    let mut cap = total;
    // Pairs between their first and last breakpoint; the cap is exact again
    // once this drops to zero.
    let mut engaged = 0usize;
    let mut active: Vec<(u32, f64)> = Vec::new();
    let mut slot = vec![NONE; b.len()];
    let remove = |active: &mut Vec<(u32, f64)>, slot: &mut [u32], i: usize| {
        let p = slot[i] as usize;
        active.swap_remove(p);
        if let Some(&(moved, _)) = active.get(p) {
            slot[moved as usize] = p as u32;
        }
        slot[i] = NONE;
    };

    visit(events[0].key, total);
    for k in 0..events.len() {
        let e = events[k];
        let i = e.idx as usize;
        match e.kind {
            ENTER_LOWER => {
                engaged += 1;
                cap -= xi[i] * xi[i];
                slot[i] = active.len() as u32;
                active.push((e.idx, b[i].lo - shift));
            }
            LEAVE_LOWER => remove(&mut active, &mut slot, i),
            ENTER_UPPER => {
                slot[i] = active.len() as u32;
                active.push((e.idx, b[i].hi - shift));
            }
            LEAVE_UPPER => {
                remove(&mut active, &mut slot, i);
                engaged -= 1;
                cap += xi[i] * xi[i];
                if engaged == 0 {
                    cap = total;
                }
            }
            _ => unreachable!(),
        }
        let Some(next) = events.get(k + 1) else { break };
        if next.key > e.key {
            if active.is_empty() {
                visit(e.key, cap.max(0.0));
            } else {
                let (sum, sumsq) = active
                    .iter()
                    .fold((0.0, 0.0), |(s, q), &(_, c)| (s + c, q + c * c));
                let (t, q) =
                    clamped_quadratic(active.len(), sum, sumsq, e.key - shift, next.key - shift);
                visit(t + shift, q + cap.max(0.0));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> ScalarInterval {
        ScalarInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn single_anchor() {
        let s = trunc_sq_point(&[0.0], &[1.0]).unwrap();
        assert_eq!((s.minimizer, s.value), (0.0, 0.0));
    }

    #[test]
    fn mean_of_active_regime() {
        let s = trunc_sq_point(&[1.0, 3.0], &[10.0, 10.0]).unwrap();
        assert!((s.minimizer - 2.0).abs() < 1e-12 && (s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn separated_anchors() {
        let s = trunc_sq_point(&[0.0, 100.0], &[1.0, 1.0]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_examples() {
        assert_eq!(
            trunc_sq_interval(&[iv(0.0, 1.0)], &[1.0]).unwrap().value,
            0.0
        );
        let s = trunc_sq_interval(&[iv(0.0, 1.0), iv(3.0, 4.0)], &[1.0, 1.0]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_matches_dense_grid() {
        let b = [iv(-1.0, 1.0)];
        let xi = [0.5];
        let grid = (0..=4000)
            .map(|k| trunc_sq_interval_objective(&b, &xi, -2.0 + k as f64 * 1e-3))
            .fold(f64::INFINITY, f64::min);
        let s = trunc_sq_interval(&b, &xi).unwrap();
        assert!((s.value - grid).abs() <= 1e-9);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], n),
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..3.0], n),
            )
        })
    }

    proptest! {
        #[test]
        fn point_running_sums_match_direct((a, _w, xi) in instance()) {
            scan_point(&a, &xi, |t, v| {
                let direct = trunc_sq_objective(&a, &xi, t);
                assert!((v - direct).abs() <= 1e-9, "{v} vs {direct} at {t}");
            });
        }

        #[test]
        fn interval_running_sums_match_direct((lo, w, xi) in instance()) {
            let b: Vec<_> = lo.iter().zip(&w).map(|(&l, &w)| iv(l, l + w)).collect();
            scan_interval(&b, &xi, |t, v| {
                let direct = trunc_sq_interval_objective(&b, &xi, t);
                assert!((v - direct).abs() <= 1e-9, "{v} vs {direct} at {t}");
            });
        }

        #[test]
        fn squared_values_within_caps((a, _w, xi) in instance()) {
            let cap: f64 = xi.iter().map(|x| x * x).sum();
            let v = trunc_sq_point(&a, &xi).unwrap().value;
            prop_assert!(v >= 0.0 && v <= cap + 1e-12);
        }
    }
}
