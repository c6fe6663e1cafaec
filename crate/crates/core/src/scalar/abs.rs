//! Truncated absolute residuals: anchored at points and at intervals.

use super::{
    check_lengths, merge_streams, sorted_keys, trunc_abs_interval_objective, trunc_abs_objective,
    uniform, ScalarSolution, TruncAbsIntervalInstance, TruncAbsPointInstance,
};
use crate::error::Result;
use crate::geometry::ScalarInterval;

const LEFT: u8 = 0;
const ANCHOR: u8 = 1;
const RIGHT: u8 = 2;

pub fn solve_trunc_abs_point(inst: &TruncAbsPointInstance) -> Result<ScalarSolution> {
    trunc_abs_point(&inst.a, &inst.xi)
}

/// Minimizes `Σ min{|a_i − t|, ξ_i}` over `t`.
///
/// The objective is piecewise linear with breakpoints `a_i ± ξ_i` and `a_i`,
/// and only reaches its minimum at some anchor `a_i`. The sweep tracks how
/// many terms are currently rising minus falling and advances the value
/// between consecutive breakpoints in O(1).
pub fn trunc_abs_point(a: &[f64], xi: &[f64]) -> Result<ScalarSolution> {
    check_lengths(a.len(), xi.len())?;
    let mut best = f64::INFINITY;
    let mut best_t = 0.0;
    scan_point(a, xi, |key, kind, value| {
        if kind == ANCHOR && value < best {
            best = value;
            best_t = key;
        }
    });
    Ok(ScalarSolution {
        minimizer: best_t,
        value: trunc_abs_objective(a, xi, best_t),
    })
}

/// Sweeps the breakpoints, calling `visit(key, kind, value)` with the
/// objective value at each.
fn scan_point(a: &[f64], xi: &[f64], mut visit: impl FnMut(f64, u8, f64)) {
    let (lefts, anchors, rights);
    let streams = match uniform(xi) {
        // One sorted copy serves all three streams.
        Some(x) => {
            anchors = sorted_keys(a.iter().copied());
            [(&anchors[..], -x), (&anchors[..], 0.0), (&anchors[..], x)]
        }
        None => {
            lefts = sorted_keys(a.iter().zip(xi).map(|(a, x)| a - x));
            anchors = sorted_keys(a.iter().copied());
            rights = sorted_keys(a.iter().zip(xi).map(|(a, x)| a + x));
            [(&lefts[..], 0.0), (&anchors[..], 0.0), (&rights[..], 0.0)]
        }
    };

    // Left of every breakpoint each term sits at its cap.
    let mut value: f64 = xi.iter().sum();
    let mut prev = f64::NAN;
    let mut slope = 0i64;
    merge_streams(streams, |key, kind| {
        if slope != 0 {
            value += slope as f64 * (key - prev);
        }
        prev = key;
        slope += match kind {
            LEFT => -1,
            ANCHOR => 2,
            RIGHT => -1,
            _ => unreachable!(),
        };
        visit(key, kind, value);
    });
}

pub fn solve_trunc_abs_interval(inst: &TruncAbsIntervalInstance) -> Result<ScalarSolution> {
    trunc_abs_interval(&inst.b, &inst.xi)
}

/// Minimizes `Σ min{dist(t, [b_il, b_iu]), ξ_i}` over `t`.
///
/// Each term is flat at `ξ_i`, falls to zero on `[b_il − ξ_i, b_il]`, stays
/// zero across the interval and rises back on `[b_iu, b_iu + ξ_i]`. The
/// minimum is reached at some interval endpoint.
pub fn trunc_abs_interval(b: &[ScalarInterval], xi: &[f64]) -> Result<ScalarSolution> {
    check_lengths(b.len(), xi.len())?;
    let mut best = f64::INFINITY;
    let mut best_t = 0.0;
    scan_interval(b, xi, |key, kind, value| {
        if (kind == LOWER || kind == UPPER) && value < best {
            best = value;
            best_t = key;
        }
    });
    Ok(ScalarSolution {
        minimizer: best_t,
        value: trunc_abs_interval_objective(b, xi, best_t),
    })
}

const OUTER_LEFT: u8 = 0;
const LOWER: u8 = 1;
const UPPER: u8 = 2;
const OUTER_RIGHT: u8 = 3;

fn scan_interval(b: &[ScalarInterval], xi: &[f64], mut visit: impl FnMut(f64, u8, f64)) {
    let lows = sorted_keys(b.iter().map(|iv| iv.lo));
    let highs = sorted_keys(b.iter().map(|iv| iv.hi));
    let (outer_lows, outer_highs);
    let streams = match uniform(xi) {
        Some(x) => [
            (&lows[..], -x),
            (&lows[..], 0.0),
            (&highs[..], 0.0),
            (&highs[..], x),
        ],
        None => {
            outer_lows = sorted_keys(b.iter().zip(xi).map(|(iv, x)| iv.lo - x));
            outer_highs = sorted_keys(b.iter().zip(xi).map(|(iv, x)| iv.hi + x));
            [
                (&outer_lows[..], 0.0),
                (&lows[..], 0.0),
                (&highs[..], 0.0),
                (&outer_highs[..], 0.0),
            ]
        }
    };

    let mut value: f64 = xi.iter().sum();
    let mut prev = f64::NAN;
    let mut slope = 0i64;
    merge_streams(streams, |key, kind| {
        if slope != 0 {
            value += slope as f64 * (key - prev);
        }
        prev = key;
        slope += match kind {
            OUTER_LEFT => -1,
            LOWER => 1,
            UPPER => 1,
            OUTER_RIGHT => -1,
            _ => unreachable!(),
        };
        visit(key, kind, value);
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{trunc_abs_interval_objective, trunc_abs_objective};

    use proptest::prelude::*;

    fn anchors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..3.0], n),
            )
        })
    }

    proptest! {
        #[test]
        fn point_recurrence_matches_direct(inst in anchors()) {
            let (a, xi) = inst;
            scan_point(&a, &xi, |key, _, value| {
                let direct = trunc_abs_objective(&a, &xi, key);
                assert!((value - direct).abs() <= 1e-9, "{value} vs {direct}");
            });
        }

        #[test]
        fn interval_recurrence_matches_direct(inst in anchors(), w in prop::collection::vec(0.0f64..2.0, 40)) {
            let (lo, xi) = inst;
            let b: Vec<_> = lo.iter().zip(&w).map(|(&l, &w)| iv(l, l + w)).collect();
            scan_interval(&b, &xi, |key, _, value| {
                let direct = trunc_abs_interval_objective(&b, &xi, key);
                assert!((value - direct).abs() <= 1e-9, "{value} vs {direct}");
            });
        }

        #[test]
        fn values_stay_within_caps(inst in anchors()) {
            let (a, xi) = inst;
            let s = trunc_abs_point(&a, &xi).unwrap();
            prop_assert!(s.value >= 0.0 && s.value <= xi.iter().sum::<f64>() + 1e-12);
            prop_assert!(a.contains(&s.minimizer));
        }

        #[test]
        fn shrinking_intervals_never_lowers_value(
            inst in anchors(),
            w in prop::collection::vec(0.0f64..2.0, 40),
            shrink in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 40),
        ) {
            let (lo, xi) = inst;
            let wide: Vec<_> = lo.iter().zip(&w).map(|(&l, &w)| iv(l, l + w)).collect();
            let narrow: Vec<_> = wide.iter().zip(&shrink).map(|(b, &(p, q))| {
                let a = b.lo + p * b.width();
                iv(a, a + q * (b.hi - a))
            }).collect();
            let vw = trunc_abs_interval(&wide, &xi).unwrap().value;
            let vn = trunc_abs_interval(&narrow, &xi).unwrap().value;
            prop_assert!(vn >= vw - 1e-9);
        }
    }

    fn iv(lo: f64, hi: f64) -> ScalarInterval {
        ScalarInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn coincident_anchors() {
        let s = trunc_abs_point(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.minimizer, s.value), (0.0, 0.0));
    }

    #[test]
    fn wide_thresholds_pick_median() {
        let s = trunc_abs_point(&[1.0, 2.0, 3.0], &[10.0, 10.0, 10.0]).unwrap();
        assert_eq!((s.minimizer, s.value), (2.0, 2.0));
    }

    #[test]
    fn separated_anchors() {
        let s = trunc_abs_point(&[0.0, 10.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.value, 1.0);
        assert!(s.minimizer == 0.0 || s.minimizer == 10.0);
    }

    #[test]
    fn zero_thresholds() {
        let s = trunc_abs_point(&[3.0, 3.0, 5.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(trunc_abs_point(&[], &[]).is_err());
        assert!(trunc_abs_interval(&[], &[]).is_err());
    }

    #[test]
    fn interval_inside_zeroes() {
        let s = trunc_abs_interval(&[iv(0.0, 1.0)], &[1.0]).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.minimizer == 0.0 || s.minimizer == 1.0);
    }

    #[test]
    fn two_disjoint_intervals() {
        let s = trunc_abs_interval(&[iv(0.0, 1.0), iv(3.0, 4.0)], &[1.0, 1.0]).unwrap();
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn shared_endpoint() {
        let s = trunc_abs_interval(&[iv(0.0, 1.0), iv(1.0, 2.0)], &[5.0, 5.0]).unwrap();
        assert_eq!((s.minimizer, s.value), (1.0, 0.0));
    }
}
