//! Interval stabbing: the point covered by the most closed intervals.

use super::{merge_streams, sorted_keys, ScalarSolution, StabSet};
use crate::geometry::ScalarInterval;

const OPEN: u8 = 0;
const CLOSE: u8 = 1;

/// Deepest point of a stabbing sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabRegion {
    pub count: usize,
    /// The maximal run of the first deepest region found. Every point in it
    /// is covered `count` times.
    pub region: ScalarInterval,
}

/// Returns a stabber of maximal depth (the left end of the deepest region)
/// and that depth as the value.
pub fn interval_stab(set: &StabSet) -> ScalarSolution {
    let r = stab_region(&set.intervals);
    ScalarSolution {
        minimizer: r.region.lo,
        value: r.count as f64,
    }
}

/// Sweeps interval endpoints. Openings sort before closings at equal keys,
/// so intervals that only touch still count as overlapping.
pub fn stab_region(intervals: &[ScalarInterval]) -> StabRegion {
    let lows = sorted_keys(intervals.iter().map(|iv| iv.lo));
    let highs = sorted_keys(intervals.iter().map(|iv| iv.hi));

    let mut depth = 0usize;
    let mut best = StabRegion {
        count: 0,
        region: ScalarInterval::point(0.0),
    };
    // Set right after an opening reaches a new maximum; the next event,
    // necessarily a closing, ends the deepest region.
    let mut open_region = false;
    merge_streams([(&lows[..], 0.0), (&highs[..], 0.0)], |key, kind| {
        if open_region {
            best.region.hi = key;
            open_region = false;
        }
        if kind == OPEN {
            depth += 1;
            if depth > best.count {
                best = StabRegion {
                    count: depth,
                    region: ScalarInterval::point(key),
                };
                open_region = true;
            }
        } else {
            debug_assert_eq!(kind, CLOSE);
            depth -= 1;
        }
    });
    best
}
