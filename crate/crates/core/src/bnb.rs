//! Best-first branch and bound.
//!
//! Branches wait in a min-priority queue keyed on their lower bound, with
//! FIFO order among equal keys. Popping a branch whose lower bound is within
//! `epsilon` of the incumbent ends the search: with a min-queue that bound is
//! also the global one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Debug;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Bound slack tolerated before a branch is reported as inconsistent.
const BOUND_SLACK: f64 = 1e-9;

/// A minimization problem over a branchable domain.
///
/// Bound evaluations for sibling branches run concurrently, so every method
/// must be pure.
pub trait BranchProblem: Sync {
    type Branch: Clone + Debug + Send + Sync;
    type Point: Clone + Debug + Send;

    /// A value no larger than the objective anywhere in `branch`.
    fn lower_bound(&self, branch: &Self::Branch) -> Result<f64>;

    /// The objective at one feasible point of `branch`, usually its center.
    fn upper_bound(&self, branch: &Self::Branch) -> Result<(f64, Self::Point)>;

    /// [`Self::lower_bound`] when it is below `cutoff`; otherwise any lower
    /// bound of at least `cutoff`. Lets the search skip exact work on
    /// branches it is about to prune.
    fn lower_bound_below(&self, branch: &Self::Branch, cutoff: f64) -> Result<f64> {
        let _ = cutoff;
        self.lower_bound(branch)
    }

    /// [`Self::upper_bound`] when it is below `cutoff`; otherwise any value
    /// of at least `cutoff`, with a point that must not be used.
    fn upper_bound_below(&self, branch: &Self::Branch, cutoff: f64) -> Result<(f64, Self::Point)> {
        let _ = cutoff;
        self.upper_bound(branch)
    }

    fn subdivide(&self, branch: &Self::Branch) -> Vec<Self::Branch>;

    /// True when `branch` is narrower than `resolution` along every axis.
    fn is_resolved(&self, branch: &Self::Branch, resolution: f64) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnBConfig {
    /// Absolute optimality gap.
    pub epsilon: f64,
    /// Branches narrower than this on every axis are not split further.
    pub min_resolution: f64,
    pub max_nodes: usize,
    /// Stop expanding once this much time has passed. Runs that hit it are
    /// not reproducible.
    pub time_limit: Option<Duration>,
    /// Keep a [`Trace`] of the run in the report.
    pub record_trace: bool,
}

impl BnBConfig {
    pub const DEFAULT_RESOLUTION: f64 = 1e-3;
    pub const DEFAULT_MAX_NODES: usize = 5_000_000;

    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            min_resolution: Self::DEFAULT_RESOLUTION,
            max_nodes: Self::DEFAULT_MAX_NODES,
            time_limit: None,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.min_resolution > 0.0) {
            return Err(Error::InvalidInput(format!(
                "min_resolution must be positive, got {}",
                self.min_resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The incumbent is within `epsilon` of the global lower bound.
    Converged,
    /// Every remaining branch fell below the resolution.
    Exhausted,
    /// `max_nodes` expansions were spent.
    NodeLimit,
    /// `time_limit` ran out.
    TimeLimit,
}

/// Observations recorded when [`BnBConfig::record_trace`] is set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    /// `(lower bound, incumbent)` at every pop that led to an expansion.
    pub pops: Vec<(f64, f64)>,
    /// Incumbent values in the order they were adopted.
    pub incumbents: Vec<f64>,
    /// `(parent, child)` lower bounds for every evaluated child.
    pub nesting: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct BnBReport<P> {
    pub best_point: P,
    pub best_value: f64,
    /// Smallest lower bound still standing: the queue head, finalized leaves
    /// or the incumbent itself.
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes_expanded: usize,
    pub nodes_pruned: usize,
    pub nodes_finalized: usize,
    pub termination: Termination,
    pub wall_time: Duration,
    pub trace: Option<Trace>,
}

struct Node<B> {
    lower: f64,
    seq: u64,
    branch: B,
}

impl<B> PartialEq for Node<B> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<B> Eq for Node<B> {}

impl<B> PartialOrd for Node<B> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<B> Ord for Node<B> {
    // `BinaryHeap` pops the maximum: invert so the smallest bound, then the
    // oldest entry, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lower
            .total_cmp(&self.lower)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Runs the search from `root` and returns the best point found.
pub fn run_bnb<P: BranchProblem>(
    problem: &P,
    root: P::Branch,
    cfg: &BnBConfig,
) -> Result<BnBReport<P::Point>> {
    cfg.validate()?;
    let start = Instant::now();
    let mut trace = cfg.record_trace.then(Trace::default);

    let root_lower = problem.lower_bound(&root)?;
    let (mut best, mut best_point) = problem.upper_bound(&root)?;
    check_sandwich(root_lower, best, &root)?;
    if let Some(tr) = trace.as_mut() {
        tr.incumbents.push(best);
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut leaf_floor = f64::INFINITY;
    let (mut expanded, mut pruned, mut finalized) = (0usize, 0usize, 0usize);
    if problem.is_resolved(&root, cfg.min_resolution) {
        finalized += 1;
        leaf_floor = root_lower;
    } else {
        heap.push(Node {
            lower: root_lower,
            seq,
            branch: root,
        });
    }

    let mut termination = Termination::Exhausted;
    let mut open_floor = f64::INFINITY;
    while let Some(node) = heap.pop() {
        if best - node.lower < cfg.epsilon {
            termination = Termination::Converged;
            open_floor = node.lower;
            break;
        }
        if expanded >= cfg.max_nodes {
            termination = Termination::NodeLimit;
            open_floor = node.lower;
            break;
        }
        if cfg.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            termination = Termination::TimeLimit;
            open_floor = node.lower;
            break;
        }
        expanded += 1;
        if let Some(tr) = trace.as_mut() {
            tr.pops.push((node.lower, best));
        }

        let children = problem.subdivide(&node.branch);
        // Children bounded at or above the incumbent are pruned below, so
        // their bounds only need to be exact under it.
        let cutoff = best;
        let lowers: Vec<Result<f64>> = children
            .par_iter()
            .map(|c| problem.lower_bound_below(c, cutoff))
            .collect();
        let uppers: Vec<Option<Result<(f64, P::Point)>>> = children
            .par_iter()
            .zip(&lowers)
            .map(|(c, lb)| match lb {
                Ok(lb) if *lb < cutoff => Some(problem.upper_bound_below(c, cutoff)),
                _ => None,
            })
            .collect();

        // Sequential merge in child order keeps the run independent of how
        // the evaluations above were scheduled.
        for ((child, lower), upper) in children.into_iter().zip(lowers).zip(uppers) {
            let lower = lower?;
            if let Some(tr) = trace.as_mut() {
                tr.nesting.push((node.lower, lower));
            }
            if lower >= best {
                pruned += 1;
                continue;
            }
            let (upper, point) = upper.expect("upper bound evaluated below the cutoff")?;
            check_sandwich(lower, upper, &child)?;
            if upper < best {
                best = upper;
                best_point = point;
                if let Some(tr) = trace.as_mut() {
                    tr.incumbents.push(best);
                }
            }
            if problem.is_resolved(&child, cfg.min_resolution) {
                finalized += 1;
                leaf_floor = leaf_floor.min(lower);
            } else {
                seq += 1;
                heap.push(Node {
                    lower,
                    seq,
                    branch: child,
                });
            }
        }
    }

    let lower_bound = open_floor.min(leaf_floor).min(best);
    Ok(BnBReport {
        best_point,
        best_value: best,
        lower_bound,
        gap: (best - lower_bound).max(0.0),
        nodes_expanded: expanded,
        nodes_pruned: pruned,
        nodes_finalized: finalized,
        termination,
        wall_time: start.elapsed(),
        trace,
    })
}

fn check_sandwich<B: Debug>(lower: f64, upper: f64, branch: &B) -> Result<()> {
    if lower > upper + BOUND_SLACK || lower.is_nan() || upper.is_nan() {
        Err(Error::Inconsistent(format!(
            "lower bound {lower} exceeds upper bound {upper} on {branch:?}"
        )))
    } else {
        Ok(())
    }
}
