//! The two-stage registration pipeline.
//!
//! The first stage finds the first rotation row and translation entry that
//! best explain the first coordinate of every target point. Pairs that fit
//! within their threshold move on to the second stage, which finds the
//! second rotation row (orthogonal to the first) from the second
//! coordinate. The pose is then fitted in closed form on what survives.

mod first;
mod second;

use std::time::Duration;

pub use first::{
    solve_cm1, solve_first_stage, solve_tear1, solve_tls1, tear1_lower, tear1_upper,
    FirstStageLoss, ScalarStage, SpherePoint,
};
pub use second::{beta_of_alpha_range, second_row_at, solve_tear2};

use crate::bnb::{BnBConfig, BnBReport, Termination, Trace};
use crate::error::{Error, Result};
use crate::geometry::{procrustes, PointPairSet, PoseEstimate, UnitVector3};

/// Search settings shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Absolute optimality gap. `None` picks `1e-6` times the stage's
    /// objective scale (`Σξ` or `Σξ²`) and `0.5` for consensus counts.
    pub epsilon: Option<f64>,
    pub min_resolution: f64,
    pub max_nodes: usize,
    /// Per-stage wall-clock budget.
    pub time_limit: Option<Duration>,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            min_resolution: BnBConfig::DEFAULT_RESOLUTION,
            max_nodes: BnBConfig::DEFAULT_MAX_NODES,
            time_limit: None,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub(crate) fn bnb(&self, loss: FirstStageLoss, scale: f64) -> BnBConfig {
        let epsilon = self.epsilon.unwrap_or(match loss {
            // Counts are integral, so any gap below one certifies optimality.
            FirstStageLoss::Consensus => 0.5,
            _ => (1e-6 * scale).max(1e-12),
        });
        BnBConfig {
            epsilon,
            min_resolution: self.min_resolution,
            max_nodes: self.max_nodes,
            time_limit: self.time_limit,
            record_trace: self.record_trace,
        }
    }
}

/// Search statistics of one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchStats {
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes_expanded: usize,
    pub nodes_pruned: usize,
    pub nodes_finalized: usize,
    pub termination: Termination,
    pub wall_time: Duration,
}

impl SearchStats {
    pub fn from_report<P>(r: &BnBReport<P>) -> Self {
        Self {
            lower_bound: r.lower_bound,
            gap: r.gap,
            nodes_expanded: r.nodes_expanded,
            nodes_pruned: r.nodes_pruned,
            nodes_finalized: r.nodes_finalized,
            termination: r.termination,
            wall_time: r.wall_time,
        }
    }
}

/// Result of one stage: a rotation row, a translation entry, the objective
/// value and the pairs passing the stage's residual test.
#[derive(Debug, Clone)]
pub struct StageSolution {
    pub r: UnitVector3,
    pub t: f64,
    pub value: f64,
    /// Ascending indices into the input pairs.
    pub inliers: Vec<usize>,
    pub stats: SearchStats,
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub pose: PoseEstimate,
    /// Second-stage inliers the pose was fitted on.
    pub inliers: Vec<usize>,
    /// Pairs with `‖y_i − R x_i − t‖ ≤ ξ_i` under the final pose.
    pub final_inliers: Vec<usize>,
    pub stage1: StageSolution,
    pub stage2: StageSolution,
}

/// Second-stage thresholds `max(0, ξ_i − |y_i1 − r̂1ᵀx_i − t̂1|)`, one per
/// first-stage inlier in the order of `stage1.inliers`.
pub fn derive_stage2_thresholds(pairs: &PointPairSet, stage1: &StageSolution) -> Vec<f64> {
    let r = stage1.r.vector();
    stage1
        .inliers
        .iter()
        .map(|&i| {
            let residual = pairs.y()[i].x - r.dot(&pairs.x()[i]) - stage1.t;
            (pairs.xi()[i] - residual.abs()).max(0.0)
        })
        .collect()
}

/// Pairs with `‖y_i − R x_i − t‖ ≤ ξ_i`.
pub fn pose_inliers(pairs: &PointPairSet, pose: &PoseEstimate) -> Vec<usize> {
    (0..pairs.len())
        .filter(|&i| (pairs.y()[i] - pose.apply(&pairs.x()[i])).norm() <= pairs.xi()[i])
        .collect()
}

/// Full registration: first stage, second stage, then a rigid fit on the
/// second-stage inliers.
pub fn register(pairs: &PointPairSet, cfg: &SolverConfig) -> Result<RegistrationResult> {
    register_with(pairs, FirstStageLoss::Tear, cfg)
}

/// [`register`] with a chosen first-stage loss. The second stage always
/// minimizes truncated absolute residuals.
pub fn register_with(
    pairs: &PointPairSet,
    loss: FirstStageLoss,
    cfg: &SolverConfig,
) -> Result<RegistrationResult> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientInliers {
            found: pairs.len(),
            needed: 3,
        });
    }
    let stage1 = solve_first_stage(pairs, loss, cfg)?;
    if stage1.inliers.len() < 3 {
        return Err(Error::InsufficientInliers {
            found: stage1.inliers.len(),
            needed: 3,
        });
    }
    let xi2 = derive_stage2_thresholds(pairs, &stage1);
    let stage2 = solve_tear2(pairs, &stage1.inliers, &stage1.r, &xi2, cfg)?;
    if stage2.inliers.len() < 3 {
        return Err(Error::InsufficientInliers {
            found: stage2.inliers.len(),
            needed: 3,
        });
    }
    let pose = procrustes(pairs, &stage2.inliers)?;
    let final_inliers = pose_inliers(pairs, &pose);
    Ok(RegistrationResult {
        pose,
        inliers: stage2.inliers.clone(),
        final_inliers,
        stage1,
        stage2,
    })
}
