//! The JSON record written by `tear register`.
//!
//! ```text
//! {
//!   "pose": { "rotation": [9 numbers, row-major], "translation": [3] },
//!   "loss": "tear" | "cm" | "tls",
//!   "pairs": N,
//!   "inliers": |second-stage inliers|,
//!   "final_inliers": |pairs within threshold under the pose|,
//!   "stage1": StageRecord, "stage2": StageRecord,
//!   "config": { "xi", "epsilon", "resolution", "max_nodes", "threads" },
//!   "metrics": { "re_deg", "te", "f1", "f1_fit_set", "recall" }  (with --gt),
//!   "timing": { "stage1_s", "stage2_s", "total_s" }                (with --timing)
//! }
//! ```
//!
//! A StageRecord holds `r` (3 numbers), `t`, `value`, `inliers` (count),
//! `lower_bound`, `gap`, `nodes_expanded`, `nodes_pruned`,
//! `nodes_finalized` and `termination`. Without `--timing` the record only
//! depends on the input and the flags.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use tear_bench::Metrics;
use tear_core::{PoseEstimate, RegistrationResult, StageSolution, Termination};

use crate::io::row_major;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&PoseEstimate> for PoseRecord {
    fn from(p: &PoseEstimate) -> Self {
        let t = p.translation;
        Self {
            rotation: row_major(&p.rotation),
            translation: [t.x, t.y, t.z],
        }
    }
}

impl PoseRecord {
    pub fn to_pose(&self, tol: f64) -> tear_core::Result<PoseEstimate> {
        PoseEstimate::new(
            Matrix3::from_row_slice(&self.rotation),
            Vector3::from(self.translation),
            tol,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub r: [f64; 3],
    pub t: f64,
    pub value: f64,
    pub inliers: usize,
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes_expanded: usize,
    pub nodes_pruned: usize,
    pub nodes_finalized: usize,
    pub termination: String,
}

impl From<&StageSolution> for StageRecord {
    fn from(s: &StageSolution) -> Self {
        let r = s.r.vector();
        Self {
            r: [r.x, r.y, r.z],
            t: s.t,
            value: s.value,
            inliers: s.inliers.len(),
            lower_bound: s.stats.lower_bound,
            gap: s.stats.gap,
            nodes_expanded: s.stats.nodes_expanded,
            nodes_pruned: s.stats.nodes_pruned,
            nodes_finalized: s.stats.nodes_finalized,
            termination: match s.stats.termination {
                Termination::Converged => "converged",
                Termination::Exhausted => "exhausted",
                Termination::NodeLimit => "node_limit",
                Termination::TimeLimit => "time_limit",
            }
            .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    /// Threshold override, if one was given.
    pub xi: Option<f64>,
    pub epsilon: Option<f64>,
    pub resolution: f64,
    pub max_nodes: usize,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub re_deg: f64,
    pub te: f64,
    pub f1: f64,
    pub f1_fit_set: f64,
    pub recall: bool,
}

impl From<&Metrics> for MetricsRecord {
    fn from(m: &Metrics) -> Self {
        Self {
            re_deg: m.re_deg,
            te: m.te,
            f1: m.f1,
            f1_fit_set: m.f1_fit_set,
            recall: m.recall_flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub stage1_s: f64,
    pub stage2_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub pose: PoseRecord,
    pub loss: String,
    pub pairs: usize,
    pub inliers: usize,
    pub final_inliers: usize,
    pub stage1: StageRecord,
    pub stage2: StageRecord,
    pub config: ConfigRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingRecord>,
}

impl ResultRecord {
    pub fn new(
        loss: &str,
        pairs: usize,
        result: &RegistrationResult,
        config: ConfigRecord,
    ) -> Self {
        Self {
            pose: PoseRecord::from(&result.pose),
            loss: loss.into(),
            pairs,
            inliers: result.inliers.len(),
            final_inliers: result.final_inliers.len(),
            stage1: StageRecord::from(&result.stage1),
            stage2: StageRecord::from(&result.stage2),
            config,
            metrics: None,
            timing: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes") + "\n"
    }
}
