//! Registration error metrics.

use std::str::FromStr;

use nalgebra::Matrix3;
use serde::Serialize;
use tear_core::{check_rotation, Error, RegistrationResult, Result};

use crate::synth::GroundTruth;

/// Tolerance for accepting a matrix as a rotation.
const ROTATION_TOL: f64 = 1e-6;

/// Success thresholds for registration recall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecallThresholds {
    pub max_rotation_deg: f64,
    pub max_translation: f64,
}

impl RecallThresholds {
    pub const THREEDMATCH: Self = Self {
        max_rotation_deg: 15.0,
        max_translation: 0.30,
    };
    pub const KITTI: Self = Self {
        max_rotation_deg: 5.0,
        max_translation: 0.60,
    };
    pub const ETH: Self = Self {
        max_rotation_deg: 3.0,
        max_translation: 0.50,
    };
}

impl FromStr for RecallThresholds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "3dmatch" => Ok(Self::THREEDMATCH),
            "kitti" => Ok(Self::KITTI),
            "eth" => Ok(Self::ETH),
            other => Err(format!(
                "unknown preset `{other}` (expected 3dmatch, kitti or eth)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub re_deg: f64,
    pub te: f64,
    /// F1 of the final-residual inliers against the ground-truth mask.
    pub f1: f64,
    /// F1 of the second-stage inliers the pose was fitted on.
    pub f1_fit_set: f64,
    pub recall_flag: bool,
    pub wall_time: f64,
    pub peak_memory: usize,
}

/// Geodesic angle between two rotations, in degrees.
pub fn rotation_error(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> Result<f64> {
    check_rotation(r_est, ROTATION_TOL)?;
    check_rotation(r_gt, ROTATION_TOL)?;
    let c = (((r_gt.transpose() * r_est).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    Ok(c.acos().to_degrees().clamp(0.0, 180.0))
}

/// F1 of a predicted index set against a boolean ground-truth mask; 0 when
/// nothing is predicted or nothing matches.
pub fn f1_score(predicted: &[usize], mask: &[bool]) -> f64 {
    let truth = mask.iter().filter(|&&m| m).count();
    let hits = predicted
        .iter()
        .filter(|&&i| mask.get(i).copied().unwrap_or(false))
        .count();
    if predicted.is_empty() || hits == 0 {
        return 0.0;
    }
    let precision = hits as f64 / predicted.len() as f64;
    let recall = hits as f64 / truth as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Scores a registration against the ground truth. `wall_time` is the sum of
/// the stage search times and `peak_memory` is left at zero for the caller
/// to fill in.
pub fn evaluate(
    result: &RegistrationResult,
    gt: &GroundTruth,
    thresholds: &RecallThresholds,
) -> Result<Metrics> {
    if result
        .final_inliers
        .iter()
        .chain(&result.inliers)
        .any(|&i| i >= gt.inlier_mask.len())
    {
        return Err(Error::InvalidInput(
            "inlier index beyond the ground-truth mask".into(),
        ));
    }
    let re_deg = rotation_error(&result.pose.rotation, &gt.pose.rotation)?;
    let te = (result.pose.translation - gt.pose.translation).norm();
    Ok(Metrics {
        re_deg,
        te,
        f1: f1_score(&result.final_inliers, &gt.inlier_mask),
        f1_fit_set: f1_score(&result.inliers, &gt.inlier_mask),
        recall_flag: re_deg <= thresholds.max_rotation_deg && te <= thresholds.max_translation,
        wall_time: (result.stage1.stats.wall_time + result.stage2.stats.wall_time).as_secs_f64(),
        peak_memory: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    #[test]
    fn identical_rotations() {
        let i = Matrix3::identity();
        assert_eq!(rotation_error(&i, &i).unwrap(), 0.0);
    }

    #[test]
    fn quarter_turn() {
        let rz = *Rotation3::from_axis_angle(&Vector3::z_axis(), 90f64.to_radians()).matrix();
        assert!((rotation_error(&rz, &Matrix3::identity()).unwrap() - 90.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_rotation() {
        let m = Matrix3::identity() * 2.0;
        assert!(rotation_error(&m, &Matrix3::identity()).is_err());
    }

    #[test]
    fn f1_cases() {
        let mask = [true, true, false, false];
        assert_eq!(f1_score(&[0, 1], &mask), 1.0);
        assert_eq!(f1_score(&[], &mask), 0.0);
        // precision 1/2, recall 1/2
        assert!((f1_score(&[0, 2], &mask) - 0.5).abs() < 1e-15);
        // precision 1/3, recall 1/2 → 0.4
        assert!((f1_score(&[0, 2, 3], &mask) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn presets_parse() {
        assert_eq!(
            "KITTI".parse::<RecallThresholds>().unwrap(),
            RecallThresholds::KITTI
        );
        assert!("lidar".parse::<RecallThresholds>().is_err());
    }
}
