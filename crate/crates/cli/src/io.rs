//! Correspondence and ground-truth files.
//!
//! Correspondences are comma-separated text, one pair per line:
//! `x1,x2,x3,y1,y2,y3[,xi]`. Blank lines and lines starting with `#` are
//! skipped. Floats are written in their shortest round-trip form.
//!
//! Ground truth is JSON:
//! `{"rotation": [9 numbers, row-major], "translation": [3], "inlier_mask": [bool]}`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use tear_bench::GroundTruth;
use tear_core::{PointPairSet, PoseEstimate};

use crate::CliError;

/// Tolerance for accepting a stored rotation.
const ROTATION_TOL: f64 = 1e-6;

/// Parses correspondence text. `xi` overrides every per-row threshold and is
/// required when rows carry none.
pub fn parse_pairs(text: &str, xi: Option<f64>) -> Result<PointPairSet, CliError> {
    let (mut x, mut y, mut thresholds) = (Vec::new(), Vec::new(), Vec::new());
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = k + 1;
        let fields = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Parse(format!(
                            "line {lineno}: `{}` is not a finite number",
                            f.trim()
                        ))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let own_xi = match fields.len() {
            6 => None,
            7 => Some(fields[6]),
            m => {
                return Err(CliError::Parse(format!(
                    "line {lineno}: expected 6 or 7 fields, found {m}"
                )))
            }
        };
        let threshold = xi.or(own_xi).ok_or_else(|| {
            CliError::Parse(format!(
                "line {lineno}: no threshold column and no --xi given"
            ))
        })?;
        if threshold < 0.0 {
            return Err(CliError::Parse(format!(
                "line {lineno}: negative threshold {threshold}"
            )));
        }
        x.push(Vector3::new(fields[0], fields[1], fields[2]));
        y.push(Vector3::new(fields[3], fields[4], fields[5]));
        thresholds.push(threshold);
    }
    if x.is_empty() {
        return Err(CliError::Parse("no correspondences found".into()));
    }
    PointPairSet::new(x, y, thresholds).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn read_pairs(path: &Path, xi: Option<f64>) -> Result<PointPairSet, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_pairs(&text, xi)
}

/// Formats pairs with a header comment and a threshold column.
pub fn format_pairs(pairs: &PointPairSet) -> String {
    let mut out = String::from("# x1,x2,x3,y1,y2,y3,xi\n");
    for ((x, y), xi) in pairs.x().iter().zip(pairs.y()).zip(pairs.xi()) {
        // `{:?}` prints the shortest representation that parses back exactly.
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            x.x, x.y, x.z, y.x, y.y, y.z, xi
        );
    }
    out
}

pub fn write_pairs(path: &Path, pairs: &PointPairSet) -> Result<(), CliError> {
    fs::write(path, format_pairs(pairs)).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub inlier_mask: Vec<bool>,
}

/// Row-major entries of a 3×3 matrix.
pub fn row_major(m: &Matrix3<f64>) -> [f64; 9] {
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

impl From<&GroundTruth> for GroundTruthFile {
    fn from(gt: &GroundTruth) -> Self {
        let t = gt.pose.translation;
        Self {
            rotation: row_major(&gt.pose.rotation),
            translation: [t.x, t.y, t.z],
            inlier_mask: gt.inlier_mask.clone(),
        }
    }
}

impl GroundTruthFile {
    pub fn to_ground_truth(&self) -> Result<GroundTruth, CliError> {
        let r = Matrix3::from_row_slice(&self.rotation);
        let t = Vector3::from(self.translation);
        let pose =
            PoseEstimate::new(r, t, ROTATION_TOL).map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(GroundTruth {
            pose,
            inlier_mask: self.inlier_mask.clone(),
        })
    }
}

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> Result<(), CliError> {
    let json =
        serde_json::to_string_pretty(&GroundTruthFile::from(gt)).expect("ground truth serializes");
    fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: GroundTruthFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    file.to_ground_truth()
}
