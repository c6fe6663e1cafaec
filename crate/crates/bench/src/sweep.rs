//! Repeated synthetic trials over a grid of configurations.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tear_core::{register, solve_cm1, solve_tls1, SolverConfig};

use crate::alloc;
use crate::metrics::{evaluate, f1_score, RecallThresholds};
use crate::synth::{generate_synthetic, SyntheticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Full two-stage registration.
    Tear,
    /// First stage only, consensus maximization.
    Cm,
    /// First stage only, truncated squares.
    Tls,
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tear" => Ok(Self::Tear),
            "cm" => Ok(Self::Cm),
            "tls" => Ok(Self::Tls),
            other => Err(format!(
                "unknown solver `{other}` (expected tear, cm or tls)"
            )),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Tear => "tear",
            Self::Cm => "cm",
            Self::Tls => "tls",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub grid: Vec<SyntheticConfig>,
    pub solver: Solver,
    pub trials: usize,
    pub solver_config: SolverConfig,
    pub thresholds: RecallThresholds,
    /// Run trials concurrently. Timings then overlap and peak memory covers
    /// every trial in flight.
    pub parallel: bool,
}

/// One trial. Pose metrics are empty for first-stage-only solvers, where
/// `f1` scores the first-stage inlier set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub ratio: f64,
    pub trial: usize,
    pub re_deg: Option<f64>,
    pub te: Option<f64>,
    pub f1: Option<f64>,
    pub rr_flag: Option<bool>,
    pub time_s: f64,
    pub peak_mem_bytes: usize,
    pub solver: Solver,
    pub stage1_f1: Option<f64>,
    pub inliers: Option<usize>,
    pub error: Option<String>,
}

/// Generates and solves trial `trial` of `cfg`.
pub fn run_trial(
    cfg: &SyntheticConfig,
    trial: usize,
    solver: Solver,
    solver_config: &SolverConfig,
    thresholds: &RecallThresholds,
) -> SweepRow {
    let mut row = SweepRow {
        n: cfg.n,
        ratio: cfg.outlier_ratio,
        trial,
        re_deg: None,
        te: None,
        f1: None,
        rr_flag: None,
        time_s: 0.0,
        peak_mem_bytes: 0,
        solver,
        stage1_f1: None,
        inliers: None,
        error: None,
    };
    let (pairs, gt) = match generate_synthetic(&cfg.for_trial(trial as u64)) {
        Ok(v) => v,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };

    alloc::reset_peak();
    let start = Instant::now();
    let outcome = match solver {
        Solver::Tear => register(&pairs, solver_config).and_then(|r| {
            let m = evaluate(&r, &gt, thresholds)?;
            Ok((r.stage1.inliers.clone(), Some((m, r.final_inliers.len()))))
        }),
        Solver::Cm => solve_cm1(&pairs, solver_config).map(|s| (s.inliers, None)),
        Solver::Tls => solve_tls1(&pairs, solver_config).map(|s| (s.inliers, None)),
    };
    row.time_s = start.elapsed().as_secs_f64();
    row.peak_mem_bytes = alloc::peak_bytes();

    match outcome {
        Ok((stage1, full)) => {
            let f1_stage1 = f1_score(&stage1, &gt.inlier_mask);
            row.stage1_f1 = Some(f1_stage1);
            match full {
                Some((m, count)) => {
                    row.re_deg = Some(m.re_deg);
                    row.te = Some(m.te);
                    row.f1 = Some(m.f1);
                    row.rr_flag = Some(m.recall_flag);
                    row.inliers = Some(count);
                }
                None => {
                    row.f1 = Some(f1_stage1);
                    row.inliers = Some(stage1.len());
                }
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every configuration of the grid `trials` times. Failed trials are
/// kept as rows with `error` set.
pub fn sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let jobs: Vec<(SyntheticConfig, usize)> = spec
        .grid
        .iter()
        .flat_map(|cfg| (0..spec.trials).map(move |t| (*cfg, t)))
        .collect();
    let run = |(cfg, t): &(SyntheticConfig, usize)| {
        run_trial(cfg, *t, spec.solver, &spec.solver_config, &spec.thresholds)
    };
    if spec.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    }
}

/// Aggregate of the successful trials of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub ratio: f64,
    pub trials: usize,
    pub failures: usize,
    pub median_re_deg: Option<f64>,
    pub median_te: Option<f64>,
    pub median_f1: Option<f64>,
    pub mean_f1: Option<f64>,
    pub recall_rate: Option<f64>,
    pub median_time_s: Option<f64>,
    pub max_peak_mem_bytes: usize,
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Groups rows by `(n, ratio)` in order of first appearance.
pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(n, q)| n == r.n && q == r.ratio) {
            keys.push((r.n, r.ratio));
        }
    }
    keys.into_iter()
        .map(|(n, ratio)| {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.n == n && r.ratio == ratio)
                .collect();
            let ok: Vec<&&SweepRow> = cell.iter().filter(|r| r.error.is_none()).collect();
            let pick = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|r| f(r)).collect()
            };
            let f1 = pick(|r| r.f1);
            let flags: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.rr_flag)
                .map(|b| b as u8 as f64)
                .collect();
            CellSummary {
                n,
                ratio,
                trials: cell.len(),
                failures: cell.len() - ok.len(),
                median_re_deg: median(&pick(|r| r.re_deg)),
                median_te: median(&pick(|r| r.te)),
                median_f1: median(&f1),
                mean_f1: mean(&f1),
                recall_rate: mean(&flags),
                median_time_s: median(&pick(|r| Some(r.time_s))),
                max_peak_mem_bytes: cell.iter().map(|r| r.peak_mem_bytes).max().unwrap_or(0),
            }
        })
        .collect()
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
