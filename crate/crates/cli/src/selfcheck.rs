//! Randomized equivalence checks of the scalar solvers against brute-force
//! oracles, and of the box bounds against sampled objectives.

use std::path::PathBuf;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tear_bench::trial_seed;
use tear_core::geometry::{angles_to_unit, AngleBox, PointPairSet, ScalarInterval};
use tear_core::scalar::{
    oracle_trunc_abs_interval, oracle_trunc_abs_point, oracle_trunc_sq_interval,
    oracle_trunc_sq_point, stab_region, trunc_abs_interval, trunc_abs_interval_objective,
    trunc_abs_objective, trunc_abs_point, trunc_sq_interval, trunc_sq_interval_objective,
    trunc_sq_objective, trunc_sq_point, TruncAbsIntervalInstance, TruncAbsPointInstance,
    DEFAULT_ORACLE_CAP,
};
use tear_core::{FirstStageLoss, Result, ScalarSolution, ScalarStage};

pub const TOLERANCE: f64 = 1e-9;
/// Samples per axis for the bound checks; the box center is added.
const GRID: usize = 8;

type PointSolver = fn(&[f64], &[f64]) -> Result<ScalarSolution>;
type IntervalSolver = fn(&[ScalarInterval], &[f64]) -> Result<ScalarSolution>;

/// The solvers under test. Tests swap in faulty ones.
#[derive(Clone, Copy)]
pub struct SolverSet {
    pub abs_point: PointSolver,
    pub abs_interval: IntervalSolver,
    pub sq_point: PointSolver,
    pub sq_interval: IntervalSolver,
    /// Maximum stab depth.
    pub stab: fn(&[ScalarInterval]) -> usize,
}

impl Default for SolverSet {
    fn default() -> Self {
        Self {
            abs_point: trunc_abs_point,
            abs_interval: trunc_abs_interval,
            sq_point: trunc_sq_point,
            sq_interval: trunc_sq_interval,
            stab: |ivs| stab_region(ivs).count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfcheckOptions {
    pub count: usize,
    pub max_n: usize,
    pub seed: u64,
    /// Where to write the first failing instance.
    pub dump: PathBuf,
}

/// First failing check with everything needed to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub check: &'static str,
    pub instance: usize,
    pub seed: u64,
    pub message: String,
    /// The failing input: anchors, intervals and thresholds for the scalar
    /// checks, pairs and box for the bound checks.
    pub data: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct SelfcheckReport {
    pub instances: usize,
    pub checks: usize,
    pub failure: Option<Failure>,
}

fn anchors(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Some anchors on a coarse lattice so that ties occur.
    (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                rng.random_range(-4i32..=4) as f64 * 0.5
            } else {
                rng.random_range(-5.0..5.0)
            }
        })
        .collect()
}

fn thresholds(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.0..3.0)
            }
        })
        .collect()
}

fn intervals(rng: &mut ChaCha8Rng, n: usize) -> Vec<ScalarInterval> {
    anchors(rng, n)
        .into_iter()
        .map(|lo| {
            let w = if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..2.0)
            };
            ScalarInterval { lo, hi: lo + w }
        })
        .collect()
}

/// Deepest stab by counting the intervals covering every endpoint.
pub fn brute_force_stab(ivs: &[ScalarInterval]) -> usize {
    ivs.iter()
        .flat_map(|iv| [iv.lo, iv.hi])
        .map(|t| ivs.iter().filter(|iv| iv.lo <= t && t <= iv.hi).count())
        .max()
        .unwrap_or(0)
}

struct Case<'a> {
    index: usize,
    seed: u64,
    a: &'a [f64],
    b: &'a [ScalarInterval],
    xi: &'a [f64],
}

impl Case<'_> {
    fn fail(&self, check: &'static str, message: String) -> Failure {
        Failure {
            check,
            instance: self.index,
            seed: self.seed,
            message,
            data: serde_json::json!({
                "a": self.a,
                "b": self.b.iter().map(|iv| [iv.lo, iv.hi]).collect::<Vec<_>>(),
                "xi": self.xi,
            }),
        }
    }
}

/// Compares a solver result with its oracle: values within tolerance, the
/// reported value attained at the reported minimizer, and the minimizer in
/// the candidate set when one is given.
fn compare(
    case: &Case,
    check: &'static str,
    got: Result<ScalarSolution>,
    oracle: Result<ScalarSolution>,
    objective: impl Fn(f64) -> f64,
    candidates: Option<&[f64]>,
) -> std::result::Result<(), Failure> {
    let (got, want) = match (got, oracle) {
        (Ok(g), Ok(w)) => (g, w),
        (g, w) => return Err(case.fail(check, format!("solver {g:?}, oracle {w:?}"))),
    };
    if (got.value - want.value).abs() > TOLERANCE {
        return Err(case.fail(
            check,
            format!("value {} but oracle {}", got.value, want.value),
        ));
    }
    let at = objective(got.minimizer);
    if (at - got.value).abs() > TOLERANCE {
        return Err(case.fail(
            check,
            format!(
                "value {} but {} at the minimizer {}",
                got.value, at, got.minimizer
            ),
        ));
    }
    if let Some(c) = candidates {
        if !c.contains(&got.minimizer) {
            return Err(case.fail(
                check,
                format!("minimizer {} is not a breakpoint", got.minimizer),
            ));
        }
    }
    Ok(())
}

fn scalar_checks(solvers: &SolverSet, case: &Case) -> std::result::Result<usize, Failure> {
    let (a, b, xi) = (case.a, case.b, case.xi);
    let pi = TruncAbsPointInstance {
        a: a.to_vec(),
        xi: xi.to_vec(),
    };
    let ii = TruncAbsIntervalInstance {
        b: b.to_vec(),
        xi: xi.to_vec(),
    };
    let ends: Vec<f64> = b.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
    compare(
        case,
        "trunc_abs_point",
        (solvers.abs_point)(a, xi),
        oracle_trunc_abs_point(&pi, DEFAULT_ORACLE_CAP),
        |t| trunc_abs_objective(a, xi, t),
        Some(a),
    )?;
    compare(
        case,
        "trunc_abs_interval",
        (solvers.abs_interval)(b, xi),
        oracle_trunc_abs_interval(&ii, DEFAULT_ORACLE_CAP),
        |t| trunc_abs_interval_objective(b, xi, t),
        Some(&ends),
    )?;
    compare(
        case,
        "trunc_sq_point",
        (solvers.sq_point)(a, xi),
        oracle_trunc_sq_point(&pi, DEFAULT_ORACLE_CAP),
        |t| trunc_sq_objective(a, xi, t),
        None,
    )?;
    compare(
        case,
        "trunc_sq_interval",
        (solvers.sq_interval)(b, xi),
        oracle_trunc_sq_interval(&ii, DEFAULT_ORACLE_CAP),
        |t| trunc_sq_interval_objective(b, xi, t),
        None,
    )?;
    let (got, want) = ((solvers.stab)(b), brute_force_stab(b));
    if got != want {
        return Err(case.fail(
            "interval_stab",
            format!("depth {got} but brute force {want}"),
        ));
    }
    Ok(5)
}

/// A random sub-box of the angle domain.
pub fn random_box(rng: &mut ChaCha8Rng) -> AngleBox {
    use std::f64::consts::{PI, TAU};
    let side = |rng: &mut ChaCha8Rng, max: f64| {
        let lo = rng.random_range(0.0..max);
        let w = rng.random_range(0.0..(max - lo).min(max / 4.0));
        ScalarInterval { lo, hi: lo + w }
    };
    let alpha = side(rng, TAU);
    let beta = side(rng, PI);
    AngleBox::new(alpha, beta).expect("box inside the domain")
}

/// Smallest objective over an evenly spaced grid of the box plus its center.
pub fn grid_minimum(stage: &ScalarStage, bx: &AngleBox, per_axis: usize) -> Result<f64> {
    let (ca, cb) = bx.center();
    let mut best = stage.evaluate(angles_to_unit(ca, cb)?.vector())?.value;
    for i in 0..per_axis {
        for j in 0..per_axis {
            let fa = i as f64 / (per_axis - 1).max(1) as f64;
            let fb = j as f64 / (per_axis - 1).max(1) as f64;
            let alpha = bx.alpha.lo + fa * bx.alpha.width();
            let beta = bx.beta.lo + fb * bx.beta.width();
            best = best.min(stage.evaluate(angles_to_unit(alpha, beta)?.vector())?.value);
        }
    }
    Ok(best)
}

fn bound_checks(
    rng: &mut ChaCha8Rng,
    case: &Case,
    n: usize,
) -> std::result::Result<usize, Failure> {
    let draw = |rng: &mut ChaCha8Rng| {
        Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    };
    let x: Vec<_> = (0..n).map(|_| draw(rng)).collect();
    let y: Vec<_> = (0..n).map(|_| draw(rng)).collect();
    let xi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
    let pairs = PointPairSet::new(x, y, xi).expect("valid pairs");
    let bx = random_box(rng);
    for (check, loss) in [
        ("tear_bounds", FirstStageLoss::Tear),
        ("cm_bounds", FirstStageLoss::Consensus),
        ("tls_bounds", FirstStageLoss::TruncatedSquares),
    ] {
        let result = (|| -> Result<(f64, f64, f64)> {
            let stage = ScalarStage::new(&pairs, loss)?;
            Ok((
                stage.lower(&bx)?.value,
                grid_minimum(&stage, &bx, GRID)?,
                stage.upper(&bx)?.value,
            ))
        })();
        match result {
            Ok((lo, mid, hi)) if lo <= mid + TOLERANCE && mid <= hi + TOLERANCE => {}
            other => {
                let rows: Vec<[f64; 7]> = (0..n)
                    .map(|i| {
                        let (x, y) = (pairs.x()[i], pairs.y()[i]);
                        [x.x, x.y, x.z, y.x, y.y, y.z, pairs.xi()[i]]
                    })
                    .collect();
                return Err(Failure {
                    check,
                    instance: case.index,
                    seed: case.seed,
                    message: format!("lower ≤ sampled ≤ upper violated: {other:?}"),
                    data: serde_json::json!({
                        "pairs": rows,
                        "alpha": [bx.alpha.lo, bx.alpha.hi],
                        "beta": [bx.beta.lo, bx.beta.hi],
                    }),
                });
            }
        }
    }
    Ok(3)
}

/// Runs `opts.count` random instances with sizes up to `opts.max_n`.
pub fn run_selfcheck(opts: &SelfcheckOptions, solvers: &SolverSet) -> SelfcheckReport {
    let mut checks = 0;
    for index in 0..opts.count {
        let seed = trial_seed(opts.seed, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=opts.max_n.max(1));
        let a = anchors(&mut rng, n);
        let b = intervals(&mut rng, n);
        let xi = thresholds(&mut rng, n);
        let case = Case {
            index,
            seed,
            a: &a,
            b: &b,
            xi: &xi,
        };
        let outcome =
            scalar_checks(solvers, &case).and_then(|k| Ok(k + bound_checks(&mut rng, &case, n)?));
        match outcome {
            Ok(k) => checks += k,
            Err(failure) => {
                return SelfcheckReport {
                    instances: index + 1,
                    checks,
                    failure: Some(failure),
                }
            }
        }
    }
    SelfcheckReport {
        instances: opts.count,
        checks,
        failure: None,
    }
}
