//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! With no arguments the quick criteria run (1–4, 10). Name criteria to
//! pick them, or pass `all`:
//!
//! ```text
//! cargo test --release -p tear-cli --test acceptance -- 5 6 7
//! cargo test --release -p tear-cli --test acceptance -- all
//! ```

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tear_bench::alloc::{peak_bytes, reset_peak, PeakAlloc};
use tear_bench::{
    evaluate, f1_score, generate_synthetic, median, RecallThresholds, SyntheticConfig,
};
use tear_cli::selfcheck::{
    brute_force_stab, grid_minimum, random_box, run_selfcheck, SelfcheckOptions, SolverSet,
};
use tear_core::geometry::{angles_to_unit, ScalarInterval};
use tear_core::scalar::{stab_region, trunc_sq_point};
use tear_core::{
    register, solve_cm1, solve_tear1, solve_tls1, FirstStageLoss, PointPairSet, ScalarStage,
    SolverConfig, StageSolution,
};

#[global_allocator]
static ALLOC: PeakAlloc = PeakAlloc;

const QUICK: [u32; 5] = [1, 2, 3, 4, 10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let chosen: Vec<u32> = if args.iter().any(|a| a == "all") {
        (1..=10).collect()
    } else {
        let picked: Vec<u32> = args
            .iter()
            .filter_map(|a| a.parse().ok())
            .filter(|c| (1..=10).contains(c))
            .collect();
        if picked.is_empty() {
            QUICK.to_vec()
        } else {
            picked
        }
    };

    let mut failed = 0;
    for c in 1..=10u32 {
        if !chosen.contains(&c) {
            println!("criterion {c:>2}: SKIP (not selected)");
            continue;
        }
        let start = Instant::now();
        let o = match c {
            1 => scalar_exactness(),
            2 => stabbing(),
            3 => bound_validity(),
            4 => grid_optimality(),
            5 => synthetic(0.95),
            6 => synthetic(0.99),
            7 => scalability(),
            8 => loss_comparison(),
            9 => tls_comparison(),
            _ => determinism(),
        };
        let secs = start.elapsed().as_secs_f64();
        failed += usize::from(!o.pass);
        println!(
            "criterion {c:>2}: {} ({secs:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Solver values and minimizers against the quadratic oracles.
fn scalar_exactness() -> Outcome {
    let start = Instant::now();
    let dump = std::env::temp_dir().join("tear-acceptance-selfcheck.json");
    let opts = SelfcheckOptions {
        count: 2000,
        max_n: 50,
        seed: 1,
        dump,
    };
    let r = run_selfcheck(&opts, &SolverSet::default());
    let secs = start.elapsed().as_secs_f64();
    match r.failure {
        None => outcome(
            secs < 30.0,
            format!(
                "{} instances, {} checks, {secs:.1} s of 30",
                r.instances, r.checks
            ),
        ),
        Some(f) => outcome(
            false,
            format!("{} on instance {}: {}", f.check, f.instance, f.message),
        ),
    }
}

fn stabbing() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..1000 {
        let p = rng.random_range(1..=200);
        let ivs: Vec<ScalarInterval> = (0..p)
            .map(|_| {
                // Coarse lattice endpoints so that shared endpoints are common.
                let lo = rng.random_range(-20i32..20) as f64 * 0.25;
                ScalarInterval {
                    lo,
                    hi: lo + rng.random_range(0i32..12) as f64 * 0.25,
                }
            })
            .collect();
        let (got, want) = (stab_region(&ivs).count, brute_force_stab(&ivs));
        if got != want {
            return outcome(
                false,
                format!("set {k}: depth {got} but brute force {want}"),
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(secs < 10.0, format!("1000 sets, {secs:.1} s of 10"))
}

fn random_pairs(rng: &mut ChaCha8Rng, n: usize) -> PointPairSet {
    let cfg = SyntheticConfig {
        n,
        outlier_ratio: rng.random_range(0.0..0.9),
        sigma: 0.01,
        seed: rng.random(),
        ..Default::default()
    };
    generate_synthetic(&cfg).expect("valid synthetic config").0
}

/// Lower bound ≤ sampled box minimum ≤ upper bound for all three losses.
fn bound_validity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..500 {
        let n = rng.random_range(1..=60);
        let pairs = random_pairs(&mut rng, n);
        let bx = random_box(&mut rng);
        for loss in [
            FirstStageLoss::Tear,
            FirstStageLoss::Consensus,
            FirstStageLoss::TruncatedSquares,
        ] {
            let stage = ScalarStage::new(&pairs, loss).unwrap();
            let lo = stage.lower(&bx).unwrap().value;
            let mid = grid_minimum(&stage, &bx, 12).unwrap();
            let hi = stage.upper(&bx).unwrap().value;
            if !(lo <= mid + 1e-9 && mid <= hi + 1e-9) {
                return outcome(
                    false,
                    format!("case {k} {loss:?}: {lo} ≤ {mid} ≤ {hi} violated"),
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        secs < 120.0,
        format!("500 boxes × 3 losses, {secs:.1} s of 120"),
    )
}

/// Minimum objective of each loss over a `(k + 1)²` angle grid. The consensus
/// grid also runs with every window widened by `|x_i|·d`, where `d` bounds the
/// distance from any unit vector to its nearest grid point.
struct GridMinima {
    tear: f64,
    tls: f64,
    cm: f64,
    cm_widened: f64,
}

fn grid_minima(pairs: &PointPairSet, k: usize, d: f64) -> GridMinima {
    let n = pairs.len();
    let x = pairs.x();
    let y: Vec<f64> = pairs.y().iter().map(|p| p.x).collect();
    let xi = pairs.xi();
    let widened: Vec<f64> = x.iter().zip(xi).map(|(x, xi)| xi + x.norm() * d).collect();
    let mut m = GridMinima {
        tear: f64::INFINITY,
        tls: f64::INFINITY,
        cm: f64::INFINITY,
        cm_widened: f64::INFINITY,
    };
    let mut a = vec![0.0; n];
    // Direct quadratic solves: the absolute loss is minimized at an anchor,
    // and some deepest point of a set of windows is a left window end.
    let tear = |a: &[f64]| {
        a.iter()
            .map(|&t| {
                a.iter()
                    .zip(xi)
                    .map(|(&ai, &x)| (ai - t).abs().min(x))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let outliers = |a: &[f64], w: &[f64]| {
        let depth = |t: f64| {
            a.iter()
                .zip(w)
                .filter(|&(&ai, &wi)| (ai - t).abs() <= wi)
                .count()
        };
        (n - a
            .iter()
            .zip(w)
            .map(|(&ai, &wi)| depth(ai - wi))
            .max()
            .unwrap_or(0)) as f64
    };
    for i in 0..=k {
        let alpha = std::f64::consts::TAU * i as f64 / k as f64;
        for j in 0..=k {
            let beta = std::f64::consts::PI * j as f64 / k as f64;
            let r = *angles_to_unit(alpha, beta).unwrap().vector();
            for p in 0..n {
                a[p] = y[p] - r.dot(&x[p]);
            }
            m.tear = m.tear.min(tear(&a));
            m.tls = m.tls.min(trunc_sq_point(&a, xi).unwrap().value);
            m.cm = m.cm.min(outliers(&a, xi));
            m.cm_widened = m.cm_widened.min(outliers(&a, &widened));
        }
    }
    m
}

/// Branch and bound against a 2001² grid with exact inner solves.
fn grid_optimality() -> Outcome {
    const K: usize = 2000;
    // Neighboring grid points differ by π/K in beta and 2π/K in alpha, and
    // moving alpha by δ moves the unit vector by at most δ.
    let d = 1.5 * std::f64::consts::PI / K as f64;
    let cfg = SolverConfig {
        min_resolution: 1e-9,
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20 {
        let n = rng.random_range(5..=30);
        let pairs = random_pairs(&mut rng, n);
        let g = grid_minima(&pairs, K, d);
        let sx: f64 = pairs.x().iter().map(|x| x.norm()).sum();
        let sxi: f64 = pairs
            .x()
            .iter()
            .zip(pairs.xi())
            .map(|(x, xi)| x.norm() * xi)
            .sum();
        let tear = solve_tear1(&pairs, &cfg).unwrap();
        let tls = solve_tls1(&pairs, &cfg).unwrap();
        let cm = solve_cm1(&pairs, &cfg).unwrap();
        let eps_abs = 1e-6 * pairs.xi_sum();
        let eps_sq = 1e-6 * pairs.xi().iter().map(|x| x * x).sum::<f64>();
        // The searched value must not exceed any grid value by more than the
        // gap, and the grid point nearest the optimum lies within the
        // Lipschitz slack of it.
        let checks = [
            ("tear", tear.value, g.tear, g.tear - d * sx, eps_abs),
            ("tls", tls.value, g.tls, g.tls - 2.0 * d * sxi, eps_sq),
            ("cm", cm.value, g.cm, g.cm_widened, 0.5),
        ];
        for (name, value, grid, floor, eps) in checks {
            worst = worst.max(value - grid);
            if value > grid + eps + 1e-9 || value < floor - 1e-9 {
                return outcome(
                    false,
                    format!("instance {k} {name}: value {value}, grid {grid}, floor {floor}"),
                );
            }
        }
        if [&tear, &tls, &cm]
            .iter()
            .any(|s: &&StageSolution| s.stats.gap > 0.5)
        {
            return outcome(
                false,
                format!("instance {k}: search did not certify its gap"),
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        secs < 600.0,
        format!(
            "20 instances, largest search value minus grid minimum {worst:.2e}, {secs:.1} s of 600"
        ),
    )
}

fn synthetic(ratio: f64) -> Outcome {
    let base = SyntheticConfig {
        n: 10_000,
        outlier_ratio: ratio,
        seed: 5,
        ..Default::default()
    };
    let (mut re, mut te, mut f1, mut secs) = (vec![], vec![], vec![], vec![]);
    for trial in 0..20 {
        let (pairs, gt) = generate_synthetic(&base.for_trial(trial)).unwrap();
        let start = Instant::now();
        let m = register(&pairs, &SolverConfig::default())
            .and_then(|r| evaluate(&r, &gt, &RecallThresholds::THREEDMATCH));
        secs.push(start.elapsed().as_secs_f64());
        match m {
            Ok(m) => {
                re.push(m.re_deg);
                te.push(m.te);
                f1.push(m.f1);
            }
            Err(_) => {
                re.push(180.0);
                te.push(f64::INFINITY);
                f1.push(0.0);
            }
        }
    }
    let total: f64 = secs.iter().sum();
    let (mre, mte, mf1) = (
        median(&re).unwrap(),
        median(&te).unwrap(),
        median(&f1).unwrap(),
    );
    let ok = re.iter().filter(|&&r| r <= 15.0).count();
    if ratio < 0.97 {
        let pass = mre <= 2.0 && mte <= 0.05 && mf1 >= 0.9 && total < 600.0;
        outcome(
            pass,
            format!("median RE {mre:.3}° TE {mte:.4} F1 {mf1:.3}, {total:.0} s of 600"),
        )
    } else {
        let pass = mre <= 5.0 && ok >= 18;
        outcome(
            pass,
            format!("median RE {mre:.3}°, {ok}/20 within 15°, {total:.0} s"),
        )
    }
}

fn scalability() -> Outcome {
    const BUDGET: f64 = 1800.0;
    let cfg = SyntheticConfig {
        n: 1_000_000,
        outlier_ratio: 0.994,
        seed: 7,
        unit_cube: true,
        ..Default::default()
    };
    reset_peak();
    let (pairs, gt) = generate_synthetic(&cfg).unwrap();
    // The budget stops the search; a stopped run still reports a pose.
    let solver = SolverConfig {
        time_limit: Some(Duration::from_secs_f64(BUDGET)),
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let result = register(&pairs, &solver);
    let secs = start.elapsed().as_secs_f64();
    let gb = peak_bytes() as f64 / 1e9;
    let r = match result {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("{e} after {secs:.0} s, peak {gb:.2} GB")),
    };
    let s1 = &r.stage1.stats;
    let search = format!(
        "stage 1 {:?} after {} nodes, gap {:.3}",
        s1.termination, s1.nodes_expanded, s1.gap
    );
    match evaluate(&r, &gt, &RecallThresholds::THREEDMATCH) {
        Ok(m) => {
            let pass = m.re_deg <= 0.5 && m.te <= 0.005 && secs <= BUDGET && gb <= 4.0;
            outcome(
                pass,
                format!(
                    "RE {:.3}° TE {:.5}, {secs:.0} s of {BUDGET}, peak {gb:.2} GB; {search}",
                    m.re_deg, m.te
                ),
            )
        }
        Err(e) => outcome(false, format!("{e}; {search}")),
    }
}

/// Median first-stage F1 and median seconds over `trials` instances.
fn first_stage(
    n: usize,
    ratio: f64,
    trials: u64,
    solve: fn(&PointPairSet, &SolverConfig) -> tear_core::Result<StageSolution>,
) -> (f64, f64) {
    let base = SyntheticConfig {
        n,
        outlier_ratio: ratio,
        seed: 8,
        ..Default::default()
    };
    let (mut f1, mut secs) = (vec![], vec![]);
    for trial in 0..trials {
        let (pairs, gt) = generate_synthetic(&base.for_trial(trial)).unwrap();
        let start = Instant::now();
        let s = solve(&pairs, &SolverConfig::default());
        secs.push(start.elapsed().as_secs_f64());
        f1.push(
            s.map(|s| f1_score(&s.inliers, &gt.inlier_mask))
                .unwrap_or(0.0),
        );
    }
    (median(&f1).unwrap(), median(&secs).unwrap())
}

fn loss_comparison() -> Outcome {
    let mut detail = String::new();
    let mut pass = true;
    for ratio in [0.95, 0.99] {
        let (tear, _) = first_stage(1000, ratio, 20, solve_tear1);
        let (cm, _) = first_stage(1000, ratio, 20, solve_cm1);
        pass &= tear >= cm;
        detail += &format!("F1 at {ratio}: TEAR {tear:.3} CM {cm:.3}; ");
    }
    let (_, tear_s) = first_stage(10_000, 0.95, 3, solve_tear1);
    let (_, cm_s) = first_stage(10_000, 0.95, 3, solve_cm1);
    pass &= tear_s < cm_s;
    detail += &format!("n=10000 time TEAR {tear_s:.2} s CM {cm_s:.2} s");
    outcome(pass, detail)
}

fn tls_comparison() -> Outcome {
    let (tear, _) = first_stage(1000, 0.99, 20, solve_tear1);
    let (tls, _) = first_stage(1000, 0.99, 20, solve_tls1);
    let ratio_at = |n| {
        let (_, tear_s) = first_stage(n, 0.99, 5, solve_tear1);
        let (_, tls_s) = first_stage(n, 0.99, 5, solve_tls1);
        tls_s / tear_s
    };
    let (small, large) = (ratio_at(2000), ratio_at(8000));
    let pass = (tear - tls).abs() <= 0.05 && large > small;
    outcome(
        pass,
        format!(
            "F1 TEAR {tear:.3} TLS {tls:.3}; TLS/TEAR time {small:.2} at 2000, {large:.2} at 8000"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let tear = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_tear"))
            .args(args)
            .env_remove("TEAR_THREADS")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    };
    let mut ok = true;
    for name in ["a", "b"] {
        ok &= tear(&[
            "synth",
            "--n",
            "2000",
            "--ratio",
            "0.95",
            "--seed",
            "10",
            "--out",
            &p(&format!("{name}.csv")),
        ]);
        ok &= tear(&[
            "register",
            &p(&format!("{name}.csv")),
            "--gt",
            &p(&format!("{name}.gt.json")),
            "--out",
            &p(&format!("{name}.json")),
        ]);
    }
    if !ok {
        return outcome(false, "a command failed".into());
    }
    let same = |x: &str, y: &str| std::fs::read(p(x)).unwrap() == std::fs::read(p(y)).unwrap();
    let pass = same("a.csv", "b.csv") && same("a.json", "b.json");
    outcome(
        pass,
        "synthetic pairs and result records compared byte for byte".into(),
    )
}
