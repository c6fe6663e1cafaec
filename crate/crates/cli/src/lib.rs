//! The `tear` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or solver failure, 2 unparsable input or
//! flags, 3 too few inliers to fit a pose, 4 self-check failure.

pub mod io;
pub mod record;
pub mod selfcheck;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tear_bench::{
    evaluate, generate_synthetic, summarize, sweep, write_csv, RecallThresholds, Solver, SweepSpec,
    SyntheticConfig,
};
use tear_core::{register_with, BnBConfig, FirstStageLoss, SolverConfig};

use crate::record::{ConfigRecord, MetricsRecord, ResultRecord, TimingRecord};
use crate::selfcheck::{run_selfcheck, SelfcheckOptions, SolverSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INSUFFICIENT_INLIERS: i32 = 3;
pub const EXIT_SELFCHECK: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] tear_core::Error),
    #[error("self-check failed: {0}")]
    Selfcheck(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => EXIT_PARSE,
            Self::Core(tear_core::Error::InsufficientInliers { .. }) => EXIT_INSUFFICIENT_INLIERS,
            Self::Selfcheck(_) => EXIT_SELFCHECK,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tear",
    version,
    about = "Outlier-robust rigid registration of 3D correspondences"
)]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "TEAR_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic correspondences and their ground truth.
    Synth(SynthArgs),
    /// Register a correspondence file.
    Register(RegisterArgs),
    /// Run synthetic trials over a grid of sizes and outlier ratios.
    Bench(BenchArgs),
    /// Check the solvers against brute-force oracles on random instances.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    /// Fraction of pairs whose target is replaced by noise.
    #[arg(long, default_value_t = 0.0)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.67)]
    pub tau: f64,
    /// Threshold written for every pair; defaults to 5.54·sigma.
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rescale the source cloud into the unit cube.
    #[arg(long)]
    pub unit_cube: bool,
    /// Correspondence file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth file; defaults to the output path with `.gt.json`.
    #[arg(long)]
    pub gt: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Tear,
    Cm,
    Tls,
}

impl LossArg {
    fn loss(self) -> FirstStageLoss {
        match self {
            Self::Tear => FirstStageLoss::Tear,
            Self::Cm => FirstStageLoss::Consensus,
            Self::Tls => FirstStageLoss::TruncatedSquares,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Tear => "tear",
            Self::Cm => "cm",
            Self::Tls => "tls",
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Absolute optimality gap; defaults to 1e-6 of the objective scale.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Boxes narrower than this (radians) are not split.
    #[arg(long, default_value_t = BnBConfig::DEFAULT_RESOLUTION)]
    pub resolution: f64,
    #[arg(long, default_value_t = BnBConfig::DEFAULT_MAX_NODES)]
    pub max_nodes: usize,
}

impl SearchArgs {
    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            min_resolution: self.resolution,
            max_nodes: self.max_nodes,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Correspondence file.
    pub input: PathBuf,
    /// First-stage loss.
    #[arg(long, value_enum, default_value_t = LossArg::Tear)]
    pub loss: LossArg,
    /// Threshold for every pair, overriding the file's column.
    #[arg(long)]
    pub xi: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Ground-truth file; adds error metrics to the record.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Success thresholds for the recall flag: 3dmatch, kitti or eth.
    #[arg(long, default_value = "3dmatch")]
    pub preset: RecallThresholds,
    /// Write the result record (JSON) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include wall times in the record.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Pair counts, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub n: Vec<usize>,
    /// Outlier ratios, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    pub ratio: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value = "tear")]
    pub solver: Solver,
    #[arg(long, default_value = "3dmatch")]
    pub preset: RecallThresholds,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.67)]
    pub tau: f64,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub unit_cube: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Run trials concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Write rows as CSV here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write rows and per-cell summaries as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Random instances to check.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Largest instance size.
    #[arg(long, default_value_t = 50)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write a failing instance.
    #[arg(long, default_value = "selfcheck-failure.json")]
    pub dump: PathBuf,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    run_cli(cli, &SolverSet::default(), out, err)
}

/// Runs a parsed command line with the given solvers under self-check.
pub fn run_cli(
    cli: Cli,
    solvers: &SolverSet,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> i32 {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(
                err,
                "error: cannot start {} threads: {e}",
                cli.threads.unwrap_or(0)
            );
            return EXIT_FAILURE;
        }
    };
    let threads = cli.threads;
    let result = pool.install(|| match cli.command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Register(a) => cmd_register(&a, threads, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Selfcheck(a) => cmd_selfcheck(&a, solvers, out, err),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_out(out: &mut (dyn Write + Send), text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn cmd_synth(a: &SynthArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let cfg = SyntheticConfig {
        n: a.n,
        outlier_ratio: a.ratio,
        sigma: a.sigma,
        tau: a.tau,
        xi: a.xi,
        seed: a.seed,
        unit_cube: a.unit_cube,
    };
    let (pairs, gt) = generate_synthetic(&cfg).map_err(|e| CliError::Parse(e.to_string()))?;
    io::write_pairs(&a.out, &pairs)?;
    let gt_path =
        a.gt.clone()
            .unwrap_or_else(|| a.out.with_extension("gt.json"));
    io::write_ground_truth(&gt_path, &gt)?;
    write_out(
        out,
        &format!(
            "wrote {} pairs ({} outliers) to {} and ground truth to {}\n",
            pairs.len(),
            pairs.len() - gt.inlier_count(),
            a.out.display(),
            gt_path.display()
        ),
    )
}

pub fn cmd_register(
    a: &RegisterArgs,
    threads: Option<usize>,
    out: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    let pairs = io::read_pairs(&a.input, a.xi)?;
    let gt = a.gt.as_deref().map(io::read_ground_truth).transpose()?;
    if let Some(gt) = &gt {
        if gt.inlier_mask.len() != pairs.len() {
            return Err(CliError::Parse(format!(
                "ground truth covers {} pairs but the input has {}",
                gt.inlier_mask.len(),
                pairs.len()
            )));
        }
    }
    let cfg = a.search.solver_config();
    let start = Instant::now();
    let result = register_with(&pairs, a.loss.loss(), &cfg)?;
    let total = start.elapsed();

    let config = ConfigRecord {
        xi: a.xi,
        epsilon: a.search.epsilon,
        resolution: a.search.resolution,
        max_nodes: a.search.max_nodes,
        threads,
    };
    let mut record = ResultRecord::new(a.loss.name(), pairs.len(), &result, config);
    if let Some(gt) = &gt {
        record.metrics = Some(MetricsRecord::from(&evaluate(&result, gt, &a.preset)?));
    }
    if a.timing {
        record.timing = Some(TimingRecord {
            stage1_s: result.stage1.stats.wall_time.as_secs_f64(),
            stage2_s: result.stage2.stats.wall_time.as_secs_f64(),
            total_s: total.as_secs_f64(),
        });
    }
    if let Some(path) = &a.out {
        std::fs::write(path, record.to_json()).map_err(|e| CliError::io(path, e))?;
    }

    let r = &record.pose.rotation;
    let t = &record.pose.translation;
    let mut text = format!(
        "rotation     [{:.6} {:.6} {:.6}; {:.6} {:.6} {:.6}; {:.6} {:.6} {:.6}]\n\
         translation  [{:.6} {:.6} {:.6}]\n\
         inliers      {} fitted, {} within threshold of {}\n",
        r[0],
        r[1],
        r[2],
        r[3],
        r[4],
        r[5],
        r[6],
        r[7],
        r[8],
        t[0],
        t[1],
        t[2],
        record.inliers,
        record.final_inliers,
        record.pairs
    );
    for (name, s) in [("stage 1", &record.stage1), ("stage 2", &record.stage2)] {
        text += &format!(
            "{name}      value {:.6} gap {:.3e} nodes {} ({}), {} inliers\n",
            s.value, s.gap, s.nodes_expanded, s.termination, s.inliers
        );
    }
    if let Some(m) = &record.metrics {
        text += &format!(
            "errors       RE {:.4} deg, TE {:.5}, F1 {:.4}, recall {}\n",
            m.re_deg, m.te, m.f1, m.recall
        );
    }
    text += &format!("wall time    {:.3} s\n", total.as_secs_f64());
    write_out(out, &text)
}

#[derive(Serialize)]
struct BenchJson<'a> {
    rows: &'a [tear_bench::SweepRow],
    summary: Vec<tear_bench::CellSummary>,
}

pub fn cmd_bench(
    a: &BenchArgs,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    let mut grid = Vec::new();
    for &n in &a.n {
        for &ratio in &a.ratio {
            let cfg = SyntheticConfig {
                n,
                outlier_ratio: ratio,
                sigma: a.sigma,
                tau: a.tau,
                xi: a.xi,
                seed: a.seed,
                unit_cube: a.unit_cube,
            };
            cfg.validate().map_err(|e| CliError::Parse(e.to_string()))?;
            grid.push(cfg);
        }
    }
    let spec = SweepSpec {
        grid,
        solver: a.solver,
        trials: a.trials,
        solver_config: a.search.solver_config(),
        thresholds: a.preset,
        parallel: a.parallel,
    };
    let rows = sweep(&spec);
    match &a.csv {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            write_csv(&rows, file).map_err(|e| CliError::io(path, e.into()))?;
        }
        None => {
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)
                .map_err(|e| CliError::io(Path::new("<stdout>"), e.into()))?;
            out.write_all(&buf)
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    let summary = summarize(&rows);
    for c in &summary {
        let _ = writeln!(
            err,
            "n={} ratio={} trials={} failures={} median RE {:?} TE {:?} F1 {:?} recall {:?} time {:?}",
            c.n, c.ratio, c.trials, c.failures, c.median_re_deg, c.median_te, c.median_f1, c.recall_rate, c.median_time_s
        );
    }
    if let Some(path) = &a.json {
        let json = serde_json::to_string_pretty(&BenchJson {
            rows: &rows,
            summary,
        })
        .expect("rows serialize");
        std::fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn cmd_selfcheck(
    a: &SelfcheckArgs,
    solvers: &SolverSet,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    if a.count == 0 {
        let _ = writeln!(err, "warning: --count 0 checks nothing");
        return write_out(out, "selfcheck: 0 instances, nothing to check\n");
    }
    let opts = SelfcheckOptions {
        count: a.count,
        max_n: a.max_n,
        seed: a.seed,
        dump: a.dump.clone(),
    };
    let report = run_selfcheck(&opts, solvers);
    match report.failure {
        None => write_out(
            out,
            &format!(
                "selfcheck: {} instances, {} checks passed\n",
                report.instances, report.checks
            ),
        ),
        Some(f) => {
            let json = serde_json::to_string_pretty(&f).expect("failure serializes");
            let _ = writeln!(err, "{json}");
            std::fs::write(&opts.dump, json + "\n").map_err(|e| CliError::io(&opts.dump, e))?;
            Err(CliError::Selfcheck(format!(
                "{} on instance {} ({}); instance written to {}",
                f.check,
                f.instance,
                f.message,
                opts.dump.display()
            )))
        }
    }
}
