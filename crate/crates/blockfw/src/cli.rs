//! Command-line front end.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use blockfw_core::diagnostics::{diagnose, RunDiagnostics};
use blockfw_core::globalopt::{start_point, MultistartSpec, DEFAULT_GAMMA, DEFAULT_I_MAX};
use blockfw_core::problems::{gen_multistqp_with, MultiStqpParams, DEFAULT_ALPHA};
use blockfw_core::rng::{derive_seed, Label};
use blockfw_core::solver::{run, run_with_clock, Algorithm, RunTermination};
use blockfw_core::{ProductSimplexDomain, QuadraticProblem, RunResult};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::campaign::{
    mbh_incumbents_csv, mbh_manifest, mbh_spec_from_manifest, multistart_manifest, multistart_spec_from_manifest,
    run_mbh, run_multistart, split_seeds, MbhSpec, WallClock,
};
use crate::instance::{load_instance, save_instance};
use crate::manifest::Manifest;
use crate::output::{aggregate_to_long, write_aggregates, write_diagnostics, write_ssc_trace, TrajectoryWriter};

pub const ALGORITHM_TABLE: &str = "\
Algorithms (id: block selection, direction, short step chain):
  bcfw       RANDOM           FW    off
  bcafw-ssc  RANDOM           AFW   on
  pafw-ssc   PARALLEL         AFW   on
  gsafw-ssc  GAUSS-SOUTHWELL  AFW   on
  pfw-ssc    PARALLEL         PFW   on
  fdfw-ssc   PARALLEL         FDFW  on";

/// Exit code when a solve stops on the iteration cap.
pub const EXIT_MAX_ITER: i32 = 3;
/// Exit code when some campaign runs failed.
pub const EXIT_INCOMPLETE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "blockfw", version, about = "Block-coordinate Frank-Wolfe solvers on products of simplices", after_help = ALGORITHM_TABLE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Multi-StQP instance file.
    Gen(GenArgs),
    /// Run one algorithm on an instance and write its trajectory.
    #[command(after_help = ALGORITHM_TABLE)]
    Solve(SolveArgs),
    /// Multistart campaign over objective and start seeds.
    #[command(after_help = ALGORITHM_TABLE)]
    Multistart(MultistartArgs),
    /// Monotonic basin hopping campaign.
    #[command(after_help = ALGORITHM_TABLE)]
    Mbh(MbhArgs),
    /// Render an aggregate CSV to long format.
    Report(ReportArgs),
    /// Rerun a campaign from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Block size
    #[arg(long)]
    pub l: usize,
    /// Number of blocks
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output instance file
    #[arg(long)]
    pub out: PathBuf,
    /// Coupling scale [default: 1/(2 m^2)]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Diagonal shift of the block matrices
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Edge probability of the block graphs [default: from the clique size of l]
    #[arg(long)]
    pub edge_probability: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartKind {
    /// Uniform sample on the domain drawn from the seed
    Random,
    /// Barycenter of every block
    Barycenter,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "pafw-ssc", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    /// Gradient-evaluation budget [default: none]
    #[arg(long)]
    pub budget_grads: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Stop when the largest block FW gap is at or below this
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Seed of the start point and of block selection
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = StartKind::Random)]
    pub start: StartKind,
    /// Trajectory CSV
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "run")]
    pub run_id: String,
    /// Per-step short step chain log [default: not written]
    #[arg(long)]
    pub ssc_trace: Option<PathBuf>,
    /// Diagnostics CSV [default: not written]
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Fill elapsed_ms with wall-clock time (output is then not reproducible)
    #[arg(long, default_value_t = false)]
    pub record_time: bool,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    /// Block size
    #[arg(long, default_value_t = 20)]
    pub l: usize,
    /// Number of blocks
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    /// Seed from which objective, start and run seeds are split
    #[arg(long, default_value_t = 0)]
    pub master_seed: u64,
    /// Number of random objectives
    #[arg(long, default_value_t = 5)]
    pub objectives: usize,
    /// Explicit objective seeds, overriding --objectives [default: split from the master seed]
    #[arg(long, value_delimiter = ',')]
    pub objective_seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', default_value = "pafw-ssc,bcafw-ssc,bcfw", value_parser = parse_algorithm)]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    GradEvals,
    BlockUpdates,
}

#[derive(Debug, Args)]
pub struct MultistartArgs {
    #[command(flatten)]
    pub campaign: CampaignArgs,
    /// Start points per objective
    #[arg(long, default_value_t = 4)]
    pub starts: usize,
    /// Explicit start seeds, overriding --starts [default: split from the master seed]
    #[arg(long, value_delimiter = ',')]
    pub start_seeds: Option<Vec<u64>>,
    /// Gradient-evaluation budget per run [default: 50 m]
    #[arg(long)]
    pub budget_grads: Option<u64>,
    /// Aggregation grid spacing [default: m]
    #[arg(long)]
    pub tick: Option<u64>,
    #[arg(long, value_enum, default_value_t = AxisArg::GradEvals)]
    pub axis: AxisArg,
}

#[derive(Debug, Args)]
pub struct MbhArgs {
    #[command(flatten)]
    pub campaign: CampaignArgs,
    /// Basin-hopping runs per objective
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Explicit run seeds, overriding --runs [default: split from the master seed]
    #[arg(long, value_delimiter = ',')]
    pub run_seeds: Option<Vec<u64>>,
    /// Number of perturbations; each run makes i_max + 1 local optimizations
    #[arg(long, default_value_t = DEFAULT_I_MAX)]
    pub i_max: usize,
    /// Neighborhood size in (0, 1]
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Gradient budget of each local optimization [default: 10 m]
    #[arg(long)]
    pub lo_budget_grads: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Aggregate CSV
    #[arg(long)]
    pub input: PathBuf,
    /// Long-format CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| {
        let ids: Vec<&str> = Algorithm::ALL.iter().map(|a| a.id()).collect();
        format!("unknown algorithm {s:?}; expected one of {}", ids.join(", "))
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run_diagnostics(problem: &QuadraticProblem, result: &RunResult) -> anyhow::Result<RunDiagnostics> {
    let grad = problem.eval_grad(&result.final_point)?;
    Ok(diagnose(result, &grad))
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Multistart(a) => cmd_multistart(&a),
        Command::Mbh(a) => cmd_mbh(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

pub fn cmd_gen(a: &GenArgs) -> anyhow::Result<i32> {
    let params = MultiStqpParams {
        epsilon: a.epsilon,
        alpha: a.alpha,
        edge_probability: a.edge_probability,
        ..MultiStqpParams::new(a.l, a.m, a.seed)
    };
    let problem = gen_multistqp_with(&params)?;
    save_instance(&problem, &a.out)?;
    Ok(0)
}

pub fn cmd_solve(a: &SolveArgs) -> anyhow::Result<i32> {
    let problem = load_instance(&a.instance)?;
    let x0 = match a.start {
        StartKind::Random => start_point(&problem, a.seed),
        StartKind::Barycenter => ProductSimplexDomain::new(problem.layout().clone()).barycenter(),
    };
    let mut cfg = a.algorithm.config();
    cfg.max_grad_evals = a.budget_grads;
    cfg.max_iter = a.max_iter;
    cfg.tol = a.tol;
    cfg.seed = derive_seed(a.seed, Label::Selection, 0);
    cfg.record_ssc = a.ssc_trace.is_some();
    let result = if a.record_time {
        run_with_clock(&problem, x0, &cfg, WallClock::start())?
    } else {
        run(&problem, x0, &cfg)?
    };

    let mut w = TrajectoryWriter::new(create(&a.out)?)?;
    w.write_run(&a.run_id, &result)?;
    w.finish()?;
    if let Some(path) = &a.ssc_trace {
        write_ssc_trace(create(path)?, &a.run_id, &result)?;
    }
    if let Some(path) = &a.diagnostics {
        let d = run_diagnostics(&problem, &result)?;
        write_diagnostics(create(path)?, &[(a.run_id.clone(), d)])?;
    }
    Ok(match result.termination {
        RunTermination::Stationary | RunTermination::Budget => 0,
        RunTermination::MaxIterations => {
            eprintln!("stopped at the iteration cap before reaching the tolerance");
            EXIT_MAX_ITER
        }
    })
}

fn seeds(explicit: &Option<Vec<u64>>, master: u64, label: Label, count: usize) -> Vec<u64> {
    explicit.clone().unwrap_or_else(|| split_seeds(master, label, count))
}

pub fn multistart_spec(a: &MultistartArgs) -> MultistartSpec {
    let c = &a.campaign;
    let mut spec = MultistartSpec::new(
        c.l,
        c.m,
        seeds(&c.objective_seeds, c.master_seed, Label::Instance, c.objectives),
        seeds(&a.start_seeds, c.master_seed, Label::Start, a.starts),
        c.algorithms.clone(),
        a.budget_grads.unwrap_or(50 * c.m as u64),
    );
    spec.tick = a.tick;
    spec.tol = c.tol;
    spec.axis = match a.axis {
        AxisArg::GradEvals => blockfw_core::globalopt::Axis::GradEvals,
        AxisArg::BlockUpdates => blockfw_core::globalopt::Axis::BlockUpdates,
    };
    spec
}

pub fn mbh_spec(a: &MbhArgs) -> MbhSpec {
    let c = &a.campaign;
    MbhSpec {
        l: c.l,
        m: c.m,
        objective_seeds: seeds(&c.objective_seeds, c.master_seed, Label::Instance, c.objectives),
        run_seeds: seeds(&a.run_seeds, c.master_seed, Label::Perturbation, a.runs),
        algorithms: c.algorithms.clone(),
        i_max: a.i_max,
        gamma: a.gamma,
        lo_budget: a.lo_budget_grads,
        tol: c.tol,
    }
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> anyhow::Result<()> {
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest.to_string()).with_context(|| format!("writing {}", path.display()))
}

fn report_failures(failures: &[crate::campaign::JobFailure]) -> i32 {
    if failures.is_empty() {
        return 0;
    }
    for f in failures {
        eprintln!("run {} failed: {}", f.run_id, f.message);
    }
    EXIT_INCOMPLETE
}

fn exec_multistart(spec: &MultistartSpec, master_seed: Option<u64>, jobs: usize, dir: &Path) -> anyhow::Result<i32> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = run_multistart(spec, jobs)?;

    write_aggregates(create(&dir.join("aggregate.csv"))?, &report.aggregates)?;
    let mut traj = TrajectoryWriter::new(create(&dir.join("trajectories.csv"))?)?;
    let mut diags = Vec::with_capacity(report.runs.len());
    for (id, run) in &report.runs {
        traj.write_run(id, &run.result)?;
        let problem = &report.problems.iter().find(|p| p.0 == run.objective_seed).expect("instance of a finished run").1;
        diags.push((id.clone(), run_diagnostics(problem, &run.result)?));
    }
    traj.finish()?;
    write_diagnostics(create(&dir.join("diagnostics.csv"))?, &diags)?;
    write_manifest(dir, &multistart_manifest(spec, master_seed, &report))?;
    Ok(report_failures(&report.failures))
}

fn exec_mbh(spec: &MbhSpec, master_seed: Option<u64>, jobs: usize, dir: &Path) -> anyhow::Result<i32> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = run_mbh(spec, jobs)?;
    write_aggregates(create(&dir.join("aggregate.csv"))?, &report.aggregates)?;
    let mut f = create(&dir.join("incumbents.csv"))?;
    f.write_all(mbh_incumbents_csv(&report.runs).as_bytes())?;
    f.flush()?;
    write_manifest(dir, &mbh_manifest(spec, master_seed, &report))?;
    Ok(report_failures(&report.failures))
}

pub fn cmd_multistart(a: &MultistartArgs) -> anyhow::Result<i32> {
    let spec = multistart_spec(a);
    exec_multistart(&spec, Some(a.campaign.master_seed), a.campaign.jobs, &a.campaign.out_dir)
}

pub fn cmd_mbh(a: &MbhArgs) -> anyhow::Result<i32> {
    let spec = mbh_spec(a);
    exec_mbh(&spec, Some(a.campaign.master_seed), a.campaign.jobs, &a.campaign.out_dir)
}

pub fn cmd_report(a: &ReportArgs) -> anyhow::Result<i32> {
    let input = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    aggregate_to_long(BufReader::new(input), create(&a.out)?)?;
    Ok(0)
}

pub fn cmd_replay(a: &ReplayArgs) -> anyhow::Result<i32> {
    let text = fs::read_to_string(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let manifest: Manifest = text.parse()?;
    let master = manifest.get("master_seed").map(str::parse).transpose()?;
    match manifest.require("command")? {
        "multistart" => exec_multistart(&multistart_spec_from_manifest(&manifest)?, master, a.jobs, &a.out_dir),
        "mbh" => exec_mbh(&mbh_spec_from_manifest(&manifest)?, master, a.jobs, &a.out_dir),
        other => bail!("manifest command {other:?} cannot be replayed"),
    }
}
