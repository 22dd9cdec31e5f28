//! Campaigns fanned out over a worker pool. Results come back in job order,
//! whatever the scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Context;
use blockfw_core::globalopt::{
    aggregate_campaign, aggregate_mbh, mbh_run, run_campaign_job, AggregateTrajectory, Axis, CampaignRun,
    MbhCampaignRun, MbhConfig, MultistartSpec,
};
use blockfw_core::problems::gen_multistqp;
use blockfw_core::rng::{derive_seed, Label};
use blockfw_core::solver::{Algorithm, Clock};
use blockfw_core::QuadraticProblem;
use rayon::prelude::*;

use crate::instance::fmt_real;
use crate::manifest::{Manifest, ManifestError};

/// Wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// `count` seeds split from `master` under `label`.
pub fn split_seeds(master: u64, label: Label, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(master, label, i)).collect()
}

fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().context("building worker pool")
}

/// Generates one instance per seed, in parallel, keeping seed order.
fn generate(pool: &rayon::ThreadPool, l: usize, m: usize, seeds: &[u64]) -> Vec<(u64, Result<QuadraticProblem, String>)> {
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| (s, gen_multistqp(l, m, s).map_err(|e| e.to_string())))
            .collect()
    })
}

fn find_problem(problems: &[(u64, Result<QuadraticProblem, String>)], seed: u64) -> Result<&QuadraticProblem, String> {
    match problems.iter().find(|p| p.0 == seed) {
        Some((_, Ok(p))) => Ok(p),
        Some((_, Err(e))) => Err(e.clone()),
        None => Err(format!("no instance for objective seed {seed}")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobFailure {
    pub run_id: String,
    pub message: String,
}

pub fn multistart_run_id(algorithm: Algorithm, objective_seed: u64, start_seed: u64) -> String {
    format!("{}:o{}:s{}", algorithm.id(), objective_seed, start_seed)
}

pub fn mbh_run_id(algorithm: Algorithm, objective_seed: u64, run_seed: u64) -> String {
    format!("{}:o{}:r{}", algorithm.id(), objective_seed, run_seed)
}

pub struct MultistartReport {
    /// Finished runs with their run ids, in job order.
    pub runs: Vec<(String, CampaignRun)>,
    pub failures: Vec<JobFailure>,
    pub aggregates: Vec<AggregateTrajectory>,
    /// Instances by objective seed, for diagnostics.
    pub problems: Vec<(u64, QuadraticProblem)>,
}

impl MultistartReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_multistart(spec: &MultistartSpec, jobs: usize) -> anyhow::Result<MultistartReport> {
    spec.validate()?;
    let pool = pool(jobs)?;
    let problems = generate(&pool, spec.l, spec.m, &spec.objective_seeds);
    let outcomes: Vec<(String, Result<CampaignRun, String>)> = pool.install(|| {
        spec.jobs()
            .into_par_iter()
            .map(|(a, o, s)| {
                let id = multistart_run_id(a, o, s);
                let run = find_problem(&problems, o)
                    .and_then(|p| run_campaign_job(spec, p, a, o, s).map_err(|e| e.to_string()));
                (id, run)
            })
            .collect()
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (run_id, outcome) in outcomes {
        match outcome {
            Ok(r) => runs.push((run_id, r)),
            Err(message) => failures.push(JobFailure { run_id, message }),
        }
    }
    let finished: Vec<CampaignRun> = runs.iter().map(|(_, r)| r.clone()).collect();
    let aggregates = aggregate_campaign(spec, &finished);
    let problems = problems.into_iter().filter_map(|(s, p)| p.ok().map(|p| (s, p))).collect();
    Ok(MultistartReport { runs, failures, aggregates, problems })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbhSpec {
    pub l: usize,
    pub m: usize,
    pub objective_seeds: Vec<u64>,
    pub run_seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub i_max: usize,
    pub gamma: f64,
    /// Gradient budget per local optimization; `None` means `10 m`.
    pub lo_budget: Option<u64>,
    pub tol: f64,
}

impl MbhSpec {
    pub fn config(&self, algorithm: Algorithm, run_seed: u64) -> MbhConfig {
        let mut solver = algorithm.config();
        solver.tol = self.tol;
        MbhConfig { i_max: self.i_max, gamma: self.gamma, lo_budget: self.lo_budget, seed: run_seed, solver }
    }

    pub fn lo_budget_value(&self) -> u64 {
        self.config(Algorithm::Bcfw, 0).lo_budget_for(self.m)
    }

    pub fn jobs(&self) -> Vec<(Algorithm, u64, u64)> {
        let mut jobs = Vec::new();
        for &a in &self.algorithms {
            for &o in &self.objective_seeds {
                for &r in &self.run_seeds {
                    jobs.push((a, o, r));
                }
            }
        }
        jobs
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.objective_seeds.is_empty() || self.run_seeds.is_empty() || self.algorithms.is_empty() {
            anyhow::bail!("basin hopping needs seeds and algorithms");
        }
        self.config(Algorithm::Bcfw, 0).validate()?;
        Ok(())
    }
}

pub struct MbhReport {
    pub runs: Vec<(String, MbhCampaignRun)>,
    pub failures: Vec<JobFailure>,
    pub aggregates: Vec<AggregateTrajectory>,
}

impl MbhReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_mbh(spec: &MbhSpec, jobs: usize) -> anyhow::Result<MbhReport> {
    spec.validate()?;
    let pool = pool(jobs)?;
    let problems = generate(&pool, spec.l, spec.m, &spec.objective_seeds);
    let outcomes: Vec<(String, Result<MbhCampaignRun, String>)> = pool.install(|| {
        spec.jobs()
            .into_par_iter()
            .map(|(a, o, r)| {
                let id = mbh_run_id(a, o, r);
                let run = find_problem(&problems, o).and_then(|p| {
                    mbh_run(p, &spec.config(a, r))
                        .map(|result| MbhCampaignRun { algorithm: a, objective_seed: o, run_seed: r, result })
                        .map_err(|e| e.to_string())
                });
                (id, run)
            })
            .collect()
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (run_id, outcome) in outcomes {
        match outcome {
            Ok(r) => runs.push((run_id, r)),
            Err(message) => failures.push(JobFailure { run_id, message }),
        }
    }
    let finished: Vec<MbhCampaignRun> = runs.iter().map(|(_, r)| r.clone()).collect();
    let aggregates = aggregate_mbh(&spec.algorithms, &finished);
    Ok(MbhReport { runs, failures, aggregates })
}

/// `run_id,hop,local_f,incumbent_f,incumbent_l0`, one row per local optimization.
pub fn mbh_incumbents_csv(runs: &[(String, MbhCampaignRun)]) -> String {
    let mut out = String::from("run_id,hop,local_f,incumbent_f,incumbent_l0\n");
    for (id, run) in runs {
        let r = &run.result;
        for i in 0..r.incumbents.len() {
            writeln!(
                out,
                "{id},{i},{},{},{}",
                fmt_real(r.local_values[i]),
                fmt_real(r.incumbents[i]),
                r.incumbent_l0[i]
            )
            .unwrap();
        }
    }
    out
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::GradEvals => "grad_evals",
        Axis::BlockUpdates => "block_updates",
    }
}

pub fn parse_axis(s: &str) -> Option<Axis> {
    match s {
        "grad_evals" => Some(Axis::GradEvals),
        "block_updates" => Some(Axis::BlockUpdates),
        _ => None,
    }
}

fn algorithm_ids(algorithms: &[Algorithm]) -> Vec<&'static str> {
    algorithms.iter().map(|a| a.id()).collect()
}

fn parse_algorithms(m: &Manifest) -> Result<Vec<Algorithm>, ManifestError> {
    m.parse_list::<String>("algorithms")?
        .iter()
        .map(|s| Algorithm::parse(s).ok_or_else(|| ManifestError::Value { key: "algorithms".into(), value: s.clone() }))
        .collect()
}

fn mark_runs(manifest: &mut Manifest, ids: impl Iterator<Item = String>, failures: &[JobFailure]) {
    manifest.set("status", if failures.is_empty() { "complete" } else { "incomplete" });
    manifest.set("failed_runs", failures.len());
    for id in ids {
        manifest.set(&format!("run.{id}"), "ok");
    }
    for f in failures {
        manifest.set(&format!("run.{}", f.run_id), format!("failed: {}", f.message.replace('\n', " ")));
    }
}

pub const MANIFEST_VERSION: u32 = 1;

pub fn multistart_manifest(spec: &MultistartSpec, master_seed: Option<u64>, report: &MultistartReport) -> Manifest {
    let mut m = Manifest::new();
    m.set("command", "multistart");
    m.set("manifest_version", MANIFEST_VERSION);
    m.set("l", spec.l);
    m.set("m", spec.m);
    if let Some(s) = master_seed {
        m.set("master_seed", s);
    }
    m.set_list("objective_seeds", &spec.objective_seeds);
    m.set_list("start_seeds", &spec.start_seeds);
    m.set_list("algorithms", &algorithm_ids(&spec.algorithms));
    m.set("budget_grads", spec.budget);
    m.set("tick", spec.tick_size());
    m.set("axis", axis_name(spec.axis));
    m.set("tol", spec.tol);
    let ids: Vec<String> = report.runs.iter().map(|(id, _)| id.clone()).collect();
    let mut all: Vec<String> = spec.jobs().into_iter().map(|(a, o, s)| multistart_run_id(a, o, s)).collect();
    all.retain(|id| ids.contains(id));
    mark_runs(&mut m, all.into_iter(), &report.failures);
    m
}

pub fn multistart_spec_from_manifest(m: &Manifest) -> Result<MultistartSpec, ManifestError> {
    let axis_raw = m.require("axis")?;
    let axis = parse_axis(axis_raw).ok_or_else(|| ManifestError::Value { key: "axis".into(), value: axis_raw.into() })?;
    Ok(MultistartSpec {
        l: m.parse_value("l")?,
        m: m.parse_value("m")?,
        objective_seeds: m.parse_list("objective_seeds")?,
        start_seeds: m.parse_list("start_seeds")?,
        algorithms: parse_algorithms(m)?,
        budget: m.parse_value("budget_grads")?,
        tick: Some(m.parse_value("tick")?),
        axis,
        tol: m.parse_value("tol")?,
    })
}

pub fn mbh_manifest(spec: &MbhSpec, master_seed: Option<u64>, report: &MbhReport) -> Manifest {
    let mut m = Manifest::new();
    m.set("command", "mbh");
    m.set("manifest_version", MANIFEST_VERSION);
    m.set("l", spec.l);
    m.set("m", spec.m);
    if let Some(s) = master_seed {
        m.set("master_seed", s);
    }
    m.set_list("objective_seeds", &spec.objective_seeds);
    m.set_list("run_seeds", &spec.run_seeds);
    m.set_list("algorithms", &algorithm_ids(&spec.algorithms));
    m.set("i_max", spec.i_max);
    m.set("gamma", spec.gamma);
    m.set("lo_budget_grads", spec.lo_budget_value());
    m.set("tol", spec.tol);
    let ids = report.runs.iter().map(|(id, _)| id.clone());
    mark_runs(&mut m, ids, &report.failures);
    m
}

pub fn mbh_spec_from_manifest(m: &Manifest) -> Result<MbhSpec, ManifestError> {
    Ok(MbhSpec {
        l: m.parse_value("l")?,
        m: m.parse_value("m")?,
        objective_seeds: m.parse_list("objective_seeds")?,
        run_seeds: m.parse_list("run_seeds")?,
        algorithms: parse_algorithms(m)?,
        i_max: m.parse_value("i_max")?,
        gamma: m.parse_value("gamma")?,
        lo_budget: Some(m.parse_value("lo_budget_grads")?),
        tol: m.parse_value("tol")?,
    })
}
