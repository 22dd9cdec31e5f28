//! Global search around the local solver: multistart campaigns and monotonic
//! basin hopping.

use alloc::string::String;
use alloc::vec::Vec;

use crate::blockvec::BlockVector;
use crate::domain::{sample_uniform_block, ProductSimplexDomain};
use crate::problems::QuadraticProblem;
use crate::rng::{derive_seed, Label, Stream};
use crate::solver::{run, Algorithm, RunResult, SolverConfig, TrajectoryRow};
use crate::{Error, Result};

/// Offset below the best multistart value used as the optimum estimate.
pub const MULTISTART_GAP_OFFSET: f64 = 1e-5;
/// Offset below the best basin-hopping value used as the optimum estimate.
pub const MBH_GAP_OFFSET: f64 = 1e-1;

pub const DEFAULT_GAMMA: f64 = 0.25;
pub const DEFAULT_I_MAX: usize = 9;
/// Local-optimization gradient budget per block.
pub const DEFAULT_LO_BUDGET_PER_BLOCK: u64 = 10;

/// `x + gamma (y - x)` with `y` uniform on the product of simplices.
pub fn perturb(x_best: &BlockVector, gamma: f64, rng: &mut Stream) -> BlockVector {
    let layout = x_best.layout();
    let mut out = x_best.clone();
    for i in 0..layout.num_blocks() {
        let y = sample_uniform_block(layout.block_size(i), rng);
        for (v, yj) in out.block_mut(i).iter_mut().zip(&y) {
            *v += gamma * (yj - *v);
        }
    }
    out
}

/// Best value over all collected results minus `offset`.
pub fn gap_reference<I: IntoIterator<Item = f64>>(values: I, offset: f64) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min) - offset
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbhConfig {
    pub i_max: usize,
    pub gamma: f64,
    /// Gradient budget of each local optimization; `None` means `10 m`.
    pub lo_budget: Option<u64>,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl MbhConfig {
    pub fn new(solver: SolverConfig, seed: u64) -> Self {
        Self { i_max: DEFAULT_I_MAX, gamma: DEFAULT_GAMMA, lo_budget: None, seed, solver }
    }

    pub fn lo_budget_for(&self, m: usize) -> u64 {
        self.lo_budget.unwrap_or(DEFAULT_LO_BUDGET_PER_BLOCK * m as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter("gamma must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbhResult {
    pub best_point: BlockVector,
    /// `f` of the incumbent after each local optimization.
    pub incumbents: Vec<f64>,
    pub incumbent_l0: Vec<usize>,
    /// `f` returned by each local optimization.
    pub local_values: Vec<f64>,
    pub lo_calls: usize,
}

impl MbhResult {
    pub fn best_f(&self) -> f64 {
        *self.incumbents.last().expect("at least one local optimization")
    }
}

/// Monotonic basin hopping with the solver as local optimizer.
///
/// The first start is uniform on the domain; later starts are drawn from
/// `B(x_best, gamma)`. Runs exactly `i_max + 1` local optimizations.
pub fn mbh_run(problem: &QuadraticProblem, cfg: &MbhConfig) -> Result<MbhResult> {
    cfg.validate()?;
    let domain = ProductSimplexDomain::new(problem.layout().clone());
    let m = problem.layout().num_blocks();
    let mut start_rng = Stream::with_label(cfg.seed, Label::Start);
    let mut perturb_rng = Stream::with_label(cfg.seed, Label::Perturbation);

    let mut start = domain.sample_uniform(&mut start_rng);
    let mut best_point = start.clone();
    let mut best_f = problem.eval_f(&start)?;
    let mut incumbents = Vec::with_capacity(cfg.i_max + 1);
    let mut incumbent_l0 = Vec::with_capacity(cfg.i_max + 1);
    let mut local_values = Vec::with_capacity(cfg.i_max + 1);

    for i in 0..=cfg.i_max {
        let solver = SolverConfig {
            max_grad_evals: Some(cfg.lo_budget_for(m)),
            seed: derive_seed(cfg.seed, Label::Selection, i as u64),
            ..cfg.solver.clone()
        };
        let local = run(problem, start, &solver)?;
        let f_local = local.final_f();
        local_values.push(f_local);
        if f_local < best_f {
            best_f = f_local;
            best_point = local.final_point;
        }
        incumbents.push(best_f);
        incumbent_l0.push(crate::domain::SupportSet::of(&best_point).len());
        if i == cfg.i_max {
            break;
        }
        start = perturb(&best_point, cfg.gamma, &mut perturb_rng);
    }
    Ok(MbhResult { best_point, incumbents, incumbent_l0, local_values, lo_calls: cfg.i_max + 1 })
}

/// The x-axis used to align runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    GradEvals,
    BlockUpdates,
}

impl Axis {
    fn value(self, row: &TrajectoryRow) -> u64 {
        match self {
            Axis::GradEvals => row.grad_evals,
            Axis::BlockUpdates => row.block_updates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub tick: u64,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub mean_l0: f64,
    pub std_l0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTrajectory {
    pub algorithm_id: String,
    pub points: Vec<AggregatePoint>,
}

impl AggregateTrajectory {
    pub fn final_mean_gap(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.mean_gap)
    }

    /// First tick whose mean gap is at or below `threshold`.
    pub fn first_tick_below(&self, threshold: f64) -> Option<u64> {
        self.points.iter().find(|p| p.mean_gap <= threshold).map(|p| p.tick)
    }
}

/// Mean and population standard deviation; the mean is kept inside the
/// sample range.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (values.iter().sum::<f64>() / n).clamp(lo, hi);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// One local run of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRun {
    pub algorithm: Algorithm,
    pub objective_seed: u64,
    pub start_seed: u64,
    pub result: RunResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartSpec {
    pub l: usize,
    pub m: usize,
    pub objective_seeds: Vec<u64>,
    pub start_seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    /// Shared gradient-evaluation budget per run.
    pub budget: u64,
    /// Spacing of the aggregation grid; `None` means `m`.
    pub tick: Option<u64>,
    pub axis: Axis,
    pub tol: f64,
}

impl MultistartSpec {
    pub fn new(l: usize, m: usize, objective_seeds: Vec<u64>, start_seeds: Vec<u64>, algorithms: Vec<Algorithm>, budget: u64) -> Self {
        Self {
            l,
            m,
            objective_seeds,
            start_seeds,
            algorithms,
            budget,
            tick: None,
            axis: Axis::GradEvals,
            tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective_seeds.is_empty() || self.start_seeds.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("multistart needs seeds and algorithms"));
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter("budget must be positive"));
        }
        Ok(())
    }

    pub fn tick_size(&self) -> u64 {
        self.tick.unwrap_or(self.m as u64).max(1)
    }

    pub fn solver_config(&self, algorithm: Algorithm, start_seed: u64) -> SolverConfig {
        SolverConfig {
            max_grad_evals: Some(self.budget),
            tol: self.tol,
            seed: derive_seed(start_seed, Label::Selection, 0),
            ..algorithm.config()
        }
    }

    /// All `(algorithm, objective seed, start seed)` jobs, in aggregation order.
    pub fn jobs(&self) -> Vec<(Algorithm, u64, u64)> {
        let mut jobs = Vec::new();
        for &a in &self.algorithms {
            for &o in &self.objective_seeds {
                for &s in &self.start_seeds {
                    jobs.push((a, o, s));
                }
            }
        }
        jobs
    }
}

/// The start point for a start seed; shared by every algorithm.
pub fn start_point(problem: &QuadraticProblem, start_seed: u64) -> BlockVector {
    let mut rng = Stream::with_label(start_seed, Label::Start);
    ProductSimplexDomain::new(problem.layout().clone()).sample_uniform(&mut rng)
}

pub fn run_campaign_job(
    spec: &MultistartSpec,
    problem: &QuadraticProblem,
    algorithm: Algorithm,
    objective_seed: u64,
    start_seed: u64,
) -> Result<CampaignRun> {
    let x0 = start_point(problem, start_seed);
    let result = run(problem, x0, &spec.solver_config(algorithm, start_seed))?;
    Ok(CampaignRun { algorithm, objective_seed, start_seed, result })
}

/// Aggregates finished runs per algorithm on the campaign's tick grid.
///
/// The gap reference of each objective is the best value reached by any run on
/// it, minus [`MULTISTART_GAP_OFFSET`].
pub fn aggregate_campaign(spec: &MultistartSpec, runs: &[CampaignRun]) -> Vec<AggregateTrajectory> {
    let reference = |objective: u64| {
        gap_reference(
            runs.iter()
                .filter(|r| r.objective_seed == objective)
                .flat_map(|r| r.result.trajectory.iter().map(|row| row.f)),
            MULTISTART_GAP_OFFSET,
        )
    };
    let references: Vec<(u64, f64)> = spec.objective_seeds.iter().map(|&o| (o, reference(o))).collect();
    let step = spec.tick_size();
    let last_tick = match spec.axis {
        Axis::GradEvals => spec.budget,
        Axis::BlockUpdates => runs
            .iter()
            .filter_map(|r| r.result.trajectory.last().map(|row| row.block_updates))
            .max()
            .unwrap_or(0),
    };
    let ticks: Vec<u64> = (0..=last_tick / step).map(|t| t * step).collect();

    spec.algorithms
        .iter()
        .map(|&algorithm| {
            let mut mine: Vec<&CampaignRun> = runs.iter().filter(|r| r.algorithm == algorithm).collect();
            mine.sort_by_key(|r| (r.objective_seed, r.start_seed));
            let points = ticks
                .iter()
                .map(|&tick| {
                    let mut gaps = Vec::with_capacity(mine.len());
                    let mut l0s = Vec::with_capacity(mine.len());
                    for r in &mine {
                        let f_ref = references
                            .iter()
                            .find(|(o, _)| *o == r.objective_seed)
                            .map_or(f64::NAN, |p| p.1);
                        let row = row_at(&r.result.trajectory, spec.axis, tick);
                        gaps.push(row.f - f_ref);
                        l0s.push(row.l0 as f64);
                    }
                    let (mean_gap, std_gap) = mean_std(&gaps);
                    let (mean_l0, std_l0) = mean_std(&l0s);
                    AggregatePoint { tick, mean_gap, std_gap, mean_l0, std_l0 }
                })
                .collect();
            AggregateTrajectory { algorithm_id: algorithm.id().into(), points }
        })
        .collect()
}

/// Last row whose axis value does not exceed `tick`.
fn row_at(trajectory: &[TrajectoryRow], axis: Axis, tick: u64) -> &TrajectoryRow {
    let idx = trajectory.partition_point(|r| axis.value(r) <= tick);
    &trajectory[idx.saturating_sub(1)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartOutcome {
    pub runs: Vec<CampaignRun>,
    pub aggregates: Vec<AggregateTrajectory>,
}

/// Runs every `(objective seed, start seed)` pair for every algorithm, one
/// after another, and aggregates.
pub fn multistart_run(spec: &MultistartSpec) -> Result<MultistartOutcome> {
    spec.validate()?;
    let mut problems = Vec::new();
    for &o in &spec.objective_seeds {
        problems.push((o, crate::problems::gen_multistqp(spec.l, spec.m, o)?));
    }
    let mut runs = Vec::new();
    for (a, o, s) in spec.jobs() {
        let problem = &problems.iter().find(|p| p.0 == o).expect("generated above").1;
        runs.push(run_campaign_job(spec, problem, a, o, s)?);
    }
    let aggregates = aggregate_campaign(spec, &runs);
    Ok(MultistartOutcome { runs, aggregates })
}

/// One basin-hopping run of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct MbhCampaignRun {
    pub algorithm: Algorithm,
    pub objective_seed: u64,
    pub run_seed: u64,
    pub result: MbhResult,
}

/// Aggregates incumbent trajectories with the tick equal to the hop index.
/// The gap reference per objective is the best incumbent minus [`MBH_GAP_OFFSET`].
pub fn aggregate_mbh(algorithms: &[Algorithm], runs: &[MbhCampaignRun]) -> Vec<AggregateTrajectory> {
    let mut objectives: Vec<u64> = runs.iter().map(|r| r.objective_seed).collect();
    objectives.sort_unstable();
    objectives.dedup();
    let references: Vec<(u64, f64)> = objectives
        .iter()
        .map(|&o| {
            let best = runs
                .iter()
                .filter(|r| r.objective_seed == o)
                .flat_map(|r| r.result.incumbents.iter().copied());
            (o, gap_reference(best, MBH_GAP_OFFSET))
        })
        .collect();
    algorithms
        .iter()
        .map(|&algorithm| {
            let mut mine: Vec<&MbhCampaignRun> = runs.iter().filter(|r| r.algorithm == algorithm).collect();
            mine.sort_by_key(|r| (r.objective_seed, r.run_seed));
            let len = mine.iter().map(|r| r.result.incumbents.len()).min().unwrap_or(0);
            let points = (0..len)
                .map(|i| {
                    let gaps: Vec<f64> = mine
                        .iter()
                        .map(|r| {
                            let f_ref = references.iter().find(|p| p.0 == r.objective_seed).map_or(f64::NAN, |p| p.1);
                            r.result.incumbents[i] - f_ref
                        })
                        .collect();
                    let l0s: Vec<f64> = mine.iter().map(|r| r.result.incumbent_l0[i] as f64).collect();
                    let (mean_gap, std_gap) = mean_std(&gaps);
                    let (mean_l0, std_l0) = mean_std(&l0s);
                    AggregatePoint { tick: i as u64, mean_gap, std_gap, mean_l0, std_l0 }
                })
                .collect();
            AggregateTrajectory { algorithm_id: algorithm.id().into(), points }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gen_multistqp;
    use alloc::vec;

    #[test]
    fn perturb_extremes() {
        let p = gen_multistqp(5, 3, 1).unwrap();
        let domain = ProductSimplexDomain::new(p.layout().clone());
        let x = domain.barycenter();
        let mut rng = Stream::new(4);
        assert_eq!(perturb(&x, 0.0, &mut rng), x);

        let mut a = Stream::new(4);
        let mut b = Stream::new(4);
        let y = domain.sample_uniform(&mut a);
        let z = perturb(&x, 1.0, &mut b);
        for (u, v) in y.as_slice().iter().zip(z.as_slice()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn perturb_scales_distance() {
        let p = gen_multistqp(5, 3, 1).unwrap();
        let domain = ProductSimplexDomain::new(p.layout().clone());
        let mut rng = Stream::new(10);
        let x = domain.sample_uniform(&mut rng);
        let mut a = Stream::new(77);
        let mut b = Stream::new(77);
        let y = domain.sample_uniform(&mut a);
        let z = perturb(&x, 0.25, &mut b);
        assert!(domain.contains(&z));
        let d_yx: f64 = y.as_slice().iter().zip(x.as_slice()).map(|(u, v)| (u - v) * (u - v)).sum();
        let d_zx: f64 = z.as_slice().iter().zip(x.as_slice()).map(|(u, v)| (u - v) * (u - v)).sum();
        assert!((libm::sqrt(d_zx) - 0.25 * libm::sqrt(d_yx)).abs() < 1e-14);
    }

    #[test]
    fn gap_references() {
        assert_eq!(gap_reference([3.0, -1.0, 2.0], 1e-1), -1.1);
        assert_eq!(gap_reference([0.5], MULTISTART_GAP_OFFSET), 0.5 - 1e-5);
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[0.1, 0.1, 0.1]).1, 0.0);
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        let (m, _) = mean_std(&[0.1; 3]);
        assert_eq!(m, 0.1);
    }

    #[test]
    fn mbh_single_call() {
        let p = gen_multistqp(5, 3, 2).unwrap();
        let mut cfg = MbhConfig::new(Algorithm::PafwSsc.config(), 3);
        cfg.i_max = 0;
        let r = mbh_run(&p, &cfg).unwrap();
        assert_eq!(r.lo_calls, 1);
        assert_eq!(r.incumbents.len(), 1);
        assert_eq!(r.incumbents[0], r.local_values[0].min(r.incumbents[0]));
    }

    #[test]
    fn mbh_incumbents_never_increase() {
        let p = gen_multistqp(6, 4, 9).unwrap();
        for alg in [Algorithm::Bcfw, Algorithm::BcafwSsc, Algorithm::PafwSsc] {
            let r = mbh_run(&p, &MbhConfig::new(alg.config(), 5)).unwrap();
            assert_eq!(r.lo_calls, DEFAULT_I_MAX + 1);
            assert_eq!(r.local_values.len(), DEFAULT_I_MAX + 1);
            assert!(r.incumbents.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(r.best_f(), p.eval_f(&r.best_point).unwrap());
        }
    }

    #[test]
    fn mbh_rejects_bad_gamma() {
        let p = gen_multistqp(5, 2, 2).unwrap();
        let mut cfg = MbhConfig::new(SolverConfig::default(), 1);
        cfg.gamma = 0.0;
        assert!(mbh_run(&p, &cfg).is_err());
    }

    #[test]
    fn single_run_campaign_has_zero_spread() {
        let spec = MultistartSpec::new(5, 3, vec![1], vec![2], vec![Algorithm::PafwSsc], 30);
        let out = multistart_run(&spec).unwrap();
        let agg = &out.aggregates[0];
        assert_eq!(agg.points.len(), 11);
        for p in &agg.points {
            assert_eq!(p.std_gap, 0.0);
            assert_eq!(p.std_l0, 0.0);
            assert!(p.mean_gap >= MULTISTART_GAP_OFFSET - 1e-12);
        }
    }
}
