//! Outer block-coordinate loop.
//!
//! Each outer iteration evaluates the full gradient once, stops if the
//! largest block FW gap is below tolerance, chooses blocks (all of them, the
//! Gauss-Southwell winner, or one uniformly at random) and replaces each
//! chosen block by the endpoint of a short step chain. Unchosen blocks are
//! copied unchanged.
//!
//! Gradient accounting charges one block gradient per chain run: `m` per
//! iteration for parallel and Gauss-Southwell selection, one for random
//! selection.

use alloc::vec;
use alloc::vec::Vec;

use crate::blockvec::{dot, BlockVector};
use crate::directions::{block_fw_gap, fw_direction, Method};
use crate::domain::{ProductSimplexDomain, TOL_SUPP};
use crate::problems::QuadraticProblem;
use crate::rng::{Label, Stream};
use crate::ssc::{ssc_run, SscConfig, SscStep, SscTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Parallel,
    GaussSouthwell,
    Random,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Parallel => "PARALLEL",
            Strategy::GaussSouthwell => "GS",
            Strategy::Random => "RANDOM",
        }
    }
}

/// The named algorithm variants compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Random block, one short FW step, no chain.
    Bcfw,
    /// Random block, AFW chain.
    BcafwSsc,
    /// All blocks, AFW chains.
    PafwSsc,
    /// Gauss-Southwell block, AFW chains.
    GsafwSsc,
    /// All blocks, pairwise chains.
    PfwSsc,
    /// All blocks, face-direction chains.
    FdfwSsc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Bcfw,
        Algorithm::BcafwSsc,
        Algorithm::PafwSsc,
        Algorithm::GsafwSsc,
        Algorithm::PfwSsc,
        Algorithm::FdfwSsc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Bcfw => "bcfw",
            Algorithm::BcafwSsc => "bcafw-ssc",
            Algorithm::PafwSsc => "pafw-ssc",
            Algorithm::GsafwSsc => "gsafw-ssc",
            Algorithm::PfwSsc => "pfw-ssc",
            Algorithm::FdfwSsc => "fdfw-ssc",
        }
    }

    pub fn parse(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn strategy(self) -> Strategy {
        match self {
            Algorithm::Bcfw | Algorithm::BcafwSsc => Strategy::Random,
            Algorithm::GsafwSsc => Strategy::GaussSouthwell,
            Algorithm::PafwSsc | Algorithm::PfwSsc | Algorithm::FdfwSsc => Strategy::Parallel,
        }
    }

    pub fn method(self) -> Method {
        match self {
            Algorithm::Bcfw => Method::Fw,
            Algorithm::PfwSsc => Method::Pfw,
            Algorithm::FdfwSsc => Method::Fdfw,
            _ => Method::Afw,
        }
    }

    pub fn use_ssc(self) -> bool {
        self != Algorithm::Bcfw
    }

    pub fn config(self) -> SolverConfig {
        SolverConfig {
            strategy: self.strategy(),
            method: self.method(),
            use_ssc: self.use_ssc(),
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub strategy: Strategy,
    pub method: Method,
    /// Without the chain each chosen block takes one FW step of size
    /// `min(1, <g, d> / (L ||d||²))`.
    pub use_ssc: bool,
    /// Stop when the largest block FW gap is at or below this.
    pub tol: f64,
    pub max_iter: usize,
    pub max_grad_evals: Option<u64>,
    /// Seed of the block-selection stream.
    pub seed: u64,
    pub ssc: SscConfig,
    /// Keep the per-step log of committed chains.
    pub record_ssc: bool,
    /// Check the sufficient-decrease inequality at every chain iterate.
    pub check_descent: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Parallel,
            method: Method::Afw,
            use_ssc: true,
            tol: 1e-6,
            max_iter: 100_000,
            max_grad_evals: None,
            seed: 0,
            ssc: SscConfig::default(),
            record_ssc: false,
            check_descent: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.max_grad_evals == Some(0) {
            return Err(Error::InvalidParameter("budgets must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be nonnegative"));
        }
        Ok(())
    }
}

/// Source of wall-clock time for the trajectory; the core has no clock.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Always reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunTermination {
    Stationary,
    Budget,
    MaxIterations,
}

impl RunTermination {
    pub fn as_str(self) -> &'static str {
        match self {
            RunTermination::Stationary => "STATIONARY",
            RunTermination::Budget => "BUDGET",
            RunTermination::MaxIterations => "MAX_ITER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub grad_evals: u64,
    pub block_updates: u64,
    pub f: f64,
    pub max_gap: f64,
    pub l0: usize,
    pub elapsed_ms: f64,
}

/// Support of a full point as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportBits(Vec<u64>);

impl SupportBits {
    pub fn of(x: &[f64]) -> Self {
        let mut words = vec![0u64; x.len().div_ceil(64)];
        for (j, &v) in x.iter().enumerate() {
            if v > TOL_SUPP {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        Self(words)
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0[j / 64] >> (j % 64) & 1 == 1
    }
}

/// One step of a committed chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SscRecord {
    pub k: usize,
    pub block: usize,
    pub j: usize,
    pub step: SscStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// One row per visited iterate `x_0, x_1, ...`, including the final one.
    pub trajectory: Vec<TrajectoryRow>,
    pub supports: Vec<SupportBits>,
    pub final_point: BlockVector,
    pub termination: RunTermination,
    pub ssc_log: Vec<SscRecord>,
    /// Chains stopped by the length cap.
    pub ssc_cap_hits: usize,
    /// Largest `f(y) - f(x) + L/2 ||x - y||²` over checked chain iterates
    /// (negative infinity when nothing was checked).
    pub max_descent_slack: f64,
}

impl RunResult {
    pub fn final_f(&self) -> f64 {
        self.trajectory.last().expect("trajectory has the starting row").f
    }

    pub fn iterations(&self) -> usize {
        self.trajectory.last().map_or(0, |r| r.k)
    }

    pub fn grad_evals(&self) -> u64 {
        self.trajectory.last().map_or(0, |r| r.grad_evals)
    }

    /// Largest increase of `f` between consecutive iterates (≤ 0 when monotone).
    pub fn max_increase(&self) -> f64 {
        self.trajectory
            .windows(2)
            .map(|w| w[1].f - w[0].f)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub enum StepOutcome {
    Continue,
    Stop(RunTermination),
}

/// Mutable state of one run.
pub struct Solver<'a, C: Clock = NoClock> {
    problem: &'a QuadraticProblem,
    config: SolverConfig,
    clock: C,
    x: BlockVector,
    k: usize,
    grad_evals: u64,
    block_updates: u64,
    rng: Stream,
    result_rows: Vec<TrajectoryRow>,
    supports: Vec<SupportBits>,
    ssc_log: Vec<SscRecord>,
    ssc_cap_hits: usize,
    max_descent_slack: f64,
}

impl<'a> Solver<'a, NoClock> {
    pub fn new(problem: &'a QuadraticProblem, x0: BlockVector, config: SolverConfig) -> Result<Self> {
        Self::with_clock(problem, x0, config, NoClock)
    }
}

impl<'a, C: Clock> Solver<'a, C> {
    pub fn with_clock(problem: &'a QuadraticProblem, x0: BlockVector, config: SolverConfig, clock: C) -> Result<Self> {
        config.validate()?;
        if x0.layout() != problem.layout() {
            return Err(Error::LayoutMismatch);
        }
        if !ProductSimplexDomain::new(problem.layout().clone()).contains(&x0) {
            return Err(Error::Infeasible);
        }
        let rng = Stream::with_label(config.seed, Label::Selection);
        Ok(Self {
            problem,
            config,
            clock,
            x: x0,
            k: 0,
            grad_evals: 0,
            block_updates: 0,
            rng,
            result_rows: Vec::new(),
            supports: Vec::new(),
            ssc_log: Vec::new(),
            ssc_cap_hits: 0,
            max_descent_slack: f64::NEG_INFINITY,
        })
    }

    pub fn point(&self) -> &BlockVector {
        &self.x
    }

    pub fn grad_evals(&self) -> u64 {
        self.grad_evals
    }

    pub fn block_updates(&self) -> u64 {
        self.block_updates
    }

    /// Evaluates `x_k`, records it, and either stops or moves to `x_{k+1}`.
    pub fn outer_step(&mut self) -> Result<StepOutcome> {
        let (f, grad) = self.problem.eval_f_grad(&self.x)?;
        let g = BlockVector::new(
            grad.layout().clone(),
            grad.as_slice().iter().map(|v| -v).collect(),
        )?;
        let m = self.x.layout().num_blocks();
        let max_gap = (0..m)
            .map(|i| block_fw_gap(self.x.block(i), g.block(i)))
            .fold(0.0, f64::max);
        let support = SupportBits::of(self.x.as_slice());
        self.result_rows.push(TrajectoryRow {
            k: self.k,
            grad_evals: self.grad_evals,
            block_updates: self.block_updates,
            f,
            max_gap,
            l0: support.count(),
            elapsed_ms: self.clock.elapsed_ms(),
        });
        self.supports.push(support);

        if max_gap <= self.config.tol {
            return Ok(StepOutcome::Stop(RunTermination::Stationary));
        }
        if self.k >= self.config.max_iter {
            return Ok(StepOutcome::Stop(RunTermination::MaxIterations));
        }
        let cost = match self.config.strategy {
            Strategy::Parallel | Strategy::GaussSouthwell => m as u64,
            Strategy::Random => 1,
        };
        if let Some(budget) = self.config.max_grad_evals {
            if self.grad_evals + cost > budget {
                return Ok(StepOutcome::Stop(RunTermination::Budget));
            }
        }

        let updates: Vec<(usize, BlockUpdate)> = match self.config.strategy {
            Strategy::Parallel => (0..m)
                .map(|i| Ok((i, self.update_block(i, &g)?)))
                .collect::<Result<_>>()?,
            Strategy::Random => {
                let i = self.rng.index(m);
                vec![(i, self.update_block(i, &g)?)]
            }
            Strategy::GaussSouthwell => {
                let (winner, update) = self.gauss_southwell(&g)?;
                vec![(winner, update)]
            }
        };
        self.grad_evals += cost;

        for (i, update) in &updates {
            if let Some(trace) = &update.trace {
                if trace.hit_cap() {
                    self.ssc_cap_hits += 1;
                }
                if self.config.check_descent {
                    self.check_descent(f, &grad, *i, trace);
                }
                if self.config.record_ssc {
                    for (j, step) in trace.steps.iter().enumerate() {
                        self.ssc_log.push(SscRecord { k: self.k, block: *i, j, step: *step });
                    }
                }
            }
        }
        for (i, update) in updates {
            if self.x.block(i) != update.endpoint.as_slice() {
                self.block_updates += 1;
                self.x.block_mut(i).copy_from_slice(&update.endpoint);
            }
        }
        self.k += 1;
        Ok(StepOutcome::Continue)
    }

    /// Runs chains on every block and keeps the one with the largest
    /// `<g_i, y_i - x_i>` (lowest index on ties).
    fn gauss_southwell(&mut self, g: &BlockVector) -> Result<(usize, BlockUpdate)> {
        let m = self.x.layout().num_blocks();
        let mut best: Option<(usize, f64, BlockUpdate)> = None;
        for i in 0..m {
            let update = self.update_block(i, g)?;
            let score = update.gain;
            if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
                best = Some((i, score, update));
            }
        }
        let (i, _, update) = best.expect("at least one block");
        Ok((i, update))
    }

    fn update_block(&self, i: usize, g: &BlockVector) -> Result<BlockUpdate> {
        let x_i = self.x.block(i);
        let g_i = g.block(i);
        let lipschitz = self.problem.lipschitz();
        if self.config.use_ssc {
            let mut ssc = self.config.ssc;
            ssc.keep_iterates |= self.config.check_descent;
            let trace = ssc_run(x_i, g_i, self.config.method, lipschitz, &ssc)?;
            Ok(BlockUpdate { endpoint: trace.endpoint().to_vec(), gain: trace.linear_gain(), trace: Some(trace) })
        } else {
            let d = fw_direction(x_i, g_i);
            let mut y = x_i.to_vec();
            let mut gain = 0.0;
            if !d.is_zero() {
                let len2 = dot(&d.d, &d.d);
                let gamma = (d.slope / (lipschitz * len2)).min(1.0);
                d.apply(&mut y, gamma);
                gain = gamma * d.slope;
            }
            Ok(BlockUpdate { endpoint: y, gain, trace: None })
        }
    }

    fn check_descent(&mut self, f: f64, grad: &BlockVector, i: usize, trace: &SscTrace) {
        let lipschitz = self.problem.lipschitz();
        let x_i = self.x.block(i);
        for y in &trace.iterates {
            let fy = self.problem.eval_f_block_replaced(f, grad, &self.x, i, y);
            let dist2: f64 = x_i.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            let slack = fy - (f - 0.5 * lipschitz * dist2);
            self.max_descent_slack = self.max_descent_slack.max(slack);
        }
    }

    pub fn finish(self, termination: RunTermination) -> RunResult {
        RunResult {
            trajectory: self.result_rows,
            supports: self.supports,
            final_point: self.x,
            termination,
            ssc_log: self.ssc_log,
            ssc_cap_hits: self.ssc_cap_hits,
            max_descent_slack: self.max_descent_slack,
        }
    }

    pub fn run_to_end(mut self) -> Result<RunResult> {
        loop {
            if let StepOutcome::Stop(reason) = self.outer_step()? {
                return Ok(self.finish(reason));
            }
        }
    }
}

struct BlockUpdate {
    endpoint: Vec<f64>,
    /// `<g_i, endpoint - x_i>`.
    gain: f64,
    trace: Option<SscTrace>,
}

/// Runs the outer loop from `x0` until stationarity, budget, or iteration cap.
pub fn run(problem: &QuadraticProblem, x0: BlockVector, config: &SolverConfig) -> Result<RunResult> {
    Solver::new(problem, x0, config.clone())?.run_to_end()
}

pub fn run_with_clock<C: Clock>(
    problem: &QuadraticProblem,
    x0: BlockVector,
    config: &SolverConfig,
    clock: C,
) -> Result<RunResult> {
    Solver::with_clock(problem, x0, config.clone(), clock)?.run_to_end()
}
