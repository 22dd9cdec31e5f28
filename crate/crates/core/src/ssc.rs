//! Short step chain.
//!
//! With the gradient frozen at the anchor `x̄`, the chain applies a direction
//! method to the linearized objective `<g, y>` and stops as soon as a step is
//! cut short by the trust region
//!
//! ```text
//! Ω_j = B(x̄ + g / 2L, ||g|| / 2L) ∩ B(x̄, <g, d̂_j> / L)
//! ```
//!
//! Membership of every chain iterate in the first ball is what yields the
//! sufficient decrease `f(y) <= f(x̄) - L/2 ||y - x̄||²`. Steps that hit the
//! boundary of the simplex first are taken in full and the chain continues
//! without a new gradient.

use alloc::vec::Vec;

use crate::blockvec::{dot, norm};
use crate::directions::{Direction, DirectionKind, Method};
use crate::Result;

/// Slack on ball membership.
pub const BALL_TOL: f64 = 1e-9;

/// Largest `alpha >= 0` with `||y + alpha u - c|| <= r` for a unit vector `u`.
/// Returns 0 when `y` is outside the ball by more than [`BALL_TOL`] or the
/// line misses it.
pub fn ball_exit_step(y: &[f64], center: &[f64], radius: f64, u: &[f64]) -> f64 {
    let mut b = 0.0;
    let mut w2 = 0.0;
    for ((&yj, &cj), &uj) in y.iter().zip(center).zip(u) {
        let w = yj - cj;
        b += w * uj;
        w2 += w * w;
    }
    if libm::sqrt(w2) > radius + BALL_TOL {
        return 0.0;
    }
    exit_root(b, w2 - radius * radius)
}

/// Larger root of `t^2 + 2 b t + q = 0`, clamped at 0; 0 when there is none.
fn exit_root(b: f64, q: f64) -> f64 {
    let disc = b * b - q;
    if disc < 0.0 {
        return 0.0;
    }
    let s = libm::sqrt(disc);
    let t = if b <= 0.0 { s - b } else { -q / (b + s) };
    t.max(0.0)
}

/// The anchor, frozen negative gradient and Lipschitz constant of one chain.
#[derive(Debug, Clone)]
pub struct TrustRegion<'a> {
    anchor: &'a [f64],
    g: &'a [f64],
    lipschitz: f64,
    center: Vec<f64>,
    radius: f64,
}

impl<'a> TrustRegion<'a> {
    pub fn new(anchor: &'a [f64], g: &'a [f64], lipschitz: f64) -> Self {
        let center = anchor
            .iter()
            .zip(g)
            .map(|(x, gj)| x + gj / (2.0 * lipschitz))
            .collect();
        let radius = norm(g) / (2.0 * lipschitz);
        Self { anchor, g, lipschitz, center, radius }
    }

    pub fn anchor(&self) -> &[f64] {
        self.anchor
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Whether `y` is in the closed big ball, up to [`BALL_TOL`].
    pub fn contains(&self, y: &[f64]) -> bool {
        self.big_excess(y) <= BALL_TOL * (2.0 * self.radius + BALL_TOL)
    }

    /// `||y - c||^2 - r^2` for the big ball, written relative to the anchor:
    /// `||e||^2 - <e, g>/L` with `e = y - x̄`. Near the anchor this avoids
    /// subtracting two numbers of size `r^2`.
    fn big_excess(&self, y: &[f64]) -> f64 {
        let (mut ee, mut eg) = (0.0, 0.0);
        for ((&yj, &aj), &gj) in y.iter().zip(self.anchor).zip(self.g) {
            let e = yj - aj;
            ee += e * e;
            eg += e * gj;
        }
        ee - eg / self.lipschitz
    }

    /// Exit step from the big ball along the unit vector `u`.
    fn big_exit(&self, y: &[f64], u: &[f64]) -> f64 {
        let q = self.big_excess(y);
        if q > BALL_TOL * (2.0 * self.radius + BALL_TOL) {
            return 0.0;
        }
        let mut b = 0.0;
        for (((&yj, &aj), &gj), &uj) in y.iter().zip(self.anchor).zip(self.g).zip(u) {
            b += (yj - aj - gj / (2.0 * self.lipschitz)) * uj;
        }
        exit_root(b, q)
    }

    /// Auxiliary stepsize `beta` for `d` at `y`, on the scale of the stored
    /// (unnormalized) `d`.
    pub fn auxiliary_stepsize(&self, y: &[f64], d: &Direction) -> f64 {
        let len = d.norm();
        if d.is_zero() || len == 0.0 {
            return 0.0;
        }
        let unit: Vec<f64> = d.d.iter().map(|v| v / len).collect();
        let small_radius = dot(self.g, &unit) / self.lipschitz;
        let big = self.big_exit(y, &unit);
        let small = if small_radius > 0.0 {
            ball_exit_step(y, self.anchor, small_radius, &unit)
        } else {
            0.0
        };
        big.min(small) / len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The method found no ascent direction for `<g, .>`.
    ZeroDirection,
    /// The last step was cut by the trust region.
    BetaStep,
    /// Safety cap on the chain length.
    IterCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ZeroDirection => "ZERO_DIRECTION",
            Termination::BetaStep => "BETA_STEP",
            Termination::IterCap => "ITER_CAP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SscStep {
    pub kind: DirectionKind,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_max: f64,
    pub unit_slope: f64,
    /// `<g, d>` for the unnormalized direction.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SscTrace {
    /// `y_0 = x̄, y_1, ..., y_T`.
    pub iterates: Vec<Vec<f64>>,
    pub steps: Vec<SscStep>,
    pub termination: Termination,
}

impl SscTrace {
    pub fn endpoint(&self) -> &[f64] {
        self.iterates.last().expect("a chain has at least its anchor")
    }

    /// `<g, y_T - x̄>` accumulated step by step, free of the cancellation in
    /// differencing the endpoint against the anchor.
    pub fn linear_gain(&self) -> f64 {
        self.steps.iter().map(|s| s.alpha * s.slope).sum()
    }

    /// True when the chain stopped at the iteration cap.
    pub fn hit_cap(&self) -> bool {
        self.termination == Termination::IterCap
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SscConfig {
    /// Chain length cap as a multiple of the block size.
    pub cap_per_coordinate: usize,
    /// Keep every iterate in the trace, not only the endpoint.
    pub keep_iterates: bool,
}

impl Default for SscConfig {
    fn default() -> Self {
        Self { cap_per_coordinate: 10, keep_iterates: false }
    }
}

/// Runs the chain from `anchor` with frozen negative gradient `g`.
pub fn ssc_run(
    anchor: &[f64],
    g: &[f64],
    method: Method,
    lipschitz: f64,
    config: &SscConfig,
) -> Result<SscTrace> {
    let tr = TrustRegion::new(anchor, g, lipschitz);
    let cap = config.cap_per_coordinate.max(1) * anchor.len();
    let mut y = anchor.to_vec();
    let mut iterates = Vec::new();
    iterates.push(y.clone());
    let mut steps = Vec::new();

    for _ in 0..cap {
        let d = method.select(&y, g)?;
        if d.is_zero() {
            return Ok(finish(iterates, y, steps, Termination::ZeroDirection, config));
        }
        let beta = tr.auxiliary_stepsize(&y, &d);
        let alpha = d.alpha_max.min(beta);
        d.apply(&mut y, alpha);
        steps.push(SscStep {
            kind: d.kind,
            alpha,
            beta,
            alpha_max: d.alpha_max,
            unit_slope: d.unit_slope(),
            slope: d.slope,
        });
        if config.keep_iterates {
            iterates.push(y.clone());
        }
        if alpha == beta {
            return Ok(finish(iterates, y, steps, Termination::BetaStep, config));
        }
    }
    Ok(finish(iterates, y, steps, Termination::IterCap, config))
}

fn finish(
    mut iterates: Vec<Vec<f64>>,
    y: Vec<f64>,
    steps: Vec<SscStep>,
    termination: Termination,
    config: &SscConfig,
) -> SscTrace {
    if !config.keep_iterates && !steps.is_empty() {
        iterates.push(y);
    }
    SscTrace { iterates, steps, termination }
}
