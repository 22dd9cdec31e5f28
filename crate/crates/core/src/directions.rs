//! Feasible descent directions on one simplex block.
//!
//! Every selector takes the block point `x` and `g`, the negative gradient, and
//! returns a direction `d` with `<g, d> > 0`, or a zero direction when none of
//! its candidates ascends `<g, .>`. Directions keep their natural scale; the
//! unit slope is derived on demand.

use alloc::vec;
use alloc::vec::Vec;

use crate::blockvec::norm;
use crate::domain::{away_vertex_block, clamp_block, lmo_block};
use crate::Result;

/// Directions with norm at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionKind {
    FrankWolfe,
    Away,
    Pairwise,
    InFace,
    Zero,
}

impl DirectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionKind::FrankWolfe => "FW",
            DirectionKind::Away => "AWAY",
            DirectionKind::Pairwise => "PAIRWISE",
            DirectionKind::InFace => "INFACE",
            DirectionKind::Zero => "ZERO",
        }
    }
}

/// The direction rule run inside each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Frank-Wolfe.
    Fw,
    /// Away-step Frank-Wolfe.
    Afw,
    /// Pairwise Frank-Wolfe.
    Pfw,
    /// Face-direction (in-face) Frank-Wolfe.
    Fdfw,
}

impl Method {
    pub fn select(self, x: &[f64], g: &[f64]) -> Result<Direction> {
        match self {
            Method::Fw => Ok(fw_direction(x, g)),
            Method::Afw => afw_direction(x, g),
            Method::Pfw => pairwise_direction(x, g),
            Method::Fdfw => fdfw_direction(x, g),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fw => "FW",
            Method::Afw => "AFW",
            Method::Pfw => "PFW",
            Method::Fdfw => "FDFW",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub kind: DirectionKind,
    pub d: Vec<f64>,
    /// Largest admissible stepsize for this kind of step.
    pub alpha_max: f64,
    /// `<g, d>`.
    pub slope: f64,
    /// Vertex moved toward (FW, pairwise).
    pub toward: Option<usize>,
    /// Vertex moved away from (away, in-face, pairwise).
    pub away: Option<usize>,
}

impl Direction {
    pub fn zero(n: usize) -> Self {
        Self {
            kind: DirectionKind::Zero,
            d: vec![0.0; n],
            alpha_max: 0.0,
            slope: 0.0,
            toward: None,
            away: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == DirectionKind::Zero
    }

    pub fn norm(&self) -> f64 {
        norm(&self.d)
    }

    /// `<g, d / ||d||>`, zero for the zero direction.
    pub fn unit_slope(&self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.slope / n
        } else {
            0.0
        }
    }

    /// Moves `y` to `y + alpha d`. A step of exactly `alpha_max` lands on the
    /// face it was blocked by, with the leaving coordinate set to zero.
    pub fn apply(&self, y: &mut [f64], alpha: f64) {
        if self.is_zero() || alpha == 0.0 {
            return;
        }
        let full = alpha == self.alpha_max;
        match (self.kind, full) {
            (DirectionKind::FrankWolfe, true) => {
                y.fill(0.0);
                y[self.toward.expect("FW direction has a target vertex")] = 1.0;
                return;
            }
            (DirectionKind::Pairwise, true) => {
                let q = self.away.expect("pairwise direction has an away vertex");
                let s = self.toward.expect("pairwise direction has a target vertex");
                y[s] += y[q];
                y[q] = 0.0;
            }
            (DirectionKind::Away | DirectionKind::InFace, true) => {
                let q = self.away.expect("away direction has an away vertex");
                for (v, dv) in y.iter_mut().zip(&self.d) {
                    *v += alpha * dv;
                }
                y[q] = 0.0;
            }
            _ => {
                for (v, dv) in y.iter_mut().zip(&self.d) {
                    *v += alpha * dv;
                }
            }
        }
        clamp_block(y);
    }

    fn finish(mut self) -> Self {
        if !(self.slope > 0.0) || self.norm() <= ZERO_NORM {
            self = Direction::zero(self.d.len());
        }
        self
    }
}

/// Max over vertices of `<g, s>` minus `<g, x>`.
pub fn block_fw_gap(x: &[f64], g: &[f64]) -> f64 {
    fw_slope(x, g, lmo_block(g))
}

/// `<g, e_s - x>` as `sum_j x_j (g_s - g_j)`: every term is nonnegative, so
/// the result is exactly zero when `g` is maximal on the whole support.
fn fw_slope(x: &[f64], g: &[f64], s: usize) -> f64 {
    x.iter().zip(g).map(|(xj, gj)| xj * (g[s] - gj)).sum()
}

/// `<g, x - e_q>` as `sum_j x_j (g_j - g_q)`, exactly zero when `g` is
/// constant on the support.
fn away_slope(x: &[f64], g: &[f64], q: usize) -> f64 {
    x.iter().zip(g).map(|(xj, gj)| xj * (gj - g[q])).sum()
}

/// `d = e_s - x` toward the LMO vertex, capped at unit stepsize.
pub fn fw_direction(x: &[f64], g: &[f64]) -> Direction {
    let s = lmo_block(g);
    let mut d: Vec<f64> = x.iter().map(|v| -v).collect();
    d[s] += 1.0;
    Direction {
        kind: DirectionKind::FrankWolfe,
        slope: fw_slope(x, g, s),
        d,
        alpha_max: 1.0,
        toward: Some(s),
        away: None,
    }
    .finish()
}

/// `d = x - e_q` away from the worst support vertex.
pub fn away_direction(x: &[f64], g: &[f64]) -> Result<Direction> {
    Ok(away_from_support(x, g, DirectionKind::Away)?.finish())
}

fn away_from_support(x: &[f64], g: &[f64], kind: DirectionKind) -> Result<Direction> {
    let q = away_vertex_block(x, g)?;
    let mut d = x.to_vec();
    d[q] -= 1.0;
    let alpha_max = if x[q] < 1.0 { x[q] / (1.0 - x[q]) } else { f64::INFINITY };
    Ok(Direction {
        kind,
        slope: away_slope(x, g, q),
        d,
        alpha_max,
        toward: None,
        away: Some(q),
    })
}

/// `d = e_s - e_q`, moving the weight of the away vertex onto the LMO vertex.
pub fn pairwise_direction(x: &[f64], g: &[f64]) -> Result<Direction> {
    let s = lmo_block(g);
    let q = away_vertex_block(x, g)?;
    if s == q {
        return Ok(Direction::zero(x.len()));
    }
    let mut d = vec![0.0; x.len()];
    d[s] = 1.0;
    d[q] = -1.0;
    Ok(Direction {
        kind: DirectionKind::Pairwise,
        slope: g[s] - g[q],
        d,
        alpha_max: x[q],
        toward: Some(s),
        away: Some(q),
    }
    .finish())
}

/// The better of the FW and away directions; ties go to FW.
pub fn afw_direction(x: &[f64], g: &[f64]) -> Result<Direction> {
    let fw = fw_direction(x, g);
    let away = away_direction(x, g)?;
    Ok(pick(fw, away))
}

/// The better of the FW direction and the in-face direction away from the
/// minimizer of `<g, .>` over the minimal face containing `x`. On a simplex the
/// minimal face is spanned by the support, so its minimizing vertex is the
/// away vertex.
pub fn fdfw_direction(x: &[f64], g: &[f64]) -> Result<Direction> {
    let fw = fw_direction(x, g);
    let face = away_from_support(x, g, DirectionKind::InFace)?.finish();
    Ok(pick(fw, face))
}

fn pick(fw: Direction, other: Direction) -> Direction {
    match (fw.is_zero(), other.is_zero()) {
        (true, true) => fw,
        (false, true) => fw,
        (true, false) => other,
        (false, false) => {
            if other.slope > fw.slope {
                other
            } else {
                fw
            }
        }
    }
}
