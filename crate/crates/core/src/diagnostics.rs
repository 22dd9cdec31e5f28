//! Post-processing of runs: multipliers, strict complementarity, support
//! identification and empirical linear rates.

use alloc::vec::Vec;

use crate::blockvec::{dot, BlockVector};
use crate::domain::TOL_SUPP;
use crate::solver::SupportBits;

/// Default tolerance for multiplier sign and complementarity checks.
pub const MULTIPLIER_TOL: f64 = 1e-6;

/// Per-block Lagrange multipliers `λ_i = ∇f_i - <∇f_i, x_i> 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierVector {
    pub blocks: Vec<Vec<f64>>,
}

impl MultiplierVector {
    pub fn min(&self) -> f64 {
        self.blocks.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn multipliers(x: &BlockVector, grad: &BlockVector) -> MultiplierVector {
    let m = x.layout().num_blocks();
    let blocks = (0..m)
        .map(|i| {
            let gi = grad.block(i);
            let shift = dot(gi, x.block(i));
            gi.iter().map(|v| v - shift).collect()
        })
        .collect();
    MultiplierVector { blocks }
}

/// Per block: every coordinate outside the support has multiplier above `tol`.
pub fn strict_complementarity(x: &BlockVector, grad: &BlockVector, tol: f64) -> Vec<bool> {
    let lambda = multipliers(x, grad);
    (0..x.layout().num_blocks())
        .map(|i| {
            x.block(i)
                .iter()
                .zip(&lambda.blocks[i])
                .all(|(&xj, &lj)| xj > TOL_SUPP || lj > tol)
        })
        .collect()
}

/// First iteration from which the support never changes again, or `None`
/// when the last two snapshots still differ.
pub fn identification_iteration(supports: &[SupportBits]) -> Option<usize> {
    let last = supports.last()?;
    if supports.len() >= 2 && &supports[supports.len() - 2] != last {
        return None;
    }
    let mut k = supports.len() - 1;
    while k > 0 && &supports[k - 1] == last {
        k -= 1;
    }
    Some(k)
}

/// Lower end of the fitting window.
pub const RATE_FLOOR: f64 = 1e-12;
pub const RATE_MIN_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Fitted per-iteration contraction factor.
    pub q_hat: f64,
    pub r_squared: f64,
    /// Number of points used.
    pub points: usize,
}

/// Least-squares fit of `log(gap_k)` against `k`.
///
/// The window keeps gaps in `[1e-12, gap_0 / 10]`. A sequence that never loses
/// a decade is fitted over every gap above the floor. Needs at least ten
/// gaps and three points in the window.
pub fn rate_fit(gaps: &[f64]) -> Option<RateFit> {
    if gaps.len() < RATE_MIN_LEN || !(gaps[0] > 0.0) {
        return None;
    }
    let head = gaps[0] / 10.0;
    let mut window: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| g >= RATE_FLOOR && g <= head)
        .map(|(k, &g)| (k as f64, libm::log(g)))
        .collect();
    if window.len() < 3 && gaps.iter().all(|&g| g > head) {
        window = gaps
            .iter()
            .enumerate()
            .filter(|(_, &g)| g >= RATE_FLOOR)
            .map(|(k, &g)| (k as f64, libm::log(g)))
            .collect();
    }
    if window.len() < 3 {
        return None;
    }
    let n = window.len() as f64;
    let mean_k = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = window.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mean_k) * (p.0 - mean_k)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mean_k) * (p.1 - mean_y)).sum();
    let syy: f64 = window.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(RateFit { q_hat: libm::exp(slope), r_squared, points: window.len() })
}

/// Summary written per run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub k_id: Option<usize>,
    pub final_l0: usize,
    pub strict_complementarity: Vec<bool>,
    pub rate: Option<RateFit>,
}

/// Diagnostics for a finished run: the rate is fitted to `f_k - f_final`.
pub fn diagnose(
    result: &crate::solver::RunResult,
    grad_at_final: &BlockVector,
) -> RunDiagnostics {
    let f_final = result.final_f();
    let gaps: Vec<f64> = result.trajectory.iter().map(|r| r.f - f_final).collect();
    RunDiagnostics {
        k_id: identification_iteration(&result.supports),
        final_l0: result.supports.last().map_or(0, SupportBits::count),
        strict_complementarity: strict_complementarity(&result.final_point, grad_at_final, MULTIPLIER_TOL),
        rate: rate_fit(&gaps),
    }
}
