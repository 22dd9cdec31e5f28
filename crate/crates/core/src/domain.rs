//! Geometry of the standard simplex and of products of simplices.
//!
//! On a simplex the atoms are the standard basis vectors, so the active set of
//! a point is its support and the convex weights are the coordinates
//! themselves. All oracles break ties toward the lowest index.

use alloc::vec;
use alloc::vec::Vec;

use crate::blockvec::{BlockLayout, BlockVector};
use crate::rng::Stream;
use crate::{Error, Result};

/// Membership tolerance for nonnegativity and block sums.
pub const TOL_FEAS: f64 = 1e-9;
/// Coordinates above this value are in the support.
pub const TOL_SUPP: f64 = 1e-10;

/// Index of a largest entry of `g` (the simplex vertex maximizing `<g, .>`).
pub fn lmo_block(g: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in g.iter().enumerate().skip(1) {
        if v > g[best] {
            best = j;
        }
    }
    best
}

/// Index minimizing `g` over the support of `x` (the away vertex).
pub fn away_vertex_block(x: &[f64], g: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (j, (&xj, &gj)) in x.iter().zip(g).enumerate() {
        if xj > TOL_SUPP && best.is_none_or(|b| gj < g[b]) {
            best = Some(j);
        }
    }
    best.ok_or(Error::EmptySupport)
}

/// Largest `alpha >= 0` keeping `x + alpha d` nonnegative; `+inf` if `d >= 0`.
///
/// `d` must sum to zero (within `TOL_FEAS`) so the step stays on the block's affine hull.
pub fn max_feasible_step_block(x: &[f64], d: &[f64]) -> Result<f64> {
    let sum: f64 = d.iter().sum();
    if !(sum.abs() <= TOL_FEAS) {
        return Err(Error::LeavesAffineHull { sum });
    }
    let mut alpha = f64::INFINITY;
    for (&xj, &dj) in x.iter().zip(d) {
        if dj < 0.0 {
            alpha = alpha.min(xj.max(0.0) / -dj);
        }
    }
    Ok(alpha)
}

/// Euclidean projection of `g` onto the tangent cone of the simplex at `x`,
/// `{d : sum d = 0, d_j >= 0 for j outside supp(x)}`.
///
/// Solved by shifting `g` by a scalar over a working set and clipping the
/// off-support entries that go negative. The shift only grows, so clipped
/// entries stay clipped and the loop ends after at most `n` passes.
pub fn project_tangent_cone_block(x: &[f64], g: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut free = vec![true; n];
    loop {
        let (sum, count) = free
            .iter()
            .zip(g)
            .filter(|(f, _)| **f)
            .fold((0.0, 0usize), |(s, c), (_, &gj)| (s + gj, c + 1));
        if count == 0 {
            return vec![0.0; n];
        }
        let shift = sum / count as f64;
        let mut clipped_any = false;
        for j in 0..n {
            if free[j] && x[j] <= TOL_SUPP && g[j] - shift < 0.0 {
                free[j] = false;
                clipped_any = true;
            }
        }
        if !clipped_any {
            return (0..n).map(|j| if free[j] { g[j] - shift } else { 0.0 }).collect();
        }
    }
}

/// Uniform sample on the simplex from normalized standard exponentials.
pub fn sample_uniform_block(n: usize, rng: &mut Stream) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut y: Vec<f64> = (0..n).map(|_| rng.exponential()).collect();
    let total: f64 = y.iter().sum();
    for v in &mut y {
        *v /= total;
    }
    y
}

/// Zeroes coordinates in `(-TOL_FEAS, 0)` and rescales the block to sum one.
pub fn clamp_block(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 && *v > -TOL_FEAS {
            *v = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    if total > 0.0 && total != 1.0 {
        for v in x.iter_mut() {
            *v /= total;
        }
    }
}

pub fn block_is_feasible(x: &[f64]) -> bool {
    let sum: f64 = x.iter().sum();
    x.iter().all(|&v| v >= -TOL_FEAS) && (sum - 1.0).abs() <= TOL_FEAS
}

/// Support of each block, as sorted index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    blocks: Vec<Vec<usize>>,
}

impl SupportSet {
    pub fn of(x: &BlockVector) -> Self {
        let layout = x.layout();
        let blocks = (0..layout.num_blocks())
            .map(|i| block_support(x.block(i)))
            .collect();
        Self { blocks }
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    /// Number of supported coordinates (the l0 norm).
    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn block_support(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v > TOL_SUPP)
        .map(|(j, _)| j)
        .collect()
}

/// The feasible set `Delta^{n_1} x ... x Delta^{n_m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSimplexDomain {
    layout: BlockLayout,
}

impl ProductSimplexDomain {
    pub fn new(layout: BlockLayout) -> Self {
        Self { layout }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn contains(&self, x: &BlockVector) -> bool {
        x.layout() == &self.layout
            && (0..self.layout.num_blocks()).all(|i| block_is_feasible(x.block(i)))
    }

    /// The point whose blocks are all barycenters.
    pub fn barycenter(&self) -> BlockVector {
        let mut x = BlockVector::zeros(self.layout.clone());
        for i in 0..self.layout.num_blocks() {
            let b = x.block_mut(i);
            let w = 1.0 / b.len() as f64;
            b.fill(w);
        }
        x
    }

    pub fn sample_uniform(&self, rng: &mut Stream) -> BlockVector {
        let mut x = BlockVector::zeros(self.layout.clone());
        for i in 0..self.layout.num_blocks() {
            let y = sample_uniform_block(self.layout.block_size(i), rng);
            x.block_mut(i).copy_from_slice(&y);
        }
        x
    }

    /// Norm of the projection of `g` onto the tangent cone at `x`, squared,
    /// summed over blocks.
    pub fn stationarity_norm_squared(&self, x: &BlockVector, g: &BlockVector) -> f64 {
        (0..self.layout.num_blocks())
            .map(|i| {
                let p = project_tangent_cone_block(x.block(i), g.block(i));
                p.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lmo_picks_max_with_lowest_index_ties() {
        assert_eq!(lmo_block(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(lmo_block(&[5.0, 5.0, 1.0]), 0);
    }

    #[test]
    fn away_vertex_examples() {
        assert_eq!(away_vertex_block(&[0.2, 0.5, 0.3], &[1.0, 3.0, 2.0]).unwrap(), 0);
        assert_eq!(away_vertex_block(&[1.0, 0.0, 0.0], &[9.0, -1.0, 0.0]).unwrap(), 0);
        assert_eq!(away_vertex_block(&[0.0, 0.5, 0.5], &[-9.0, 4.0, 4.0]).unwrap(), 1);
        assert_eq!(away_vertex_block(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::EmptySupport));
    }

    #[test]
    fn max_step_examples() {
        let a = max_feasible_step_block(&[0.2, 0.5, 0.3], &[-0.8, 0.5, 0.3]).unwrap();
        assert!((a - 0.25).abs() < 1e-15);
        assert_eq!(max_feasible_step_block(&[0.5, 0.5], &[0.5, -0.5]).unwrap(), 1.0);
        assert_eq!(max_feasible_step_block(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn max_step_rejects_off_hull_direction() {
        assert!(matches!(
            max_feasible_step_block(&[0.5, 0.5], &[0.5, 0.5]),
            Err(Error::LeavesAffineHull { .. })
        ));
    }

    #[test]
    fn projection_interior_subtracts_mean() {
        let p = project_tangent_cone_block(&[0.2, 0.5, 0.3], &[1.0, 3.0, 2.0]);
        assert_eq!(p, vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn projection_at_stationary_vertex_is_zero() {
        // Cone {d1 + d2 = 0, d2 >= 0} at e_1; g = (1, 0) points out of it.
        let p = project_tangent_cone_block(&[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(p, vec![0.0, 0.0]);
        // g = (0, 1) lies on the feasible ray (-t, t): projection (-0.5, 0.5).
        let p = project_tangent_cone_block(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(p, vec![-0.5, 0.5]);
    }

    #[test]
    fn degenerate_simplex_sample() {
        let mut rng = Stream::new(1);
        assert_eq!(sample_uniform_block(1, &mut rng), vec![1.0]);
    }

    #[test]
    fn samples_are_positive_and_normalized() {
        let mut rng = Stream::new(2);
        for _ in 0..1000 {
            let y = sample_uniform_block(6, &mut rng);
            assert!(y.iter().all(|&v| v > 0.0));
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_mean_is_barycenter() {
        let mut rng = Stream::new(5);
        let mut mean = [0.0; 3];
        let draws = 100_000;
        for _ in 0..draws {
            let y = sample_uniform_block(3, &mut rng);
            for j in 0..3 {
                mean[j] += y[j] / draws as f64;
            }
        }
        for m in mean {
            assert!((m - 1.0 / 3.0).abs() < 0.01, "{m}");
        }
    }

    #[test]
    fn clamp_zeroes_tiny_negatives() {
        let mut x = [0.5, -1e-12, 0.5];
        clamp_block(&mut x);
        assert_eq!(x[1], 0.0);
        assert!(block_is_feasible(&x));
    }

    #[test]
    fn support_and_l0() {
        let layout = BlockLayout::new(vec![3, 2]).unwrap();
        let x = BlockVector::new(layout, vec![0.0, 0.4, 0.6, 1.0, 1e-11]).unwrap();
        let s = SupportSet::of(&x);
        assert_eq!(s.block(0), &[1, 2]);
        assert_eq!(s.block(1), &[0]);
        assert_eq!(s.len(), 3);
    }
}
