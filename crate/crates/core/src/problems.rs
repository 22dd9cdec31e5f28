//! Quadratic objectives `f(x) = xᵀQx` and the Multi-StQP generator.

use alloc::vec;
use alloc::vec::Vec;

use crate::blockvec::{dot, BlockLayout, BlockVector};
use crate::rng::{Label, Stream};
use crate::{Error, Result};

/// Floor on the Lipschitz estimate; trust-region radii divide by it.
pub const LIPSCHITZ_FLOOR: f64 = 1e-8;
/// Safety factor applied to the spectral-norm estimate.
pub const LIPSCHITZ_SAFETY: f64 = 1.01;
/// Largest Krylov dimension of the norm estimate.
pub const POWER_ITERATIONS: usize = 200;
const POWER_SEED: u64 = 0x5_eed0_f1ce;

/// Diagonal shift of the clique matrices.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Parameters recorded with a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMeta {
    pub l: usize,
    pub m: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    layout: BlockLayout,
    q: Vec<f64>,
    qs: Vec<f64>,
    lipschitz: f64,
    meta: Option<GeneratorMeta>,
}

impl QuadraticProblem {
    /// `q` is the dense `n x n` matrix in row-major order.
    pub fn new(layout: BlockLayout, q: Vec<f64>) -> Result<Self> {
        let n = layout.total();
        if q.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, found: q.len() });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        let mut qs = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                qs[r * n + c] = 0.5 * (q[r * n + c] + q[c * n + r]);
            }
        }
        let lipschitz = lipschitz_estimate(&qs, n);
        Ok(Self { layout, q, qs, lipschitz, meta: None })
    }

    pub fn with_meta(mut self, meta: GeneratorMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Builds `Q` with `xᵀQx = (x - c)ᵀA(x - c)` on the product of simplices,
    /// folding the linear and constant terms into the diagonal blocks through
    /// `1ᵀx_i = 1`.
    pub fn from_shifted_quadratic(layout: BlockLayout, a: &[f64], center: &[f64]) -> Result<Self> {
        let n = layout.total();
        if a.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, found: a.len() });
        }
        if center.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: center.len() });
        }
        let ac: Vec<f64> = (0..n).map(|r| dot(&a[r * n..(r + 1) * n], center)).collect();
        // (A + Aᵀ) c
        let linear: Vec<f64> = (0..n)
            .map(|r| ac[r] + (0..n).map(|k| a[k * n + r] * center[k]).sum::<f64>())
            .collect();
        let constant = dot(center, &ac);
        let per_block = constant / layout.num_blocks() as f64;
        let mut q = a.to_vec();
        for i in 0..layout.num_blocks() {
            let range = layout.range(i);
            for r in range.clone() {
                for c in range.clone() {
                    q[r * n + c] += -linear[r] + per_block;
                }
            }
        }
        Self::new(layout, q)
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    pub fn symmetric_matrix(&self) -> &[f64] {
        &self.qs
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn meta(&self) -> Option<&GeneratorMeta> {
        self.meta.as_ref()
    }

    /// `Q_s x`.
    pub fn apply_symmetric(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|r| dot(&self.qs[r * n..(r + 1) * n], x)).collect()
    }

    pub fn eval_f(&self, x: &BlockVector) -> Result<f64> {
        self.check(x)?;
        let f = dot(x.as_slice(), &self.apply_symmetric(x.as_slice()));
        finite(f, "objective")
    }

    /// `2 Q_s x`.
    pub fn eval_grad(&self, x: &BlockVector) -> Result<BlockVector> {
        self.check(x)?;
        let g: Vec<f64> = self.apply_symmetric(x.as_slice()).into_iter().map(|v| 2.0 * v).collect();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        BlockVector::new(self.layout.clone(), g)
    }

    /// Objective and gradient from one matrix-vector product.
    pub fn eval_f_grad(&self, x: &BlockVector) -> Result<(f64, BlockVector)> {
        self.check(x)?;
        let qx = self.apply_symmetric(x.as_slice());
        let f = finite(dot(x.as_slice(), &qx), "objective")?;
        let g: Vec<f64> = qx.into_iter().map(|v| 2.0 * v).collect();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok((f, BlockVector::new(self.layout.clone(), g)?))
    }

    /// `f` at `x` with block `i` replaced by `y`, from `f(x)` and `∇f(x)`:
    /// `f(x + Δ) = f(x) + <∇f(x), Δ> + Δᵀ Q_s Δ` with `Δ` supported on block `i`.
    pub fn eval_f_block_replaced(&self, fx: f64, grad: &BlockVector, x: &BlockVector, i: usize, y: &[f64]) -> f64 {
        let n = self.dim();
        let range = self.layout.range(i);
        let delta: Vec<f64> = x.block(i).iter().zip(y).map(|(a, b)| b - a).collect();
        let lin = dot(grad.block(i), &delta);
        let mut quad = 0.0;
        for (a, r) in range.clone().enumerate() {
            let row = &self.qs[r * n + range.start..r * n + range.end];
            quad += delta[a] * dot(row, &delta);
        }
        fx + lin + quad
    }

    fn check(&self, x: &BlockVector) -> Result<()> {
        if x.layout() != &self.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }
}

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `1.01 ||2 Q_s||₂`, floored at [`LIPSCHITZ_FLOOR`].
///
/// The norm is the largest absolute Ritz value of a Lanczos run (full
/// reorthogonalization) from a fixed seeded start vector: the Krylov space of
/// [`POWER_ITERATIONS`] power steps, but exact once the space is invariant and
/// far less sensitive to clustered top eigenvalues. Stops early when the
/// estimate changes by at most `1e-10` relative for three steps in a row.
pub fn lipschitz_estimate(qs: &[f64], n: usize) -> f64 {
    let mut rng = Stream::with_label(POWER_SEED, Label::PowerIteration);
    let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let len = libm::sqrt(dot(&v, &v));
    v.iter_mut().for_each(|x| *x /= len);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut diag: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    let mut estimate = 0.0f64;
    let mut calm = 0;
    for _ in 0..POWER_ITERATIONS.min(n) {
        let mut w: Vec<f64> = (0..n).map(|r| 2.0 * dot(&qs[r * n..(r + 1) * n], &v)).collect();
        let a = dot(&w, &v);
        diag.push(a);
        basis.push(v);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let next = tridiagonal_abs_max(&diag, &off);
        let stagnated = (next - estimate).abs() <= 1e-10 * next;
        estimate = next;
        calm = if stagnated { calm + 1 } else { 0 };
        let beta = libm::sqrt(dot(&w, &w));
        if calm >= 3 || beta <= 1e-12 * estimate.max(f64::MIN_POSITIVE) || beta == 0.0 {
            break;
        }
        off.push(beta);
        v = w.into_iter().map(|x| x / beta).collect();
    }
    (LIPSCHITZ_SAFETY * estimate).max(LIPSCHITZ_FLOOR)
}

/// Largest absolute eigenvalue of the symmetric tridiagonal matrix with
/// diagonal `a` and off-diagonal `b`, by Sturm-sequence bisection.
fn tridiagonal_abs_max(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i < b.len() { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    // eigenvalues strictly below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let coupling = if i > 0 { b[i - 1] * b[i - 1] / d } else { 0.0 };
            d = a[i] - x - coupling;
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bisect = |target: usize| {
        // smallest x with at least `target` eigenvalues below it
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (l + h);
            if mid <= l || mid >= h {
                break;
            }
            if below(mid) >= target {
                h = mid;
            } else {
                l = mid;
            }
        }
        h
    };
    let top = bisect(k);
    let bottom = bisect(1);
    top.abs().max(bottom.abs())
}

/// Clique size `s`: the nearest integer to `0.4 l`.
pub fn clique_size(l: usize) -> usize {
    (4 * l + 5) / 10
}

/// Edge probability making the expected number of `s`-cliques of `G(l, p)`
/// equal to one: `p = C(l, s)^(-2 / (s (s - 1)))`.
pub fn clique_density_p(l: usize) -> Result<f64> {
    let s = clique_size(l);
    if s < 2 {
        return Err(Error::CliqueSizeTooSmall { l, s });
    }
    let ln_binom = libm::lgamma(l as f64 + 1.0)
        - libm::lgamma(s as f64 + 1.0)
        - libm::lgamma((l - s) as f64 + 1.0);
    let p = libm::exp(-2.0 * ln_binom / (s * (s - 1)) as f64);
    Ok(p.min(1.0))
}

/// Multi-StQP generator settings. `None` fields take the standard values.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStqpParams {
    pub l: usize,
    pub m: usize,
    pub seed: u64,
    /// Coupling weight, default `1 / (2 m²)`.
    pub epsilon: Option<f64>,
    pub alpha: f64,
    /// Edge probability, default [`clique_density_p`].
    pub edge_probability: Option<f64>,
}

impl MultiStqpParams {
    pub fn new(l: usize, m: usize, seed: u64) -> Self {
        Self { l, m, seed, epsilon: None, alpha: DEFAULT_ALPHA, edge_probability: None }
    }

    pub fn epsilon_value(&self) -> f64 {
        self.epsilon
            .unwrap_or_else(|| 1.0 / (2.0 * (self.m * self.m) as f64))
    }
}

/// `Q = blockdiag(-p_i (A_i + alpha I)) + epsilon Q̃` with `p_i = 1/m`,
/// `A_i` Erdős-Rényi adjacency matrices and `Q̃` standard Gaussian.
///
/// Draw order: the upper triangles of `A_1, ..., A_m` row by row, then `Q̃`
/// row-major, all from the instance stream of `seed`.
pub fn gen_multistqp(l: usize, m: usize, seed: u64) -> Result<QuadraticProblem> {
    gen_multistqp_with(&MultiStqpParams::new(l, m, seed))
}

pub fn gen_multistqp_with(params: &MultiStqpParams) -> Result<QuadraticProblem> {
    let MultiStqpParams { l, m, seed, alpha, .. } = *params;
    if m == 0 || l == 0 {
        return Err(Error::InvalidParameter("l and m must be positive"));
    }
    let p = match params.edge_probability {
        Some(p) if (0.0..=1.0).contains(&p) => p,
        Some(_) => return Err(Error::InvalidParameter("edge probability outside [0, 1]")),
        None => clique_density_p(l)?,
    };
    let epsilon = params.epsilon_value();
    let weight = 1.0 / m as f64;
    let layout = BlockLayout::uniform(l, m)?;
    let n = layout.total();
    let mut rng = Stream::with_label(seed, Label::Instance);
    let mut q = vec![0.0; n * n];
    for i in 0..m {
        let off = i * l;
        for r in 0..l {
            q[(off + r) * n + off + r] = -weight * alpha;
            for c in r + 1..l {
                if rng.bernoulli(p) {
                    q[(off + r) * n + off + c] = -weight;
                    q[(off + c) * n + off + r] = -weight;
                }
            }
        }
    }
    if epsilon != 0.0 {
        for v in q.iter_mut() {
            *v += epsilon * rng.normal();
        }
    }
    let meta = GeneratorMeta { l, m, seed, epsilon, alpha };
    Ok(QuadraticProblem::new(layout, q)?.with_meta(meta))
}
