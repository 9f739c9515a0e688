//! Number-operator Lip seminorms on the GNS truncation.
//!
//! `L(a) = ||[N, a]||` is estimated by compressing `[N, a]` to loops of length
//! at most `K` and sweeping `K`. Compressions of a fixed operator have
//! nondecreasing norms, so every reported value is a lower bound. The adjusted
//! seminorm is the sum of `L` over homogeneous components, checked against a
//! brute-force decomposition over sampled unit-ball points.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::GradedOperator;
use crate::graph::DirectedDouble;
use crate::linalg::{largest_singular_value, spectral_norm, LanczosOptions, SparseMatrix, C64};
use crate::loops::{AlgebraElement, GnsContext};

/// Tolerance for structural identities.
pub const STRUCTURAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorEstimate {
    /// Largest compression norm found: a lower bound for `L(a)`.
    pub value: f64,
    /// `(K, value)` per truncation, nondecreasing.
    pub trace: Vec<(usize, f64)>,
    /// Last relative increment below the requested tolerance.
    pub converged: bool,
    /// Uncertified estimate of the limit from a fit in `1/K^2, 1/K^3`; at least `value`.
    pub extrapolated: f64,
    /// No loops of positive length in the truncation.
    pub empty: bool,
}

fn norm_of(m: &SparseMatrix) -> f64 {
    spectral_norm(m, LanczosOptions::default())
}

fn operator_norm(m: &SparseMatrix, start: Option<&[C64]>) -> (f64, Vec<C64>) {
    let s = largest_singular_value(m, start, LanczosOptions::default());
    (s.value, s.vector)
}

/// Norm of the compression of a realized operator to degrees `<= k`.
pub fn compressed_norm(op: &GradedOperator, k: usize) -> f64 {
    norm_of(op.compress(k).matrix())
}

/// `||[N, a]||` compressed to the whole GNS truncation of `ctx`.
pub fn lip(ctx: &GnsContext, a: &AlgebraElement) -> Result<f64> {
    let op = ctx.realize(a)?.commutator_with_number();
    Ok(norm_of(op.matrix()))
}

/// Operator norm of `a` compressed to the GNS truncation of `ctx`.
pub fn gns_norm(ctx: &GnsContext, a: &AlgebraElement) -> Result<f64> {
    Ok(norm_of(ctx.realize(a)?.matrix()))
}

/// Sum of `L` over homogeneous components at the full truncation of `ctx`.
pub fn adjusted_lip_value(ctx: &GnsContext, a: &AlgebraElement) -> Result<f64> {
    let mut total = 0.0;
    for k in a.degrees() {
        if k > 0 {
            total += lip(ctx, &a.component(k))?;
        }
    }
    Ok(total)
}

pub fn commutator_norm(ctx: &GnsContext, a: &AlgebraElement, k_max: usize, rel_tol: f64) -> Result<CommutatorEstimate> {
    if k_max > ctx.depth() {
        return Err(Error::InsufficientDepth { needed: k_max, depth: ctx.depth() });
    }
    let deg = a.degree();
    if deg > k_max {
        return Err(Error::InsufficientDepth { needed: deg, depth: k_max });
    }
    if ctx.basis().len() <= 1 {
        return Ok(CommutatorEstimate { value: 0.0, trace: vec![], converged: true, extrapolated: 0.0, empty: true });
    }
    let comm = ctx.realize(a)?.commutator_with_number();
    let mut trace = Vec::new();
    let mut best = 0.0f64;
    let mut vector: Vec<C64> = Vec::new();
    for k in deg.max(1)..=k_max {
        let block = comm.compress(k);
        let dim = block.dim();
        let mut start = vector.clone();
        start.resize(dim, C64::new(0.0, 0.0));
        let (v, vec) = operator_norm(block.matrix(), Some(&start));
        if v >= best {
            vector = vec;
        }
        best = best.max(v);
        trace.push((k, best));
    }
    // Compare against two steps back: on bipartite graphs only every other
    // compression adds loops, so consecutive values can coincide.
    let converged = match trace.len() {
        0 => true,
        1 => trace[0].1 == 0.0,
        n => {
            let (last, prev) = (trace[n - 1].1, trace[n.saturating_sub(3)].1);
            last == 0.0 || (last - prev) / last < rel_tol
        }
    };
    let extrapolated = extrapolate(&trace).max(best);
    Ok(CommutatorEstimate { value: best, trace, converged, extrapolated, empty: false })
}

/// Least-squares fit `v(K) = v_inf + c2/K^2 + c3/K^3` through three widely
/// spaced points of the trace (roughly `K_max/4`, `K_max/2`, `K_max`).
fn extrapolate(trace: &[(usize, f64)]) -> f64 {
    let Some(&(k_last, v_last)) = trace.last() else { return 0.0 };
    let pick = |target: usize| trace.iter().min_by_key(|(k, _)| k.abs_diff(target)).copied().unwrap();
    let mut pts = vec![pick(k_last / 4), pick(k_last / 2), (k_last, v_last)];
    pts.dedup_by_key(|p| p.0);
    if pts.len() < 3 || pts.iter().any(|p| p.0 == 0) {
        return v_last;
    }
    let m = nalgebra::Matrix3::from_fn(|r, c| {
        let k = pts[r].0 as f64;
        [1.0, k.powi(-2), k.powi(-3)][c]
    });
    let rhs = nalgebra::Vector3::new(pts[0].1, pts[1].1, pts[2].1);
    m.lu().solve(&rhs).map_or(v_last, |x| x[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedLip {
    pub value: f64,
    pub components: Vec<(usize, CommutatorEstimate)>,
}

/// `sum_{k >= 1} L(a_k)`; the scalar part contributes nothing.
pub fn adjusted_lip(ctx: &GnsContext, a: &AlgebraElement, k_max: usize, rel_tol: f64) -> Result<AdjustedLip> {
    let mut components = Vec::new();
    let mut value = 0.0;
    for k in a.degrees() {
        if k == 0 {
            continue;
        }
        let est = commutator_norm(ctx, &a.component(k), k_max, rel_tol)?;
        value += est.value;
        components.push((k, est));
    }
    Ok(AdjustedLip { value, components })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaagerupReport {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub block_norm: f64,
    pub l2_norm: f64,
    pub margin: f64,
    /// Block has no nonzero entry.
    pub zero: bool,
    /// Grading forces the block to vanish (`|m - n| > k` or `k > m + n`).
    pub zero_expected: bool,
    pub passes: bool,
}

/// `||P_m x P_n|| <= ||x||_2` for homogeneous `x`, on an already realized operator.
pub fn haagerup_block(op: &GradedOperator, k: usize, l2_norm: f64, m: usize, n: usize) -> HaagerupReport {
    let block = op.block(m, n);
    let zero = block.nnz() == 0;
    let block_norm = if zero { 0.0 } else { norm_of(&block) };
    let zero_expected = m.abs_diff(n) > k || k > m + n;
    let margin = l2_norm - block_norm;
    HaagerupReport {
        k,
        m,
        n,
        block_norm,
        l2_norm,
        margin,
        zero,
        zero_expected,
        passes: margin >= -STRUCTURAL_TOL && (!zero_expected || zero),
    }
}

pub fn haagerup_verify(ctx: &GnsContext, x: &AlgebraElement, m: usize, n: usize) -> Result<HaagerupReport> {
    let k = x.homogeneous_degree()?;
    let needed = m.max(n);
    if needed > ctx.depth() {
        return Err(Error::InsufficientDepth { needed, depth: ctx.depth() });
    }
    let op = ctx.realize(x)?;
    Ok(haagerup_block(&op, k, x.l2_norm(), m, n))
}

/// All blocks `m, n <= max_degree` of one homogeneous element.
pub fn haagerup_sweep(ctx: &GnsContext, x: &AlgebraElement, max_degree: usize) -> Result<Vec<HaagerupReport>> {
    let k = x.homogeneous_degree()?;
    if max_degree > ctx.depth() {
        return Err(Error::InsufficientDepth { needed: max_degree, depth: ctx.depth() });
    }
    let op = ctx.realize(x)?;
    let l2 = x.l2_norm();
    let pairs: Vec<(usize, usize)> =
        (0..=max_degree).flat_map(|m| (0..=max_degree).map(move |n| (m, n))).collect();
    Ok(pairs.into_par_iter().map(|(m, n)| haagerup_block(&op, k, l2, m, n)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailNorms {
    pub far: f64,
    pub near: f64,
    pub low: f64,
    pub high: f64,
}

/// Splits of `a` by degree distance (`far`/`near`) and by component degree (`low`/`high`).
#[derive(Debug, Clone)]
pub struct TailDecomposition {
    pub far: GradedOperator,
    pub near: GradedOperator,
    pub low: AlgebraElement,
    pub high: AlgebraElement,
    pub norms: TailNorms,
}

pub fn tail_decompose(ctx: &GnsContext, a: &AlgebraElement, m: usize, k: usize) -> Result<TailDecomposition> {
    let op = ctx.realize(a)?;
    let m = m as isize;
    let far = op.filter_shift(|d| d.abs() >= m);
    let near = op.filter_shift(|d| d.abs() < m);
    let low = a.truncate(k);
    let high = a.sub(&low);
    let norms = TailNorms {
        far: norm_of(far.matrix()),
        near: norm_of(near.matrix()),
        low: gns_norm(ctx, &low)?,
        high: gns_norm(ctx, &high)?,
    };
    Ok(TailDecomposition { far, near, low, high, norms })
}

/// `sum_d max_n ||P_{n+d} x P_n||` over the blocks inside the truncation.
pub fn block_norm_estimate(ctx: &GnsContext, x: &AlgebraElement) -> Result<f64> {
    let op = ctx.realize(x)?;
    let depth = ctx.depth();
    let mut by_shift: std::collections::BTreeMap<isize, f64> = Default::default();
    for (m, n) in op.block_support() {
        let norm = norm_of(&op.block(m, n));
        let e = by_shift.entry(m as isize - n as isize).or_insert(0.0);
        *e = e.max(norm);
    }
    let _ = depth;
    Ok(by_shift.values().fold(0.0, |s, v| s + v))
}

/// Block estimate of `||a - a_{<=K}||` for each `K` in `ks`: the sum of the
/// block estimates of the components above `K`. Nonincreasing in `K`.
pub fn tail_norm_estimates(ctx: &GnsContext, a: &AlgebraElement, ks: &[usize]) -> Result<Vec<f64>> {
    let per_degree: Vec<(usize, f64)> = a
        .degrees()
        .into_iter()
        .map(|k| Ok((k, block_norm_estimate(ctx, &a.component(k))?)))
        .collect::<Result<_>>()?;
    Ok(ks.iter().map(|&kk| per_degree.iter().filter(|(d, _)| *d > kk).fold(0.0, |s, (_, v)| s + v)).collect())
}

/// One real coordinate of the self-adjoint part of the loop space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Coordinate {
    /// `Y_w` for a loop equal to its own opposite.
    SelfOpposite(Vec<usize>),
    /// `(Y_w + Y_{w^op}) / sqrt 2`.
    Real(Vec<usize>, Vec<usize>),
    /// `i (Y_w - Y_{w^op}) / sqrt 2`.
    Imaginary(Vec<usize>, Vec<usize>),
}

impl Coordinate {
    pub fn degree(&self) -> usize {
        match self {
            Coordinate::SelfOpposite(w) | Coordinate::Real(w, _) | Coordinate::Imaginary(w, _) => w.len(),
        }
    }

    fn words(&self) -> Vec<(Vec<usize>, C64)> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Coordinate::SelfOpposite(w) => vec![(w.clone(), C64::new(1.0, 0.0))],
            Coordinate::Real(w, o) => vec![(w.clone(), C64::new(r, 0.0)), (o.clone(), C64::new(r, 0.0))],
            Coordinate::Imaginary(w, o) => vec![(w.clone(), C64::new(0.0, r)), (o.clone(), C64::new(0.0, -r))],
        }
    }
}

/// Orthonormal (for `||.||_2`) real coordinates on self-adjoint elements
/// spanned by a set of loops closed under taking opposites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfAdjointCoords {
    pub coords: Vec<Coordinate>,
}

impl SelfAdjointCoords {
    pub fn new(dd: &DirectedDouble, loops: &[Vec<usize>]) -> Self {
        let mut coords = Vec::new();
        for w in loops {
            let o = dd.opposite_path(w);
            match w.cmp(&o) {
                std::cmp::Ordering::Equal => coords.push(Coordinate::SelfOpposite(w.clone())),
                std::cmp::Ordering::Less => {
                    coords.push(Coordinate::Real(w.clone(), o.clone()));
                    coords.push(Coordinate::Imaginary(w.clone(), o));
                }
                std::cmp::Ordering::Greater => {}
            }
        }
        Self { coords }
    }

    /// Coordinates for all loops of length `1..=k` in the GNS basis.
    pub fn for_degrees(ctx: &GnsContext, degrees: impl Fn(usize) -> bool) -> Self {
        let loops: Vec<Vec<usize>> = ctx.loops_up_to(ctx.max_word()).into_iter().filter(|w| degrees(w.len())).collect();
        Self::new(ctx.double(), &loops)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.coords.iter().map(Coordinate::degree).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn restrict(&self, keep: impl Fn(&Coordinate) -> bool) -> Self {
        Self { coords: self.coords.iter().filter(|c| keep(c)).cloned().collect() }
    }

    pub fn to_element(&self, x: &[f64]) -> AlgebraElement {
        let mut a = AlgebraElement::zero();
        for (c, &t) in self.coords.iter().zip(x) {
            if t != 0.0 {
                for (w, z) in c.words() {
                    a.add_term(w, z * t);
                }
            }
        }
        a
    }

    pub fn from_element(&self, a: &AlgebraElement) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| c.words().iter().map(|(w, z)| (z.conj() * a.coefficient(w)).re).sum())
            .collect()
    }

    /// Same coordinates with every loop translated by `map`.
    pub fn map_words(&self, map: impl Fn(&[usize]) -> Vec<usize>) -> Self {
        let coords = self
            .coords
            .iter()
            .map(|c| match c {
                Coordinate::SelfOpposite(w) => Coordinate::SelfOpposite(map(w)),
                Coordinate::Real(w, o) => Coordinate::Real(map(w), map(o)),
                Coordinate::Imaginary(w, o) => Coordinate::Imaginary(map(w), map(o)),
            })
            .collect();
        Self { coords }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Seminorm {
    Lip,
    Adjusted,
}

pub fn seminorm(ctx: &GnsContext, a: &AlgebraElement, which: Seminorm) -> Result<f64> {
    match which {
        Seminorm::Lip => lip(ctx, a),
        Seminorm::Adjusted => adjusted_lip_value(ctx, a),
    }
}

/// Symmetric cloud of near-boundary points of `{seminorm <= 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipBallCloud {
    pub coords: SelfAdjointCoords,
    pub points: Vec<Vec<f64>>,
    pub seminorm: Seminorm,
    pub seed: u64,
}

/// Rescaling slack that keeps recomputed seminorms at or below one.
const BOUNDARY_SLACK: f64 = 1e-12;

pub fn gaussian_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Per-item generator: results do not depend on scheduling.
pub fn item_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << 20);
    rng
}

fn scaled_to_boundary(ctx: &GnsContext, coords: &SelfAdjointCoords, x: &[f64], which: Seminorm) -> Result<Vec<f64>> {
    let s = seminorm(ctx, &coords.to_element(x), which)?;
    if !(s > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    Ok(x.iter().map(|t| t / (s * (1.0 + BOUNDARY_SLACK))).collect())
}

/// Samples `count` points (in `+-` pairs). For the adjusted seminorm half
/// of the pairs are convex combinations of homogeneous boundary points.
pub fn sample_lip_ball(
    ctx: &GnsContext,
    coords: &SelfAdjointCoords,
    which: Seminorm,
    count: usize,
    seed: u64,
) -> Result<LipBallCloud> {
    let pairs = count.div_ceil(2);
    let degrees = coords.degrees();
    let by_degree: Vec<Vec<usize>> = degrees
        .iter()
        .map(|&d| (0..coords.dim()).filter(|&i| coords.coords[i].degree() == d).collect())
        .collect();
    let halves: Vec<Vec<f64>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = item_rng(seed, 1, i as u64);
            if which == Seminorm::Adjusted && i % 2 == 1 && degrees.len() > 1 {
                let weights: Vec<f64> = (0..degrees.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let total: f64 = weights.iter().sum();
                let mut x = vec![0.0; coords.dim()];
                for (idx, w) in by_degree.iter().zip(&weights) {
                    let dir = gaussian_direction(&mut rng, idx.len());
                    let mut full = vec![0.0; coords.dim()];
                    for (&j, &t) in idx.iter().zip(&dir) {
                        full[j] = t;
                    }
                    let b = scaled_to_boundary(ctx, coords, &full, Seminorm::Lip)?;
                    for (xj, bj) in x.iter_mut().zip(b) {
                        *xj += bj * w / total;
                    }
                }
                Ok(x)
            } else {
                scaled_to_boundary(ctx, coords, &gaussian_direction(&mut rng, coords.dim()), which)
            }
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(2 * pairs);
    for h in halves {
        points.push(h.iter().map(|t| -t).collect());
        points.push(h);
    }
    points.truncate(count.max(2));
    Ok(LipBallCloud { coords: coords.clone(), points, seminorm: which, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub points_used: usize,
}

/// Brute-force adjusted seminorm: the least total weight of a decomposition
/// of `a` (minus its scalar part) over sampled boundary points of the
/// homogeneous Lip balls, refined around the points the LP selects.
pub fn minkowski_oracle(ctx: &GnsContext, a: &AlgebraElement, samples: usize, seed: u64) -> Result<OracleEstimate> {
    let dd = ctx.double();
    if a.star(dd).sub(a).l2_norm() > 1e-12 * (1.0 + a.l2_norm()) {
        return Err(Error::NotSelfAdjoint);
    }
    let mut value = 0.0;
    let mut points_used = 0;
    for k in a.degrees().into_iter().filter(|&k| k > 0) {
        let coords = SelfAdjointCoords::for_degrees(ctx, |d| d == k);
        let target = coords.from_element(&a.component(k));
        let dim = coords.dim();
        let mut rng = item_rng(seed, 2, k as u64);
        let mut points: Vec<Vec<f64>> = Vec::new();
        let push = |dir: Vec<f64>, points: &mut Vec<Vec<f64>>| -> Result<()> {
            let b = scaled_to_boundary(ctx, &coords, &dir, Seminorm::Lip)?;
            points.push(b.iter().map(|t| -t).collect());
            points.push(b);
            Ok(())
        };
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            push(e, &mut points)?;
        }
        for _ in 0..samples {
            push(gaussian_direction(&mut rng, dim), &mut points)?;
        }
        let mut best = solve_decomposition(&points, &target)?;
        let mut radius = 0.25;
        for _ in 0..10 {
            let active: Vec<usize> = best.1.iter().enumerate().filter(|(_, &w)| w > 1e-12).map(|(i, _)| i).collect();
            for &i in &active {
                let base = points[i].clone();
                for _ in 0..2 * dim {
                    let noise = gaussian_direction(&mut rng, dim);
                    let dir: Vec<f64> = base.iter().zip(&noise).map(|(b, n)| b + radius * n * norm2(&base)).collect();
                    push(dir, &mut points)?;
                }
            }
            best = solve_decomposition(&points, &target)?;
            radius *= 0.5;
        }
        value += best.0;
        points_used += points.len();
    }
    Ok(OracleEstimate { value, points_used })
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn solve_decomposition(points: &[Vec<f64>], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = points.iter().map(|_| problem.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for (row, &t) in target.iter().enumerate() {
        let expr: Vec<_> = vars.iter().zip(points).filter(|(_, p)| p[row] != 0.0).map(|(&v, p)| (v, p[row])).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, t);
    }
    let solution = problem.solve().map_err(|e| Error::Infeasible(e.to_string()))?;
    let weights = vars.iter().map(|&v| solution[v]).collect();
    Ok((solution.objective(), weights))
}

/// Random homogeneous self-adjoint element of degree `k` with `||x||_2 = 1`.
pub fn random_homogeneous(ctx: &GnsContext, k: usize, rng: &mut ChaCha8Rng) -> Option<AlgebraElement> {
    let coords = SelfAdjointCoords::for_degrees(ctx, |d| d == k);
    (coords.dim() > 0).then(|| coords.to_element(&gaussian_direction(rng, coords.dim())))
}

/// Random homogeneous element of degree `k` with complex Gaussian coefficients
/// on every loop of that length, normalized in `||.||_2`.
pub fn random_homogeneous_complex(ctx: &GnsContext, k: usize, rng: &mut ChaCha8Rng) -> Option<AlgebraElement> {
    let words: Vec<Vec<usize>> = ctx.basis().paths().iter().filter(|p| p.len() == k).map(|p| p.edges.clone()).collect();
    if words.is_empty() {
        return None;
    }
    let raw = gaussian_direction(rng, 2 * words.len());
    Some(AlgebraElement::from_terms(
        words.into_iter().enumerate().map(|(i, w)| (w, Complex64::new(raw[2 * i], raw[2 * i + 1]))),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bouquet, dynkin_a, DirectedDouble};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn ctx(g: crate::graph::WeightedGraph, depth: usize, word: usize) -> GnsContext {
        GnsContext::new(Arc::new(DirectedDouble::new(&g)), depth, word, crate::DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn scalar_has_zero_lip() {
        let c = ctx(bouquet(2).unwrap(), 5, 2);
        let est = commutator_norm(&c, &AlgebraElement::unit(), 5, 1e-3).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(adjusted_lip_value(&c, &AlgebraElement::unit().scale(C64::new(3.0, 0.0))).unwrap(), 0.0);
    }

    #[test]
    fn one_loop_generator_converges_to_two() {
        let c = ctx(bouquet(1).unwrap(), 60, 1);
        let est = commutator_norm(&c, &AlgebraElement::wick(vec![0]), 60, 1e-6).unwrap();
        assert!(est.trace.windows(2).all(|w| w[1].1 >= w[0].1));
        // Compression to length K is the tridiagonal matrix of l - l^*.
        let exact = 2.0 * (std::f64::consts::PI / 62.0).cos();
        assert_abs_diff_eq!(est.value, exact, epsilon = 1e-10);
        assert!(est.value <= 2.0);
        assert!((est.extrapolated - 2.0).abs() < 1e-3, "{}", est.extrapolated);
    }

    #[test]
    fn parity_plateau_is_not_convergence() {
        // On A5 loops have even length, so odd compressions repeat the
        // previous value while the trace is still far from its limit.
        let c = ctx(dynkin_a(5).unwrap(), 12, 2);
        let a = AlgebraElement::wick(vec![0, 1]);
        let odd = commutator_norm(&c, &a, 9, 1e-2).unwrap();
        assert_eq!(odd.trace[odd.trace.len() - 1].1, odd.trace[odd.trace.len() - 2].1);
        assert!(!odd.converged);
        assert!(commutator_norm(&c, &a, 10, 0.05).unwrap().converged);
    }

    #[test]
    fn lip_is_star_invariant_and_vanishes_only_on_scalars() {
        let c = ctx(dynkin_a(5).unwrap(), 8, 4);
        let dd = c.double().clone();
        let mut rng = item_rng(7, 0, 0);
        for k in [2, 4] {
            let x = random_homogeneous_complex(&c, k, &mut rng).unwrap();
            let l = lip(&c, &x).unwrap();
            assert!(l > 0.1);
            assert_abs_diff_eq!(l, lip(&c, &x.star(&dd)).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn haagerup_tight_on_a3() {
        let c = ctx(dynkin_a(3).unwrap(), 6, 2);
        let r = haagerup_verify(&c, &AlgebraElement::wick(vec![0, 1]), 2, 0).unwrap();
        assert_abs_diff_eq!(r.block_norm, 1.0, epsilon = 1e-12);
        assert!(r.passes);
        let r = haagerup_verify(&c, &AlgebraElement::wick(vec![0, 1]), 6, 0).unwrap();
        assert!(r.zero && r.zero_expected && r.passes);
    }

    #[test]
    fn haagerup_random_two_loop() {
        let c = ctx(bouquet(2).unwrap(), 6, 3);
        let mut rng = item_rng(11, 0, 0);
        for _ in 0..10 {
            let x = random_homogeneous_complex(&c, 3, &mut rng).unwrap();
            for r in haagerup_sweep(&c, &x, 6).unwrap() {
                assert!(r.passes, "{r:?}");
            }
        }
    }

    #[test]
    fn tail_pieces() {
        let c = ctx(bouquet(2).unwrap(), 6, 3);
        let mut rng = item_rng(3, 0, 0);
        let a = random_homogeneous(&c, 2, &mut rng).unwrap().add(&random_homogeneous(&c, 3, &mut rng).unwrap());
        let t = tail_decompose(&c, &a, 4, 3).unwrap();
        assert_eq!(t.far.matrix().nnz(), 0);
        assert!(t.high.is_zero());
        let t = tail_decompose(&c, &a, 2, 2).unwrap();
        let whole = c.realize(&a).unwrap();
        assert_eq!(t.far.add(&t.near).matrix().max_abs_diff(whole.matrix()), 0.0);
        assert_eq!(t.low.add(&t.high), a);
        let tails = tail_norm_estimates(&c, &a, &[0, 1, 2, 3]).unwrap();
        assert!(tails.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(tails[3], 0.0);
    }

    #[test]
    fn coordinates_roundtrip() {
        let c = ctx(bouquet(2).unwrap(), 4, 3);
        let coords = SelfAdjointCoords::for_degrees(&c, |d| (1..=3).contains(&d));
        assert_eq!(coords.dim(), 2 + 4 + 8);
        let mut rng = item_rng(1, 0, 0);
        let x = gaussian_direction(&mut rng, coords.dim());
        let a = coords.to_element(&x);
        assert!(a.star(c.double()).sub(&a).l2_norm() < 1e-15);
        assert_abs_diff_eq!(a.l2_norm(), 1.0, epsilon = 1e-12);
        let back = coords.from_element(&a);
        for (p, q) in x.iter().zip(back) {
            assert_abs_diff_eq!(*p, q, epsilon = 1e-14);
        }
    }

    #[test]
    fn cloud_properties() {
        let c = ctx(dynkin_a(3).unwrap(), 8, 4);
        let w2 = SelfAdjointCoords::for_degrees(&c, |d| d == 2);
        assert_eq!(w2.dim(), 1);
        let cloud = sample_lip_ball(&c, &w2, Seminorm::Lip, 2, 5).unwrap();
        assert_eq!(cloud.points.len(), 2);
        assert_abs_diff_eq!(cloud.points[0][0], -cloud.points[1][0]);

        let v = SelfAdjointCoords::for_degrees(&c, |d| (1..=4).contains(&d));
        for which in [Seminorm::Lip, Seminorm::Adjusted] {
            let cloud = sample_lip_ball(&c, &v, which, 16, 9).unwrap();
            for p in &cloud.points {
                let s = seminorm(&c, &v.to_element(p), which).unwrap();
                assert!(s <= 1.0 && s >= 1.0 - 1e-3, "{s}");
            }
            for p in &cloud.points {
                for q in &cloud.points {
                    let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
                    assert!(seminorm(&c, &v.to_element(&mid), which).unwrap() <= 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn oracle_matches_closed_form() {
        let c = ctx(dynkin_a(3).unwrap(), 10, 4);
        let w2 = SelfAdjointCoords::for_degrees(&c, |d| d == 2);
        let w4 = SelfAdjointCoords::for_degrees(&c, |d| d == 4);
        let x2 = w2.to_element(&[1.0]);
        let x4 = w4.to_element(&[0.6, 0.8]);
        let x2 = x2.scale(C64::new(1.0 / lip(&c, &x2).unwrap(), 0.0));
        let x4 = x4.scale(C64::new(1.0 / lip(&c, &x4).unwrap(), 0.0));
        let a = x2.add(&x4);
        let closed = adjusted_lip_value(&c, &a).unwrap();
        assert_abs_diff_eq!(closed, 2.0, epsilon = 1e-9);
        let oracle = minkowski_oracle(&c, &a, 200, 1).unwrap();
        assert!(oracle.value >= closed * (1.0 - 1e-9));
        assert!((oracle.value - closed).abs() < 0.02 * closed, "{} vs {}", oracle.value, closed);
        assert!(lip(&c, &a).unwrap() <= closed + 1e-9);
    }
}
