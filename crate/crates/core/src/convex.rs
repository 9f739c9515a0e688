//! Hausdorff distances between convex bodies given by gauge oracles, the
//! `dist_q <= 2 dist_H` surrogate, and the graph-family convergence experiment.
//!
//! Distances are sample-based estimates. The one-sided sup is taken over a
//! boundary cloud, so it never exceeds the true value by more than the
//! projection tolerance; it may undershoot where the cloud is sparse.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ball, find_ball_isomorphism, verify_local_convergence, DirectedDouble, WeightedGraph};
use crate::graph::{dynkin_a, dynkin_a_infinity};
use crate::linalg::{largest_singular_value, LanczosOptions};
use crate::loops::{AlgebraElement, GnsContext};
use crate::seminorms::{
    adjusted_lip_value, gaussian_direction, gns_norm, item_rng, lip, sample_lip_ball, LipBallCloud, Seminorm,
    SelfAdjointCoords,
};

pub type Gauge = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A convex body containing the origin, described by its gauge
/// (Minkowski functional): `x` is a member iff `gauge(x) <= 1`.
#[derive(Clone)]
pub struct ConvexBody {
    pub dim: usize,
    gauge: Gauge,
    pub cloud: Vec<Vec<f64>>,
    pub symmetric: bool,
}

impl std::fmt::Debug for ConvexBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexBody")
            .field("dim", &self.dim)
            .field("cloud", &self.cloud.len())
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

/// Bisection steps used to turn a membership oracle into a gauge.
const BISECTION_STEPS: usize = 60;

impl ConvexBody {
    pub fn from_gauge(dim: usize, gauge: Gauge, cloud: Vec<Vec<f64>>, symmetric: bool) -> Self {
        Self { dim, gauge, cloud, symmetric }
    }

    /// Body from a boolean membership oracle. `radius` must bound the body.
    pub fn from_membership(
        dim: usize,
        member: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        radius: f64,
        cloud: Vec<Vec<f64>>,
        symmetric: bool,
    ) -> Self {
        let gauge = move |x: &[f64]| {
            let n = x.iter().map(|t| t * t).sum::<f64>().sqrt();
            if n == 0.0 {
                return 0.0;
            }
            // Largest s with s*x inside, searched in [0, radius/|x|].
            let (mut lo, mut hi) = (0.0, 2.0 * radius / n);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                let y: Vec<f64> = x.iter().map(|t| t * mid).collect();
                if member(&y) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                f64::INFINITY
            } else {
                1.0 / lo
            }
        };
        Self { dim, gauge: Arc::new(gauge), cloud, symmetric }
    }

    /// Body over a Lip-ball cloud with the gauge of the cloud's seminorm.
    pub fn from_cloud(ctx: &GnsContext, cloud: &LipBallCloud) -> Self {
        let ctx = ctx.clone();
        let coords = cloud.coords.clone();
        let which = cloud.seminorm;
        let gauge = move |x: &[f64]| {
            let a = coords.to_element(x);
            let v = match which {
                Seminorm::Lip => lip(&ctx, &a),
                Seminorm::Adjusted => adjusted_lip_value(&ctx, &a),
            };
            v.unwrap_or(f64::INFINITY)
        };
        Self { dim: cloud.coords.dim(), gauge: Arc::new(gauge), cloud: cloud.points.clone(), symmetric: true }
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        (self.gauge)(x)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.gauge(x) <= 1.0 + tol
    }

    /// Radial retraction onto the body.
    pub fn retract(&self, x: &[f64]) -> Vec<f64> {
        let g = self.gauge(x);
        if g <= 1.0 {
            x.to_vec()
        } else {
            x.iter().map(|t| t / g).collect()
        }
    }

    /// Midpoint convexity on all pairs of the first `limit` cloud points.
    pub fn spot_check_convexity(&self, limit: usize, tol: f64) -> bool {
        let pts = &self.cloud[..self.cloud.len().min(limit)];
        pts.iter().all(|p| {
            pts.iter().all(|q| {
                let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
                self.contains(&mid, tol)
            })
        }) && self.contains(&vec![0.0; self.dim], tol)
    }
}

pub type NormOracle<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

pub fn euclidean(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, t| m.max(t.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointDistance {
    pub distance: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const MAX_COMPASS_STEPS: usize = 400;
const SUFFICIENT_DECREASE: f64 = 1e-3;

fn diff(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Distance from `x` to `body` in the given norm, by compass search over
/// retracted candidates, to relative step tolerance `tol`.
pub fn distance_to_body(x: &[f64], body: &ConvexBody, norm: NormOracle, tol: f64, hint: Option<&[f64]>) -> PointDistance {
    if body.contains(x, 0.0) {
        return PointDistance { distance: 0.0, evaluations: 1, converged: true };
    }
    let mut evaluations = 1;
    let mut best = body.retract(x);
    let mut best_d = norm(&diff(x, &best));
    let try_candidate = |y: Vec<f64>, margin: f64, best: &mut Vec<f64>, best_d: &mut f64, evaluations: &mut usize| {
        let y = body.retract(&y);
        let d = norm(&diff(x, &y));
        *evaluations += 2;
        if d < *best_d - margin {
            *best = y;
            *best_d = d;
            true
        } else {
            false
        }
    };
    if let Some(h) = hint {
        try_candidate(h.to_vec(), 0.0, &mut best, &mut best_d, &mut evaluations);
    }
    let scale = euclidean(x).max(1e-300);
    let mut step = 0.5 * euclidean(&diff(x, &best)).max(tol * scale);
    let max_step = step;
    let dim = x.len();
    let mut steps = 0;
    let mut converged = false;
    while steps < MAX_COMPASS_STEPS {
        steps += 1;
        if step < 0.25 * tol * best_d.max(tol * scale) {
            converged = true;
            break;
        }
        let toward = diff(x, &best);
        let tn = euclidean(&toward);
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * dim + 2);
        if tn > 0.0 {
            dirs.push(toward.iter().map(|t| t / tn).collect());
        }
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; dim];
                e[i] = s;
                dirs.push(e);
            }
        }
        // Sufficient decrease keeps the search from crawling along a kink.
        let margin = SUFFICIENT_DECREASE * step;
        let mut improved = false;
        for d in dirs {
            let y: Vec<f64> = best.iter().zip(&d).map(|(b, t)| b + step * t).collect();
            if try_candidate(y, margin, &mut best, &mut best_d, &mut evaluations) {
                improved = true;
                break;
            }
        }
        if improved {
            step = (2.0 * step).min(max_step);
        } else {
            step *= 0.5;
        }
    }
    PointDistance { distance: best_d, evaluations, converged }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Cloud of the first body measured against the second.
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    pub forward: f64,
    pub backward: f64,
    /// Side and cloud index attaining the value.
    pub worst: Option<(Side, usize)>,
    pub samples: usize,
    pub tol: f64,
    /// Cloud points whose projection loop hit the step limit.
    pub failures: Vec<(Side, usize)>,
}

fn one_sided(from: &ConvexBody, to: &ConvexBody, norm: NormOracle, tol: f64) -> Vec<PointDistance> {
    from.cloud.par_iter().map(|x| distance_to_body(x, to, norm, tol, None)).collect()
}

pub fn hausdorff_distance(b1: &ConvexBody, b2: &ConvexBody, norm: NormOracle, tol: f64) -> Result<HausdorffEstimate> {
    if b1.dim != b2.dim {
        return Err(Error::InvalidGraph(format!("bodies live in dimensions {} and {}", b1.dim, b2.dim)));
    }
    let fwd = one_sided(b1, b2, norm, tol);
    let bwd = one_sided(b2, b1, norm, tol);
    let mut worst = None;
    let mut value = 0.0;
    let mut failures = Vec::new();
    let mut sides = [0.0f64; 2];
    for (side, list, slot) in [(Side::Forward, &fwd, 0), (Side::Backward, &bwd, 1)] {
        for (i, p) in list.iter().enumerate() {
            if !p.converged {
                failures.push((side, i));
            }
            sides[slot] = sides[slot].max(p.distance);
            if p.distance > value {
                value = p.distance;
                worst = Some((side, i));
            }
        }
    }
    Ok(HausdorffEstimate {
        value,
        forward: sides[0],
        backward: sides[1],
        worst,
        samples: fwd.len() + bwd.len(),
        tol,
        failures,
    })
}

/// `2 dist_H` of the two slices: an upper bound for the quantum
/// Gromov-Hausdorff distance when `small` lives on a subspace of `big`
/// (given in the coordinates of `big`).
pub fn distq_upper_subspace(big: &ConvexBody, small: &ConvexBody, norm: NormOracle, tol: f64) -> Result<f64> {
    Ok(2.0 * hausdorff_distance(big, small, norm, tol)?.value)
}

/// Euclidean distance from `p` to the convex hull of `vertices`
/// (Frank-Wolfe with exact line search; the duality gap bounds the error).
pub fn distance_to_hull(p: &[f64], vertices: &[Vec<f64>], tol: f64) -> f64 {
    let Some(first) = vertices.iter().min_by(|a, b| euclidean(&diff(a, p)).total_cmp(&euclidean(&diff(b, p))))
    else {
        return f64::INFINITY;
    };
    let mut x = first.clone();
    for _ in 0..100_000 {
        let g = diff(&x, p);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(s, t)| s * t).sum::<f64>();
        let s = vertices.iter().min_by(|a, b| dot(&g, a).total_cmp(&dot(&g, b))).unwrap();
        let d = diff(s, &x);
        let gap = -dot(&g, &d);
        if gap <= tol * tol {
            break;
        }
        let dd = dot(&d, &d);
        let t = (gap / dd).clamp(0.0, 1.0);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
    }
    euclidean(&diff(&x, p))
}

/// Euclidean Hausdorff distance between the convex hulls of two vertex sets.
pub fn polytope_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> f64 {
    let side = |from: &[Vec<f64>], to: &[Vec<f64>]| from.iter().map(|p| distance_to_hull(p, to, tol)).fold(0.0, f64::max);
    side(a, b).max(side(b, a))
}

/// One convergent sequence of polytopes (vertex lists) and its limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolytopeSequence {
    pub terms: Vec<Vec<Vec<f64>>>,
    pub limit: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullUnionRow {
    pub index: usize,
    pub hull_distance: f64,
    pub max_individual: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullUnionCheck {
    pub rows: Vec<HullUnionRow>,
    pub holds: bool,
}

/// Checks `dist_H(conv U X^i_n, conv U X^i) <= max_i dist_H(X^i_n, X^i) + tol`
/// for every index `n` present in all sequences.
pub fn hull_union_limit_check(sequences: &[PolytopeSequence], tol: f64) -> HullUnionCheck {
    let len = sequences.iter().map(|s| s.terms.len()).min().unwrap_or(0);
    let limit_union: Vec<Vec<f64>> = sequences.iter().flat_map(|s| s.limit.iter().cloned()).collect();
    let rows: Vec<HullUnionRow> = (0..len)
        .map(|n| {
            let union: Vec<Vec<f64>> = sequences.iter().flat_map(|s| s.terms[n].iter().cloned()).collect();
            let hull_distance = polytope_hausdorff(&union, &limit_union, tol * 1e-3);
            let max_individual = sequences
                .iter()
                .map(|s| polytope_hausdorff(&s.terms[n], &s.limit, tol * 1e-3))
                .fold(0.0, f64::max);
            HullUnionRow { index: n, hull_distance, max_individual, holds: hull_distance <= max_individual + tol }
        })
        .collect();
    let holds = rows.iter().all(|r| r.holds);
    HullUnionCheck { rows, holds }
}

/// A sequence of weighted graphs with a limit and a numeric label per member.
#[derive(Debug, Clone)]
pub struct GraphFamily {
    pub name: String,
    pub labels: Vec<usize>,
    pub graphs: Vec<WeightedGraph>,
    pub limit: WeightedGraph,
}

impl GraphFamily {
    /// `A_m -> A_infinity` at `q = 1`, the limit truncated after `cutoff` vertices.
    pub fn dynkin_a(ms: &[usize], cutoff: usize) -> Result<Self> {
        Ok(Self {
            name: "A_m -> A_inf".into(),
            labels: ms.to_vec(),
            graphs: ms.iter().map(|&m| dynkin_a(m)).collect::<Result<_>>()?,
            limit: dynkin_a_infinity(cutoff, 1.0)?,
        })
    }

    /// Fixed A_infinity truncation with `q_m = 1 + 2^-m`, limit `q = 1`.
    pub fn q_deformation(ms: &[usize], cutoff: usize) -> Result<Self> {
        Ok(Self {
            name: "A_inf, q_m = 1 + 2^-m".into(),
            labels: ms.to_vec(),
            graphs: ms.iter().map(|&m| dynkin_a_infinity(cutoff, 1.0 + 0.5f64.powi(m as i32))).collect::<Result<_>>()?,
            limit: dynkin_a_infinity(cutoff, 1.0)?,
        })
    }

    /// `count` copies of the limit.
    pub fn constant(graph: WeightedGraph, count: usize) -> Self {
        Self { name: "constant".into(), labels: (0..count).collect(), graphs: vec![graph.clone(); count], limit: graph }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceParams {
    pub cutoff: usize,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n: usize,
    #[serde(rename = "K")]
    pub cutoff: usize,
    pub norm_distortion: f64,
    pub lip_distortion: f64,
    pub ball_distance: f64,
    pub distq_upper: f64,
    pub samples: usize,
    pub seed: u64,
    pub flags: Vec<String>,
}

/// Directed-edge translation from the limit's double to a member's double,
/// induced by an isomorphism of the radius-`radius` balls.
pub fn directed_edge_map(limit: &DirectedDouble, member: &DirectedDouble, radius: usize) -> Option<Vec<Option<usize>>> {
    let (lb, mb) = (ball(limit.graph(), radius), ball(member.graph(), radius));
    let iso = find_ball_isomorphism(&lb, &mb)?;
    let mut vertex_in_ball = vec![None; limit.graph().num_vertices()];
    for (i, &v) in lb.vertex_origin.iter().enumerate() {
        vertex_in_ball[v] = Some(i);
    }
    let mut edge_in_ball = vec![None; limit.graph().num_edges()];
    for (i, &e) in lb.edge_origin.iter().enumerate() {
        edge_in_ball[e] = Some(i);
    }
    let map = limit
        .edges()
        .iter()
        .map(|d| {
            let e = edge_in_ball[d.undirected]?;
            let s = vertex_in_ball[d.source]?;
            let (me, ms) = (mb.edge_origin[iso.edge_map[e]], mb.vertex_origin[iso.vertex_map[s]]);
            member.edges().iter().find(|x| x.undirected == me && x.source == ms).map(|x| x.id)
        })
        .collect();
    Some(map)
}

fn translate(map: &[Option<usize>], w: &[usize]) -> Vec<usize> {
    w.iter().map(|&e| map[e].expect("loop edges lie inside the matched ball")).collect()
}

/// Runs the convergence experiment: every member's loop space up to length
/// `cutoff` is identified with the limit's, and norms, Lip norms and
/// adjusted-Lip balls are compared in the limit's operator norm.
pub fn convergence_experiment(family: &GraphFamily, params: ConvergenceParams) -> Result<Vec<ConvergenceReport>> {
    let k = params.cutoff;
    if params.depth < k + 1 {
        return Err(Error::InsufficientDepth { needed: k + 1, depth: params.depth });
    }
    let check = verify_local_convergence(&family.graphs, &family.limit, k, f64::INFINITY);
    if let Some(i) = check.matched_radius.iter().position(|r| r.is_none_or(|r| r < k)) {
        return Err(Error::NotConvergent(format!(
            "member {} does not match the limit on the ball of radius {k}",
            family.labels[i]
        )));
    }
    let limit_dd = Arc::new(DirectedDouble::new(&family.limit));
    let limit_ctx = GnsContext::new(limit_dd.clone(), params.depth, k, crate::DEFAULT_BUDGET)?;
    let coords = SelfAdjointCoords::for_degrees(&limit_ctx, |d| (1..=k).contains(&d));
    if coords.dim() == 0 {
        return Err(Error::NotConvergent("no loops of positive length up to the cutoff".into()));
    }
    let degrees = coords.degrees();
    let per_degree: Vec<SelfAdjointCoords> =
        degrees.iter().map(|&d| coords.restrict(|c| c.degree() == d)).collect();

    // Shared samples: unit vectors of V_K and unit homogeneous elements.
    let units: Vec<Vec<f64>> =
        (0..params.samples).map(|i| gaussian_direction(&mut item_rng(params.seed, 3, i as u64), coords.dim())).collect();
    let homogeneous: Vec<(usize, Vec<f64>)> = (0..params.samples)
        .map(|i| {
            let mut rng = item_rng(params.seed, 4, i as u64);
            let j = i % per_degree.len();
            (j, gaussian_direction(&mut rng, per_degree[j].dim()))
        })
        .collect();

    let limit_norms: Vec<f64> =
        units.iter().map(|x| gns_norm(&limit_ctx, &coords.to_element(x))).collect::<Result<_>>()?;
    let limit_lips: Vec<f64> = homogeneous
        .iter()
        .map(|(j, x)| lip(&limit_ctx, &per_degree[*j].to_element(x)))
        .collect::<Result<_>>()?;
    let limit_cloud = sample_lip_ball(&limit_ctx, &coords, Seminorm::Adjusted, params.samples, params.seed)?;
    let limit_body = ConvexBody::from_cloud(&limit_ctx, &limit_cloud);
    let norm_ctx = limit_ctx.clone();
    let norm_coords = coords.clone();
    let norm = move |x: &[f64]| gns_norm(&norm_ctx, &norm_coords.to_element(x)).unwrap_or(f64::INFINITY);

    family
        .graphs
        .iter()
        .zip(&family.labels)
        .map(|(g, &label)| {
            let dd = Arc::new(DirectedDouble::new(g));
            let map = directed_edge_map(&limit_dd, &dd, k)
                .ok_or_else(|| Error::NotConvergent(format!("member {label}: no ball isomorphism")))?;
            let ctx = GnsContext::new(dd, params.depth, k, crate::DEFAULT_BUDGET)?;
            let member_coords = coords.map_words(|w| translate(&map, w));
            let member_degree: Vec<SelfAdjointCoords> =
                per_degree.iter().map(|c| c.map_words(|w| translate(&map, w))).collect();
            let mut norm_distortion = 0.0f64;
            for (x, &n0) in units.iter().zip(&limit_norms) {
                norm_distortion = norm_distortion.max((gns_norm(&ctx, &member_coords.to_element(x))? - n0).abs());
            }
            let mut lip_distortion = 0.0f64;
            for ((j, x), &l0) in homogeneous.iter().zip(&limit_lips) {
                lip_distortion = lip_distortion.max((lip(&ctx, &member_degree[*j].to_element(x))? - l0).abs());
            }
            let cloud = sample_lip_ball(&ctx, &member_coords, Seminorm::Adjusted, params.samples, params.seed)?;
            let body = ConvexBody::from_cloud(&ctx, &cloud);
            let h = hausdorff_distance(&body, &limit_body, &norm, params.tol)?;
            let mut flags = Vec::new();
            if !h.failures.is_empty() {
                flags.push(format!("{} projections hit the step limit", h.failures.len()));
            }
            Ok(ConvergenceReport {
                n: label,
                cutoff: k,
                norm_distortion,
                lip_distortion,
                ball_distance: h.value,
                distq_upper: 2.0 * h.value,
                samples: params.samples,
                seed: params.seed,
                flags,
            })
        })
        .collect()
}

/// Upper estimates of `dist_H(C_m, C_top)` for each `m` in ascending `ms`,
/// where `C_m` is the adjusted-Lip unit ball of elements of degree `<= m`.
///
/// `points` are samples of `C_top`. Since `C_m` contains the truncation
/// `x_{<=m}` of every `x` in `C_top` and grows with `m`, each point's
/// distance is bounded by the smallest tail norm seen so far; the other
/// one-sided distance is zero.
pub fn filtration_distances(ctx: &GnsContext, points: &[AlgebraElement], ms: &[usize]) -> Result<Vec<f64>> {
    let opts = LanczosOptions { tol: 1e-8, ..Default::default() };
    let per_point: Vec<Vec<f64>> = points
        .par_iter()
        .map(|x| {
            let mut best = f64::INFINITY;
            ms.iter()
                .map(|&m| {
                    let tail = x.sub(&x.truncate(m));
                    let d = if tail.is_zero() {
                        0.0
                    } else {
                        largest_singular_value(ctx.realize(&tail)?.matrix(), None, opts).value
                    };
                    best = best.min(d);
                    Ok(best)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..ms.len()).map(|j| per_point.iter().map(|p| p[j]).fold(0.0, f64::max)).collect())
}

/// Random self-adjoint element with adjusted Lip norm one: for each degree in
/// `degrees`, a random combination of `loops_per_degree` random loops (and
/// their opposites) scaled to `L = 1`, mixed with random convex weights.
pub fn sample_unit_adjusted(
    ctx: &GnsContext,
    degrees: &[usize],
    loops_per_degree: usize,
    seed: u64,
    index: u64,
) -> Result<AlgebraElement> {
    use rand::Rng;
    let mut rng = item_rng(seed, 5, index);
    let weights: Vec<f64> = degrees.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = weights.iter().sum();
    let mut a = AlgebraElement::zero();
    for (&k, w) in degrees.iter().zip(&weights) {
        let range = ctx.basis().degree_range(k);
        if range.is_empty() {
            continue;
        }
        let loops: Vec<Vec<usize>> =
            (0..loops_per_degree).map(|_| ctx.basis().path(rng.random_range(range.clone())).edges.clone()).collect();
        let mut with_opposites = loops.clone();
        with_opposites.extend(loops.iter().map(|w| ctx.double().opposite_path(w)));
        with_opposites.sort();
        with_opposites.dedup();
        let coords = SelfAdjointCoords::new(ctx.double(), &with_opposites);
        let x = coords.to_element(&gaussian_direction(&mut rng, coords.dim()));
        let l = lip(ctx, &x)?;
        if !(l > 0.0) {
            return Err(Error::DegenerateDirection);
        }
        a = a.add(&x.scale(crate::Complex64::new(w / (total * l), 0.0)));
    }
    Ok(a)
}
