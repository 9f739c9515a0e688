//! The Temperley-Lieb-Jones graded algebra: non-crossing pairings with the
//! strand-capping product, its trace and Gram matrices, the derivation into
//! the trivalent module and its adjoint, and loop-count dimensions.
//!
//! A pairing on `n` boundary points (numbered left to right) is stored as the
//! partner of each point. The loop parameter only enters as a power.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::graph::DirectedDouble;
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NcPairing {
    pub partner: Vec<usize>,
}

impl NcPairing {
    pub fn empty() -> Self {
        Self { partner: Vec::new() }
    }

    /// Two adjacent points joined.
    pub fn cup() -> Self {
        Self { partner: vec![1, 0] }
    }

    pub fn points(&self) -> usize {
        self.partner.len()
    }

    pub fn is_valid(&self) -> bool {
        let n = self.partner.len();
        let involution = (0..n).all(|i| self.partner[i] < n && self.partner[i] != i && self.partner[self.partner[i]] == i);
        involution
            && (0..n).all(|a| {
                let b = self.partner[a];
                (0..n).all(|c| {
                    let d = self.partner[c];
                    !(a < c && c < b && b < d)
                })
            })
    }

    /// Mirror image: point `i` goes to `n - 1 - i`.
    pub fn mirror(&self) -> Self {
        let n = self.partner.len();
        Self { partner: (0..n).map(|i| n - 1 - self.partner[n - 1 - i]).collect() }
    }
}

/// All non-crossing pairings of `n` points in lexicographic order of partners.
/// Odd `n` has none.
pub fn enumerate_pairings(n: usize) -> Vec<NcPairing> {
    if n % 2 == 1 {
        return Vec::new();
    }
    let mut out: Vec<NcPairing> =
        interval_pairings(0, n).into_iter().map(|partner| NcPairing { partner }).collect();
    out.sort();
    out
}

/// Pairings of the points `lo..hi`, as partner lists indexed from `lo`.
fn interval_pairings(lo: usize, hi: usize) -> Vec<Vec<usize>> {
    if lo >= hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for j in (lo + 1..hi).step_by(2) {
        let inner = interval_pairings(lo + 1, j);
        let outer = interval_pairings(j + 1, hi);
        for a in &inner {
            for b in &outer {
                let mut partner = Vec::with_capacity(hi - lo);
                partner.push(j);
                partner.extend_from_slice(a);
                partner.push(lo);
                partner.extend_from_slice(b);
                out.push(partner);
            }
        }
    }
    out
}

/// Catalan number `C_n`.
pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// Glues the last `j` points of `x` to the first `j` points of `y`
/// (nested, `x`'s point `m-1-i` to `y`'s point `i`). Returns the resulting
/// pairing and the number of closed loops.
pub fn cap(x: &NcPairing, y: &NcPairing, j: usize) -> (NcPairing, usize) {
    let (m, n) = (x.points(), y.points());
    assert!(j <= m.min(n));
    // Combined numbering: x points 0..m, y points m..m+n.
    let total = m + n;
    let inner = |p: usize| if p < m { x.partner[p] } else { m + y.partner[p - m] };
    let glued = |p: usize| -> Option<usize> {
        if p < m && p >= m - j {
            Some(m + (m - 1 - p))
        } else if p >= m && p - m < j {
            Some(m - 1 - (p - m))
        } else {
            None
        }
    };
    let open: Vec<usize> = (0..total).filter(|&p| glued(p).is_none()).collect();
    let mut out_index = vec![usize::MAX; total];
    for (k, &p) in open.iter().enumerate() {
        out_index[p] = k;
    }
    let mut visited = vec![false; total];
    let mut partner = vec![0; open.len()];
    for &p in &open {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let mut q = inner(p);
        visited[q] = true;
        while let Some(r) = glued(q) {
            visited[r] = true;
            q = inner(r);
            visited[q] = true;
        }
        partner[out_index[p]] = out_index[q];
        partner[out_index[q]] = out_index[p];
    }
    let mut loops = 0;
    for p in 0..total {
        if visited[p] {
            continue;
        }
        loops += 1;
        let mut q = p;
        loop {
            visited[q] = true;
            let r = inner(q);
            visited[r] = true;
            q = glued(r).expect("closed strands only meet glued points");
            if q == p {
                break;
            }
        }
    }
    (NcPairing { partner }, loops)
}

/// Finite linear combination of pairings at a fixed loop parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TlElement {
    pub delta: f64,
    pub terms: BTreeMap<NcPairing, C64>,
}

impl TlElement {
    pub fn zero(delta: f64) -> Self {
        Self { delta, terms: BTreeMap::new() }
    }

    pub fn basis(p: NcPairing, delta: f64) -> Self {
        let mut e = Self::zero(delta);
        e.add_term(p, C64::new(1.0, 0.0));
        e
    }

    pub fn unit(delta: f64) -> Self {
        Self::basis(NcPairing::empty(), delta)
    }

    pub fn add_term(&mut self, p: NcPairing, c: C64) {
        let e = self.terms.entry(p).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        }
    }

    pub fn coefficient(&self, p: &NcPairing) -> C64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(NcPairing::points).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn add(&self, other: &TlElement) -> TlElement {
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(p.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> TlElement {
        let mut out = Self::zero(self.delta);
        for (p, c) in &self.terms {
            out.add_term(p.clone(), c * s);
        }
        out
    }

    pub fn sub(&self, other: &TlElement) -> TlElement {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn star(&self) -> TlElement {
        let mut out = Self::zero(self.delta);
        for (p, c) in &self.terms {
            out.add_term(p.mirror(), c.conj());
        }
        out
    }

    /// The `j`-capped part of the product: `sum x_p y_q delta^loops (p cap_j q)`.
    pub fn wedge(&self, other: &TlElement, j: usize) -> TlElement {
        let mut out = Self::zero(self.delta);
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                if j <= p.points().min(q.points()) {
                    let (r, loops) = cap(p, q, j);
                    out.add_term(r, a * b * self.delta.powi(loops as i32));
                }
            }
        }
        out
    }

    /// Sum of all capped parts.
    pub fn star_product(&self, other: &TlElement) -> TlElement {
        let max_j = self.degrees().last().copied().unwrap_or(0).min(other.degrees().last().copied().unwrap_or(0));
        (0..=max_j).fold(Self::zero(self.delta), |acc, j| acc.add(&self.wedge(other, j)))
    }

    pub fn trace(&self) -> C64 {
        self.coefficient(&NcPairing::empty())
    }

    /// Number operator: multiplies each diagram by its number of points.
    pub fn number(&self) -> TlElement {
        let mut out = Self::zero(self.delta);
        for (p, c) in &self.terms {
            out.add_term(p.clone(), c * p.points() as f64);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }
}

pub fn tl_trace(x: &TlElement) -> C64 {
    x.trace()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSymmetry {
    pub max_points: usize,
    pub delta: f64,
    pub pairs_checked: usize,
    pub max_difference: f64,
}

/// Largest `|tr(x * y) - tr(y * x)|` over basis pairs with at most `max_points` points.
pub fn trace_symmetry(max_points: usize, delta: f64) -> TraceSymmetry {
    let basis: Vec<TlElement> = (0..=max_points)
        .step_by(2)
        .flat_map(enumerate_pairings)
        .map(|p| TlElement::basis(p, delta))
        .collect();
    let max_difference = basis
        .par_iter()
        .map(|x| {
            basis
                .iter()
                .map(|y| (x.star_product(y).trace() - y.star_product(x).trace()).norm())
                .fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    TraceSymmetry { max_points, delta, pairs_checked: basis.len() * basis.len(), max_difference }
}

/// `<p, q> = tr(q^* p)` on the basis of `n`-point pairings: `delta^loops`.
pub fn gram_matrix(n: usize, delta: f64) -> DMatrix<f64> {
    let basis = enumerate_pairings(n);
    let entries: Vec<f64> = basis
        .par_iter()
        .flat_map_iter(|q| {
            basis.iter().map(move |p| {
                let (r, loops) = cap(&q.mirror(), p, n);
                debug_assert_eq!(r.points(), 0);
                delta.powi(loops as i32)
            })
        })
        .collect();
    // Rows indexed by p, columns by q.
    DMatrix::from_vec(basis.len(), basis.len(), entries)
}

/// Boundary labels of a trivalent diagram read clockwise: `top` points left
/// to right, the single right point, then `bottom` points right to left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    Top(usize),
    Right,
    Bottom(usize),
}

/// Trivalent component `(top, bottom)` of the derivation module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TrivalentIndex {
    pub top: usize,
    pub bottom: usize,
}

impl TrivalentIndex {
    /// Label of each of the `top + bottom + 1` boundary points in order.
    pub fn labels(&self) -> Vec<Label> {
        let mut l: Vec<Label> = (0..self.top).map(Label::Top).collect();
        l.push(Label::Right);
        l.extend((0..self.bottom).rev().map(Label::Bottom));
        l
    }
}

/// Closed loops formed by two diagrams on the same labelled boundary glued
/// label to label.
pub fn glued_loops(p: &NcPairing, q: &NcPairing, labels: &[Label]) -> usize {
    let n = p.points();
    let position: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut visited = vec![false; n];
    let mut loops = 0;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        loops += 1;
        let mut a = start;
        loop {
            visited[a] = true;
            let b = p.partner[a];
            visited[b] = true;
            // Cross to q at the same label, follow q, come back.
            let c = q.partner[position[&labels[b]]];
            a = c;
            if a == start {
                break;
            }
        }
    }
    loops
}

/// Component-indexed element of the trivalent module.
pub type TrivalentElement = BTreeMap<TrivalentIndex, TlElement>;

/// `dx`: for each `j < m`, `x` with its boundary re-marked as `j` top points,
/// the right point, and `m - j - 1` bottom points.
pub fn derivation(x: &TlElement) -> TrivalentElement {
    let mut out = TrivalentElement::new();
    for (p, c) in &x.terms {
        let m = p.points();
        for j in 0..m {
            out.entry(TrivalentIndex { top: j, bottom: m - j - 1 })
                .or_insert_with(|| TlElement::zero(x.delta))
                .add_term(p.clone(), *c);
        }
    }
    out
}

/// Gram matrix of one trivalent component on the pairing basis.
pub fn trivalent_gram(index: TrivalentIndex, delta: f64) -> DMatrix<f64> {
    let labels = index.labels();
    let basis = enumerate_pairings(labels.len());
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| delta.powi(glued_loops(&basis[i], &basis[j], &labels) as i32))
}

fn coefficients(x: &TlElement, basis: &[NcPairing]) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_iterator(basis.len(), basis.iter().map(|p| x.coefficient(p)))
}

/// Adjoint of the derivation on `m`-point diagrams:
/// `G^{-1} sum_components K_c xi_c`, with `G` the trace Gram matrix and `K_c`
/// the component Gram matrices.
pub fn derivation_adjoint(xi: &TrivalentElement, m: usize, delta: f64) -> Result<TlElement> {
    let basis = enumerate_pairings(m);
    let g = gram_matrix(m, delta).map(|v| C64::new(v, 0.0));
    let mut rhs = nalgebra::DVector::from_element(basis.len(), C64::new(0.0, 0.0));
    for (index, comp) in xi {
        if index.top + index.bottom + 1 != m {
            continue;
        }
        let k = trivalent_gram(*index, delta).map(|v| C64::new(v, 0.0));
        rhs += k * coefficients(comp, &basis);
    }
    let lu = g.lu();
    let sol = lu.solve(&rhs).ok_or(Error::SingularGram(m))?;
    let mut out = TlElement::zero(delta);
    for (p, c) in basis.into_iter().zip(sol.iter()) {
        if c.norm() > 0.0 {
            out.add_term(p, *c);
        }
    }
    Ok(out)
}

/// Matrix of `d^* d` on the `m`-point basis (columns are images of basis vectors).
pub fn number_from_derivation(m: usize, delta: f64) -> Result<DMatrix<C64>> {
    let basis = enumerate_pairings(m);
    let mut out = DMatrix::from_element(basis.len(), basis.len(), C64::new(0.0, 0.0));
    for (col, p) in basis.iter().enumerate() {
        let image = derivation_adjoint(&derivation(&TlElement::basis(p.clone(), delta)), m, delta)?;
        for (row, q) in basis.iter().enumerate() {
            out[(row, col)] = image.coefficient(q);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumberCheck {
    pub m: usize,
    pub delta: f64,
    pub dim: usize,
    pub max_deviation: f64,
    pub spectrum: Vec<f64>,
}

/// `d^* d - m I` on `m`-point diagrams.
pub fn check_number_operator(m: usize, delta: f64) -> Result<NumberCheck> {
    let n = number_from_derivation(m, delta)?;
    let dim = n.nrows();
    let mut dev = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { m as f64 } else { 0.0 };
            dev = dev.max((n[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    let mut spectrum: Vec<f64> = n.map(|z| z.re).complex_eigenvalues().iter().map(|z| z.re).collect();
    spectrum.sort_by(f64::total_cmp);
    Ok(NumberCheck { m, delta, dim, max_deviation: dev, spectrum })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandIdentityReport {
    pub m: usize,
    pub max_points: usize,
    pub pairs_checked: usize,
    pub max_difference: f64,
    /// Every component of `[N, x] y` has within `m` points of `y`.
    pub band: bool,
    pub holds: bool,
}

/// `[N, x] y = sum_j (m - 2j) (x cap_j y)` for homogeneous `x` of `m` points
/// and every basis `y` of at most `max_points` points.
pub fn commutator_band_identity(x: &TlElement, max_points: usize, tol: f64) -> Result<BandIdentityReport> {
    let degrees = x.degrees();
    if degrees.len() > 1 {
        return Err(Error::NotHomogeneous(degrees));
    }
    let m = degrees.first().copied().unwrap_or(0);
    if max_points < m {
        return Err(Error::InsufficientDepth { needed: m, depth: max_points });
    }
    let ys: Vec<NcPairing> = (0..=max_points).step_by(2).flat_map(enumerate_pairings).collect();
    let results: Vec<(f64, bool)> = ys
        .par_iter()
        .map(|q| {
            let n = q.points();
            let y = TlElement::basis(q.clone(), x.delta);
            let xy = x.star_product(&y);
            let lhs = xy.number().sub(&x.star_product(&y.number()));
            let rhs = (0..=m.min(n)).fold(TlElement::zero(x.delta), |acc, j| {
                acc.add(&x.wedge(&y, j).scale(C64::new(m as f64 - 2.0 * j as f64, 0.0)))
            });
            let band = lhs.degrees().iter().all(|&d| d.abs_diff(n) <= m);
            (lhs.sub(&rhs).max_abs(), band)
        })
        .collect();
    let max_difference = results.iter().fold(0.0f64, |a, r| a.max(r.0));
    let band = results.iter().all(|r| r.1);
    Ok(BandIdentityReport {
        m,
        max_points,
        pairs_checked: ys.len(),
        max_difference,
        band,
        holds: band && max_difference <= tol,
    })
}

/// Number of loops of length `2n` at the basepoint: `<A^{2n} e, e>`.
pub fn loop_count_dimension(g: &WeightedGraph, n: usize) -> u128 {
    let dd = DirectedDouble::new(g);
    let a = dd.adjacency_counts();
    let base = g.basepoint();
    let mut v = vec![0u128; g.num_vertices()];
    v[base] = 1;
    for _ in 0..2 * n {
        let mut next = vec![0u128; v.len()];
        for (i, row) in a.iter().enumerate() {
            if v[i] == 0 {
                continue;
            }
            for (j, &c) in row.iter().enumerate() {
                next[j] = next[j].saturating_add(v[i].saturating_mul(c));
            }
        }
        v = next;
    }
    v[base]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRow {
    pub n: usize,
    pub dim: u128,
    pub term: f64,
    pub bound_term: f64,
    pub partial_sum: f64,
    pub partial_bound: f64,
}

/// Partial sums of `sum dim_n e^{-t n^2}` against `sum delta^{2n} e^{-t n^2}`,
/// with `dim_n` the loop counts of `g`.
pub fn theta_sum(g: &WeightedGraph, t: f64, n_max: usize, delta: f64) -> Result<Vec<ThetaRow>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let mut rows = Vec::with_capacity(n_max + 1);
    let (mut s, mut b) = (0.0, 0.0);
    for n in 0..=n_max {
        let dim = loop_count_dimension(g, n);
        let damp = (-t * (n * n) as f64).exp();
        let term = dim as f64 * damp;
        let bound_term = delta.powi(2 * n as i32) * damp;
        s += term;
        b += bound_term;
        rows.push(ThetaRow { n, dim, term, bound_term, partial_sum: s, partial_bound: b });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bouquet, dynkin_a_infinity};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn brute_force_pairings(n: usize) -> Vec<NcPairing> {
        // Every involution without fixed points, filtered for crossings.
        fn go(partner: &mut Vec<Option<usize>>, out: &mut Vec<NcPairing>) {
            let Some(i) = partner.iter().position(Option::is_none) else {
                let p = NcPairing { partner: partner.iter().map(|x| x.unwrap()).collect() };
                if p.is_valid() {
                    out.push(p);
                }
                return;
            };
            for j in i + 1..partner.len() {
                if partner[j].is_none() {
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                    go(partner, out);
                    partner[i] = None;
                    partner[j] = None;
                }
            }
        }
        let mut out = Vec::new();
        if n % 2 == 0 {
            go(&mut vec![None; n], &mut out);
        }
        out.sort();
        out
    }

    #[test]
    fn pairing_counts() {
        assert_eq!(enumerate_pairings(2).len(), 1);
        assert_eq!(enumerate_pairings(4).len(), 2);
        assert_eq!(enumerate_pairings(8).len(), 14);
        assert!(enumerate_pairings(5).is_empty());
        assert_eq!(enumerate_pairings(0), vec![NcPairing::empty()]);
        for n in 0..=10 {
            assert_eq!(enumerate_pairings(n), brute_force_pairings(n));
            if n % 2 == 0 {
                assert_eq!(enumerate_pairings(n).len() as u128, catalan(n / 2));
            }
        }
    }

    #[test]
    fn cup_squared() {
        let d = 2.5;
        let cup = TlElement::basis(NcPairing::cup(), d);
        let sq = cup.star_product(&cup);
        assert_eq!(sq.degrees(), vec![0, 2, 4]);
        assert_eq!(sq.trace(), C64::new(d, 0.0));
        assert_eq!(sq.coefficient(&NcPairing::cup()), C64::new(1.0, 0.0));
        assert_eq!(TlElement::unit(d).star_product(&cup), cup);
        assert_eq!(tl_trace(&cup), C64::new(0.0, 0.0));
        assert_eq!(tl_trace(&TlElement::unit(d)), C64::new(1.0, 0.0));
    }

    #[test]
    fn small_gram_matrices() {
        let d = 1.7;
        assert_eq!(gram_matrix(2, d), DMatrix::from_row_slice(1, 1, &[d]));
        assert_eq!(gram_matrix(4, d), DMatrix::from_row_slice(2, 2, &[d * d, d, d, d * d]));
        for n in [2, 4, 6, 8] {
            let eig = gram_matrix(n, 2.0).symmetric_eigenvalues();
            assert!(eig.iter().all(|&v| v > 1e-9), "{n}: {eig}");
        }
    }

    #[test]
    fn trivalent_gram_agrees_with_trace_gram() {
        // Same cyclic boundary, so label gluing reproduces the trace pairing.
        assert_eq!(trivalent_gram(TrivalentIndex { top: 1, bottom: 1 }, 2.0).nrows(), 0);
        for m in [2, 4, 6] {
            for top in 0..m {
                let idx = TrivalentIndex { top, bottom: m - 1 - top };
                assert_eq!(trivalent_gram(idx, 2.5), gram_matrix(m, 2.5));
            }
        }
    }

    #[test]
    fn number_operator_from_derivation() {
        for delta in [2.0, 2.5] {
            for m in [0, 2, 4, 6] {
                let c = check_number_operator(m, delta).unwrap();
                assert!(c.max_deviation < 1e-9, "{c:?}");
            }
        }
        assert!(derivation(&TlElement::unit(2.0)).is_empty());
        assert_eq!(derivation(&TlElement::basis(NcPairing::cup(), 2.0)).len(), 2);
    }

    #[test]
    fn band_identity_for_cup() {
        let r = commutator_band_identity(&TlElement::basis(NcPairing::cup(), 2.0), 6, 1e-10).unwrap();
        assert!(r.holds, "{r:?}");
        let r = commutator_band_identity(&TlElement::unit(2.0), 4, 1e-10).unwrap();
        assert!(r.holds && r.max_difference == 0.0);
    }

    #[test]
    fn traciality_on_basis() {
        let r = trace_symmetry(6, 2.0);
        assert_eq!(r.pairs_checked, 9 * 9);
        assert!(r.max_difference < 1e-10, "{r:?}");
    }

    #[test]
    fn loop_counts() {
        let g = dynkin_a_infinity(10, 1.0).unwrap();
        assert_eq!(loop_count_dimension(&g, 0), 1);
        assert_eq!(loop_count_dimension(&g, 3), 5);
        for n in 0..=6 {
            assert_eq!(loop_count_dimension(&g, n), enumerate_pairings(2 * n).len() as u128);
        }
        assert_eq!(loop_count_dimension(&bouquet(2).unwrap(), 1), 4);
        for t in [0.1, 0.5, 1.0] {
            for row in theta_sum(&g, t, 8, 2.0).unwrap() {
                assert!(row.partial_sum <= row.partial_bound);
            }
        }
    }

    #[test]
    fn cup_moments_match_loop_algebra() {
        use crate::loops::{AlgebraElement, GnsContext};
        use std::sync::Arc;
        let delta: f64 = 2.0;
        let ctx = GnsContext::new(Arc::new(DirectedDouble::new(&dynkin_a_infinity(8, 1.0).unwrap())), 12, 2, 1 << 20).unwrap();
        let y = ctx.realize(&AlgebraElement::wick(vec![0, 1]).scale(C64::new(delta.sqrt(), 0.0))).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); ctx.basis().len()];
        v[0] = C64::new(1.0, 0.0);
        let cup = TlElement::basis(NcPairing::cup(), delta);
        let mut power = TlElement::unit(delta);
        for _ in 1..=6 {
            v = y.apply(&v);
            power = power.star_product(&cup);
            assert_abs_diff_eq!(v[0].re, power.trace().re, epsilon = 1e-9);
        }
    }

    fn pairing_strategy(max_half: usize) -> impl Strategy<Value = NcPairing> {
        (0..=max_half).prop_flat_map(|h| {
            let all = enumerate_pairings(2 * h);
            (0..all.len()).prop_map(move |i| all[i].clone())
        })
    }

    proptest! {
        #[test]
        fn product_is_associative(p in pairing_strategy(3), q in pairing_strategy(3), r in pairing_strategy(3)) {
            let d = 2.3;
            let (x, y, z) = (TlElement::basis(p, d), TlElement::basis(q, d), TlElement::basis(r, d));
            let lhs = x.star_product(&y).star_product(&z);
            let rhs = x.star_product(&y.star_product(&z));
            prop_assert!(lhs.sub(&rhs).max_abs() < 1e-10);
        }

        #[test]
        fn capping_stays_non_crossing(p in pairing_strategy(4), q in pairing_strategy(4), j in 0usize..8) {
            let j = j.min(p.points()).min(q.points());
            let (r, _) = cap(&p, &q, j);
            prop_assert!(r.is_valid());
            prop_assert_eq!(r.points(), p.points() + q.points() - 2 * j);
        }

        #[test]
        fn star_is_antimultiplicative(p in pairing_strategy(3), q in pairing_strategy(3)) {
            let d = 2.0;
            let (x, y) = (TlElement::basis(p, d), TlElement::basis(q, d));
            let lhs = x.star_product(&y).star();
            let rhs = y.star().star_product(&x.star());
            prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12);
        }
    }
}
