//! Loops at the basepoint, Wick words, the change of basis between the
//! X- and Y-expansions, and the GNS representation on the loop space.
//!
//! Elements are stored by their Y-coefficients: `a = sum_sigma c_sigma Y_sigma`,
//! so `a` applied to the empty loop is the coefficient vector itself.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{edge_element, vertex_projection, GradedBasis, GradedOperator, LoopBasis, Path, PathBasis};
use crate::graph::DirectedDouble;
use crate::linalg::{SparseMatrix, C64};

const ONE: C64 = C64::new(1.0, 0.0);

/// One splitting `sigma = rho kappa` contributing `coefficient l(rho) l(kappa^op)^*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WickTerm {
    pub left: Vec<usize>,
    pub right_opposite: Vec<usize>,
    pub coefficient: f64,
}

/// The formal expansion of a Wick word.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WickWord {
    pub word: Path,
    pub terms: Vec<WickTerm>,
}

impl WickWord {
    pub fn new(dd: &DirectedDouble, word: &Path) -> Result<Self> {
        dd.check_path(word.start, &word.edges)?;
        let terms = (0..=word.len())
            .map(|j| {
                let (rho, kappa) = word.edges.split_at(j);
                WickTerm {
                    left: rho.to_vec(),
                    right_opposite: dd.opposite_path(kappa),
                    coefficient: dd.path_weight(rho) / dd.path_weight(kappa),
                }
            })
            .collect();
        Ok(Self { word: word.clone(), terms })
    }

    /// Action on one basis path (orthonormal coordinates).
    pub fn apply_to(&self, dd: &DirectedDouble, tau: &Path) -> Vec<(Path, f64)> {
        if tau.start != self.word.end(dd) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for term in &self.terms {
            let k = term.right_opposite.len();
            if tau.edges.len() >= k && tau.edges[..k] == term.right_opposite[..] {
                let mut edges = term.left.clone();
                edges.extend_from_slice(&tau.edges[k..]);
                out.push((Path { start: self.word.start, edges }, term.coefficient));
            }
        }
        out
    }

    /// Direct realization on a truncated basis. Entries are exact; columns of
    /// degree at most `depth - |word|` are complete.
    pub fn realize(&self, dd: &DirectedDouble, basis: &GradedBasis) -> GradedOperator {
        let n = basis.len();
        let mut triplets = Vec::new();
        for (i, tau) in basis.paths().iter().enumerate() {
            for (p, c) in self.apply_to(dd, tau) {
                if let Some(j) = basis.index_of(&p) {
                    triplets.push((j, i, C64::new(c, 0.0)));
                }
            }
        }
        let k = self.word.len() as isize;
        basis.operator(SparseMatrix::from_triplets(n, n, triplets), -k, k, basis.depth() as isize - k)
    }
}

/// `Y_sigma` realized from the formal splitting sum.
pub fn wick_direct(dd: &DirectedDouble, word: &Path, basis: &GradedBasis) -> Result<GradedOperator> {
    if word.len() > basis.depth() {
        return Err(Error::InsufficientDepth { needed: word.len(), depth: basis.depth() });
    }
    Ok(WickWord::new(dd, word)?.realize(dd, basis))
}

/// `Y_sigma` from `X_e Y_tau = Y_{e tau} + [tau starts with e^op] a_{e^op}^2 Y_{tau'}`.
pub fn wick_recursive(dd: &DirectedDouble, word: &Path, basis: &PathBasis) -> Result<GradedOperator> {
    dd.check_path(word.start, &word.edges)?;
    if word.len() > basis.depth() {
        return Err(Error::InsufficientDepth { needed: word.len(), depth: basis.depth() });
    }
    let k = word.len();
    let end = word.end(dd);
    // suffix[i] = Y of word.edges[i..]
    let mut suffix: Vec<Option<GradedOperator>> = vec![None; k + 1];
    suffix[k] = Some(vertex_projection(dd, basis, end));
    for i in (0..k).rev() {
        let e = word.edges[i];
        let x = edge_element(dd, basis, e)?;
        let y = if i + 1 == k {
            x
        } else {
            let mut y = x.mul(suffix[i + 1].as_ref().unwrap());
            if word.edges[i + 1] == dd.opposite(e) {
                let a = dd.path_weight(&[dd.opposite(e)]);
                y = y.sub(&suffix[i + 2].as_ref().unwrap().scale(C64::new(a * a, 0.0)));
            }
            y
        };
        suffix[i] = Some(y);
    }
    Ok(suffix[0].take().unwrap())
}

/// Compares the two realizations on their common exact columns.
pub fn wick_consistency(dd: &DirectedDouble, word: &Path, basis: &PathBasis, tol: f64) -> Result<f64> {
    let direct = wick_direct(dd, word, basis)?;
    let recursive = wick_recursive(dd, word, basis)?;
    let through = direct.exact_through().min(recursive.exact_through());
    let diff = direct.max_diff_through(&recursive, through);
    if diff > tol {
        return Err(Error::WickMismatch { word: word.edges.clone(), max_diff: diff });
    }
    Ok(diff)
}

/// Finite linear combination of Wick words of loops at the basepoint.
/// Keys are edge sequences; the empty sequence is the basepoint projection.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlgebraElement {
    coefficients: BTreeMap<Vec<usize>, C64>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit() -> Self {
        Self::wick(Vec::new())
    }

    pub fn wick(word: Vec<usize>) -> Self {
        Self::from_terms([(word, ONE)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<usize>, C64)>) -> Self {
        let mut a = Self::zero();
        for (w, c) in terms {
            a.add_term(w, c);
        }
        a
    }

    pub fn add_term(&mut self, word: Vec<usize>, c: C64) {
        let entry = self.coefficients.entry(word).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if *entry == C64::new(0.0, 0.0) {
            self.coefficients.retain(|_, v| *v != C64::new(0.0, 0.0));
        }
    }

    pub fn coefficient(&self, word: &[usize]) -> C64 {
        self.coefficients.get(word).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &C64)> {
        self.coefficients.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Largest loop length with a nonzero coefficient (0 for the zero element).
    pub fn degree(&self) -> usize {
        self.coefficients.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.coefficients.keys().map(Vec::len).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn homogeneous_degree(&self) -> Result<usize> {
        match self.degrees()[..] {
            [] => Ok(0),
            [d] => Ok(d),
            ref ds => Err(Error::NotHomogeneous(ds.to_vec())),
        }
    }

    pub fn component(&self, k: usize) -> AlgebraElement {
        Self { coefficients: self.coefficients.iter().filter(|(w, _)| w.len() == k).map(|(w, c)| (w.clone(), *c)).collect() }
    }

    /// Components with degree at most `k`.
    pub fn truncate(&self, k: usize) -> AlgebraElement {
        Self { coefficients: self.coefficients.iter().filter(|(w, _)| w.len() <= k).map(|(w, c)| (w.clone(), *c)).collect() }
    }

    pub fn star(&self, dd: &DirectedDouble) -> AlgebraElement {
        Self::from_terms(self.coefficients.iter().map(|(w, c)| (dd.opposite_path(w), c.conj())))
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut a = self.clone();
        for (w, c) in &other.coefficients {
            a.add_term(w.clone(), *c);
        }
        a
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> AlgebraElement {
        Self::from_terms(self.coefficients.iter().map(|(w, c)| (w.clone(), c * s)))
    }

    /// Exact product, computed as the image of the vacuum.
    pub fn mul(&self, other: &AlgebraElement, dd: &DirectedDouble) -> AlgebraElement {
        let base = dd.graph().basepoint();
        let mut out = AlgebraElement::zero();
        for (w, c) in &self.coefficients {
            let word = WickWord::new(dd, &Path { start: base, edges: w.clone() }).expect("stored loops are paths");
            for (v, d) in &other.coefficients {
                for (p, x) in word.apply_to(dd, &Path { start: base, edges: v.clone() }) {
                    out.add_term(p.edges, c * d * x);
                }
            }
        }
        out
    }

    /// Vacuum expectation: the coefficient of the empty loop.
    pub fn tr0(&self) -> C64 {
        self.coefficient(&[])
    }

    pub fn l2_norm(&self) -> f64 {
        self.coefficients.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `loop id -> [re, im]` over the given basis.
    pub fn to_json(&self, basis: &LoopBasis) -> serde_json::Value {
        let base = basis.path(0).start;
        let map: BTreeMap<String, [f64; 2]> = self
            .coefficients
            .iter()
            .map(|(w, c)| {
                let id = basis
                    .index_of(&Path { start: base, edges: w.clone() })
                    .map_or_else(|| format!("{w:?}"), |i| i.to_string());
                (id, [c.re, c.im])
            })
            .collect();
        serde_json::to_value(map).expect("serializable")
    }
}

fn apply_edge_element(dd: &DirectedDouble, edge: usize, v: &BTreeMap<Path, C64>) -> BTreeMap<Path, C64> {
    let op = dd.opposite(edge);
    let (up, down) = (dd.path_weight(&[edge]), dd.path_weight(&[op]));
    let mut out: BTreeMap<Path, C64> = BTreeMap::new();
    for (p, c) in v {
        if p.start == dd.target(edge) {
            let mut edges = vec![edge];
            edges.extend_from_slice(&p.edges);
            *out.entry(Path { start: dd.source(edge), edges }).or_default() += c * up;
        }
        if p.edges.first() == Some(&op) {
            let rest = Path { start: dd.target(op), edges: p.edges[1..].to_vec() };
            *out.entry(rest).or_default() += c * down;
        }
    }
    out.retain(|_, c| *c != C64::new(0.0, 0.0));
    out
}

/// Triangular maps between the X- and Y-expansions on loops of length at most `k`.
#[derive(Debug, Clone)]
pub struct ChangeOfBasis {
    pub loops: LoopBasis,
    /// Column `sigma` holds the Y-coefficients of `X_sigma`.
    pub x_to_y: DMatrix<C64>,
    /// Column `sigma` holds the X-coefficients of `Y_sigma`.
    pub y_to_x: DMatrix<C64>,
}

impl ChangeOfBasis {
    pub fn new(dd: &DirectedDouble, k: usize, budget: usize) -> Result<Self> {
        let loops = LoopBasis::new(dd, k, budget)?;
        let n = loops.len();
        let base = dd.graph().basepoint();
        let mut x_to_y = DMatrix::zeros(n, n);
        for (col, sigma) in loops.paths().iter().enumerate() {
            let mut v = BTreeMap::from([(Path::vertex(base), ONE)]);
            for &e in sigma.edges.iter().rev() {
                v = apply_edge_element(dd, e, &v);
            }
            for (p, c) in v {
                let row = loops.index_of(&p).expect("vacuum image of a loop word stays in the loop span");
                x_to_y[(row, col)] = c;
            }
        }
        let mut memo: HashMap<Path, BTreeMap<Path, C64>> = HashMap::new();
        let mut y_to_x = DMatrix::zeros(n, n);
        for (col, sigma) in loops.paths().iter().enumerate() {
            for (p, c) in y_in_x(dd, sigma, &mut memo) {
                let row = loops.index_of(&p).expect("X-expansion of a Wick word uses loops");
                y_to_x[(row, col)] = c;
            }
        }
        Ok(Self { loops, x_to_y, y_to_x })
    }

    /// Largest entry of `x_to_y * y_to_x - I` and `y_to_x * x_to_y - I`.
    pub fn roundtrip_error(&self) -> f64 {
        let id = DMatrix::<C64>::identity(self.loops.len(), self.loops.len());
        let a = &self.x_to_y * &self.y_to_x - &id;
        let b = &self.y_to_x * &self.x_to_y - &id;
        a.iter().chain(b.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Unit diagonal (to 1e-12, it is a telescoping product of edge weights)
    /// and an exact zero wherever the row loop is not shorter than the column loop.
    pub fn is_unitriangular(&self) -> bool {
        let ok = |m: &DMatrix<C64>| {
            (0..m.nrows()).all(|r| {
                (0..m.ncols()).all(|c| {
                    let (dr, dc) = (self.loops.degree(r), self.loops.degree(c));
                    if r == c {
                        (m[(r, c)] - ONE).norm() < 1e-12
                    } else if dr >= dc {
                        m[(r, c)] == C64::new(0.0, 0.0)
                    } else {
                        true
                    }
                })
            })
        };
        ok(&self.x_to_y) && ok(&self.y_to_x)
    }
}

fn y_in_x(dd: &DirectedDouble, word: &Path, memo: &mut HashMap<Path, BTreeMap<Path, C64>>) -> BTreeMap<Path, C64> {
    if let Some(v) = memo.get(word) {
        return v.clone();
    }
    let result = if word.len() <= 1 {
        BTreeMap::from([(word.clone(), ONE)])
    } else {
        let e = word.edges[0];
        let tail = Path { start: dd.target(e), edges: word.edges[1..].to_vec() };
        let mut out: BTreeMap<Path, C64> = BTreeMap::new();
        for (p, c) in y_in_x(dd, &tail, memo) {
            let mut edges = vec![e];
            edges.extend(p.edges);
            *out.entry(Path { start: word.start, edges }).or_default() += c;
        }
        if word.edges[1] == dd.opposite(e) {
            let rest = Path { start: word.start, edges: word.edges[2..].to_vec() };
            let a = dd.path_weight(&[dd.opposite(e)]);
            for (p, c) in y_in_x(dd, &rest, memo) {
                *out.entry(p).or_default() -= c * (a * a);
            }
        }
        out.retain(|_, c| *c != C64::new(0.0, 0.0));
        out
    };
    memo.insert(word.clone(), result.clone());
    result
}

/// Vacuum moments `tr0(x^j)`, `j = 0..=n`, of `x = X_{e1} ... X_{ek}`.
pub fn moments(dd: &DirectedDouble, word: &[usize], n: usize, depth: usize) -> Result<Vec<C64>> {
    let base = dd.graph().basepoint();
    dd.check_path(dd.source(*word.first().ok_or(Error::NotALoop)?), word)?;
    let needed = n * word.len();
    if depth < needed {
        return Err(Error::InsufficientDepth { needed, depth });
    }
    let basis = PathBasis::new(dd, depth, crate::DEFAULT_BUDGET)?;
    let factors: Vec<GradedOperator> = word.iter().map(|&e| edge_element(dd, &basis, e)).collect::<Result<_>>()?;
    let vac = basis.index_of(&Path::vertex(base)).unwrap();
    let mut v = vec![C64::new(0.0, 0.0); basis.len()];
    v[vac] = ONE;
    let mut out = vec![ONE];
    for _ in 0..n {
        for f in factors.iter().rev() {
            v = f.apply(&v);
        }
        out.push(v[vac]);
    }
    Ok(out)
}

/// Diagonal of the number operator on a loop basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumberOperatorData {
    pub depth: usize,
    pub diagonal: Vec<usize>,
}

pub fn number_operator(basis: &LoopBasis) -> NumberOperatorData {
    NumberOperatorData { depth: basis.depth(), diagonal: (0..basis.len()).map(|i| basis.degree(i)).collect() }
}

/// Orthogonal projection onto degree `n`.
pub fn projector(basis: &GradedBasis, n: usize) -> GradedOperator {
    let len = basis.len();
    let t = basis.degree_range(n).map(|i| (i, i, ONE)).collect();
    basis.operator(SparseMatrix::from_triplets(len, len, t), 0, 0, basis.depth() as isize)
}

/// GNS data: the loop space up to `depth`; Wick words up to `max_word` are
/// realized on first use and cached.
#[derive(Debug, Clone)]
pub struct GnsContext {
    double: Arc<DirectedDouble>,
    basis: LoopBasis,
    max_word: usize,
    words: Arc<RwLock<WordCache>>,
}

#[derive(Debug, Default)]
struct WordCache {
    entries: usize,
    words: HashMap<Vec<usize>, Arc<Vec<(usize, usize, f64)>>>,
}

/// Total cached matrix entries; words beyond this are realized on every use.
const WORD_CACHE_ENTRIES: usize = 8_000_000;

impl GnsContext {
    pub fn new(double: Arc<DirectedDouble>, depth: usize, max_word: usize, budget: usize) -> Result<Self> {
        let basis = LoopBasis::new(&double, depth, budget)?;
        let max_word = max_word.min(depth);
        Ok(Self { double, basis, max_word, words: Default::default() })
    }

    fn word_entries(&self, w: &[usize]) -> Result<Arc<Vec<(usize, usize, f64)>>> {
        if let Some(t) = self.words.read().expect("word cache poisoned").words.get(w) {
            return Ok(t.clone());
        }
        let p = Path { start: self.double.graph().basepoint(), edges: w.to_vec() };
        if self.basis.index_of(&p).is_none() {
            return Err(Error::NotALoop);
        }
        let word = WickWord::new(&self.double, &p)?;
        let mut t = Vec::new();
        for (i, tau) in self.basis.paths().iter().enumerate() {
            for (q, c) in word.apply_to(&self.double, tau) {
                if let Some(j) = self.basis.index_of(&q) {
                    t.push((j, i, c));
                }
            }
        }
        let t = Arc::new(t);
        let mut cache = self.words.write().expect("word cache poisoned");
        if cache.entries + t.len() <= WORD_CACHE_ENTRIES {
            cache.entries += t.len();
            cache.words.insert(w.to_vec(), t.clone());
        }
        Ok(t)
    }

    pub fn double(&self) -> &Arc<DirectedDouble> {
        &self.double
    }

    pub fn basis(&self) -> &LoopBasis {
        &self.basis
    }

    pub fn depth(&self) -> usize {
        self.basis.depth()
    }

    pub fn max_word(&self) -> usize {
        self.max_word
    }

    /// Loops of positive length up to `k`, in basis order.
    pub fn loops_up_to(&self, k: usize) -> Vec<Vec<usize>> {
        self.basis.paths().iter().filter(|p| !p.is_empty() && p.len() <= k).map(|p| p.edges.clone()).collect()
    }

    /// Left multiplication by `a` on the loop space.
    pub fn realize(&self, a: &AlgebraElement) -> Result<GradedOperator> {
        let deg = a.degree();
        if deg > self.max_word {
            return Err(Error::InsufficientDepth { needed: deg, depth: self.max_word });
        }
        let mut t = Vec::new();
        for (w, c) in a.terms() {
            let entries = self.word_entries(w)?;
            t.extend(entries.iter().map(|&(r, col, x)| (r, col, c * x)));
        }
        let n = self.basis.len();
        let d = deg as isize;
        Ok(self.basis.operator(SparseMatrix::from_triplets(n, n, t), -d, d, self.depth() as isize - d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bouquet, dynkin_a, dynkin_a_infinity};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dd(g: crate::graph::WeightedGraph) -> DirectedDouble {
        DirectedDouble::new(&g)
    }

    fn loop_path(edges: &[usize]) -> Path {
        Path { start: 0, edges: edges.to_vec() }
    }

    #[test]
    fn a3_wick_terms() {
        let d = dd(dynkin_a(3).unwrap());
        let w = WickWord::new(&d, &loop_path(&[0, 1])).unwrap();
        assert_eq!(w.terms.len(), 3);
        assert_abs_diff_eq!(w.terms[0].coefficient, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.terms[1].coefficient, 2f64.powf(-0.25), epsilon = 1e-15);
        assert_eq!(w.terms[1].left, vec![0]);
        assert_eq!(w.terms[1].right_opposite, vec![0]);
        assert_abs_diff_eq!(w.terms[2].coefficient, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wick_direct_and_recursive_agree() {
        for g in [dynkin_a(3).unwrap(), bouquet(2).unwrap(), dynkin_a_infinity(5, 1.0).unwrap()] {
            let d = dd(g);
            let paths = PathBasis::new(&d, 7, crate::DEFAULT_BUDGET).unwrap();
            let loops = LoopBasis::new(&d, 4, 1000).unwrap();
            for sigma in loops.paths() {
                let diff = wick_consistency(&d, sigma, &paths, 1e-12).unwrap();
                assert!(diff <= 1e-12);
            }
        }
    }

    #[test]
    fn y_of_single_edge_is_edge_element() {
        let d = dd(bouquet(2).unwrap());
        let paths = PathBasis::new(&d, 4, 1000).unwrap();
        let y = wick_direct(&d, &loop_path(&[1]), &paths).unwrap();
        let x = edge_element(&d, &paths, 1).unwrap();
        assert_eq!(y.max_diff_through(&x, 4), 0.0);
    }

    #[test]
    fn a3_change_of_basis() {
        let d = dd(dynkin_a(3).unwrap());
        let cb = ChangeOfBasis::new(&d, 2, 100).unwrap();
        assert_eq!(cb.loops.len(), 2);
        assert_abs_diff_eq!(cb.x_to_y[(0, 1)].re, 2f64.powf(0.25), epsilon = 1e-12);
        assert_abs_diff_eq!(cb.y_to_x[(0, 1)].re, -(2f64.powf(0.25)), epsilon = 1e-12);
        assert!(cb.is_unitriangular());

        let cb1 = ChangeOfBasis::new(&dd(bouquet(2).unwrap()), 1, 100).unwrap();
        assert_eq!(cb1.x_to_y, DMatrix::identity(3, 3));
    }

    #[test]
    fn change_of_basis_roundtrip() {
        for g in [dynkin_a(3).unwrap(), bouquet(2).unwrap(), dynkin_a(6).unwrap()] {
            let cb = ChangeOfBasis::new(&dd(g), 4, 1000).unwrap();
            assert!(cb.is_unitriangular());
            assert!(cb.roundtrip_error() < 1e-12);
        }
    }

    #[test]
    fn catalan_moments() {
        let d = dd(bouquet(1).unwrap());
        let m = moments(&d, &[0], 12, 13).unwrap();
        let catalan = [1.0, 1.0, 2.0, 5.0, 14.0, 42.0, 132.0];
        for n in 0..=6 {
            assert_eq!(m[2 * n].re, catalan[n]);
            if n < 6 {
                assert_eq!(m[2 * n + 1].re, 0.0);
            }
        }
        assert!(matches!(moments(&d, &[0], 12, 8), Err(Error::InsufficientDepth { .. })));
        let two = dd(bouquet(2).unwrap());
        assert_eq!(moments(&two, &[0, 1], 1, 2).unwrap()[1], C64::new(0.0, 0.0));
    }

    #[test]
    fn gns_realization_basics() {
        let d = Arc::new(dd(bouquet(2).unwrap()));
        let ctx = GnsContext::new(d.clone(), 4, 4, 1000).unwrap();
        let id = ctx.realize(&AlgebraElement::unit()).unwrap();
        assert_eq!(id.matrix(), &SparseMatrix::identity(ctx.basis().len()));
        // Columns at the vacuum form the identity Gram matrix.
        for (i, sigma) in ctx.basis().paths().iter().enumerate() {
            let y = ctx.realize(&AlgebraElement::wick(sigma.edges.clone())).unwrap();
            for j in 0..ctx.basis().len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(y.entry(j, 0), C64::new(expected, 0.0));
            }
        }
        let n = number_operator(ctx.basis());
        assert_eq!(n.diagonal.iter().filter(|&&d| d == 0).count(), 1);
        let total = (0..=4).map(|k| projector(ctx.basis(), k)).reduce(|a, b| a.add(&b)).unwrap();
        assert_eq!(total.matrix(), id.matrix());
    }

    fn random_element(words: &[Vec<usize>], coeffs: &[(f64, f64)]) -> AlgebraElement {
        AlgebraElement::from_terms(words.iter().zip(coeffs).map(|(w, &(a, b))| (w.clone(), C64::new(a, b))))
    }

    proptest! {
        #[test]
        fn star_matches_adjoint(coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 15)) {
            let d = Arc::new(dd(dynkin_a(4).unwrap()));
            let ctx = GnsContext::new(d.clone(), 8, 4, 1000).unwrap();
            let words: Vec<Vec<usize>> = ctx.basis().paths().iter().filter(|p| p.len() <= 4).map(|p| p.edges.clone()).collect();
            let a = random_element(&words, &coeffs);
            let ra = ctx.realize(&a).unwrap();
            let rs = ctx.realize(&a.star(&d)).unwrap();
            let through = ra.exact_through() - 4;
            prop_assert!(rs.max_diff_through(&ra.adjoint(), through) < 1e-12);
        }

        #[test]
        fn product_respects_filtration(c1 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7), c2 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7)) {
            let d = Arc::new(dd(bouquet(2).unwrap()));
            let ctx = GnsContext::new(d.clone(), 6, 6, 10_000).unwrap();
            let words: Vec<Vec<usize>> = ctx.basis().paths().iter().filter(|p| p.len() <= 2).map(|p| p.edges.clone()).collect();
            let a = random_element(&words, &c1);
            let b = random_element(&words, &c2);
            let ab = a.mul(&b, &d);
            prop_assert!(ab.degree() <= a.degree() + b.degree());
            // The product realizes as the composition on exact columns.
            let lhs = ctx.realize(&ab).unwrap();
            let rhs = ctx.realize(&a).unwrap().mul(&ctx.realize(&b).unwrap());
            prop_assert!(lhs.max_diff_through(&rhs, 2) < 1e-12);
        }
    }
}
