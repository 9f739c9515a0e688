//! Path spaces, creation/annihilation operators and graded sparse operators.
//!
//! Vectors are expressed in the orthonormal basis `p / sqrt(mu(target(p)))`.
//! In that basis both creation and annihilation have unit coefficients, and
//! a truncated operator keeps only paths of length at most the depth.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedDouble;
use crate::linalg::{SparseMatrix, C64};

/// A path in the directed double: its start vertex and edge sequence.
/// Length-zero paths are vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Path {
    pub start: usize,
    pub edges: Vec<usize>,
}

impl Path {
    pub fn vertex(v: usize) -> Self {
        Self { start: v, edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self, dd: &DirectedDouble) -> usize {
        self.edges.last().map_or(self.start, |&e| dd.target(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    /// Every path of length at most the depth.
    Paths,
    /// Loops at the basepoint of length at most the depth.
    Loops,
}

/// Paths ordered by length, then lexicographically by edge id (vertices by id).
#[derive(Debug, Clone)]
pub struct GradedBasis {
    kind: BasisKind,
    depth: usize,
    paths: Vec<Path>,
    offsets: Arc<Vec<usize>>,
    degrees: Arc<Vec<usize>>,
    index: HashMap<Path, usize>,
}

impl GradedBasis {
    fn from_levels(kind: BasisKind, depth: usize, levels: Vec<Vec<Path>>) -> Self {
        let mut offsets = vec![0];
        let mut paths = Vec::new();
        let mut degrees = Vec::new();
        for (d, level) in levels.into_iter().enumerate() {
            degrees.extend(std::iter::repeat_n(d, level.len()));
            paths.extend(level);
            offsets.push(paths.len());
        }
        let index = paths.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Self { kind, depth, paths, offsets: Arc::new(offsets), degrees: Arc::new(degrees), index }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.paths[i]
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    /// Index range of the degree-`d` basis elements.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        if d > self.depth {
            let end = *self.offsets.last().unwrap();
            return end..end;
        }
        self.offsets[d]..self.offsets[d + 1]
    }

    pub fn offsets(&self) -> &Arc<Vec<usize>> {
        &self.offsets
    }

    pub fn degrees(&self) -> &Arc<Vec<usize>> {
        &self.degrees
    }

    /// Operator with the given entries over this basis.
    pub fn operator(&self, matrix: SparseMatrix, min_shift: isize, max_shift: isize, exact_through: isize) -> GradedOperator {
        GradedOperator {
            matrix,
            offsets: self.offsets.clone(),
            degrees: self.degrees.clone(),
            min_shift,
            max_shift,
            exact_through,
        }
    }
}

fn counts_exceed(total: u128, budget: usize, what: &'static str) -> Result<()> {
    if total > budget as u128 {
        Err(Error::BudgetExceeded { what, count: total, budget })
    } else {
        Ok(())
    }
}

/// Number of paths of length at most `depth` (saturating).
pub fn count_paths(dd: &DirectedDouble, depth: usize) -> u128 {
    let a = dd.adjacency_counts();
    let n = a.len();
    let mut walks = vec![1u128; n];
    let mut total = n as u128;
    for _ in 0..depth {
        let mut next = vec![0u128; n];
        for (u, row) in a.iter().enumerate() {
            for (v, &k) in row.iter().enumerate() {
                next[v] = next[v].saturating_add(walks[u].saturating_mul(k));
            }
        }
        walks = next;
        total = walks.iter().fold(total, |t, &w| t.saturating_add(w));
    }
    total
}

/// Number of loops at the basepoint of length at most `depth` (saturating).
pub fn count_loops(dd: &DirectedDouble, depth: usize) -> u128 {
    let a = dd.adjacency_counts();
    let n = a.len();
    let base = dd.graph().basepoint();
    let mut walks = vec![0u128; n];
    walks[base] = 1;
    let mut total = 1u128;
    for _ in 0..depth {
        let mut next = vec![0u128; n];
        for (u, row) in a.iter().enumerate() {
            for (v, &k) in row.iter().enumerate() {
                next[v] = next[v].saturating_add(walks[u].saturating_mul(k));
            }
        }
        walks = next;
        total = total.saturating_add(walks[base]);
    }
    total
}

/// All paths of length at most `depth`.
#[derive(Debug, Clone)]
pub struct PathBasis(GradedBasis);

impl std::ops::Deref for PathBasis {
    type Target = GradedBasis;
    fn deref(&self) -> &GradedBasis {
        &self.0
    }
}

impl PathBasis {
    pub fn new(dd: &DirectedDouble, depth: usize, budget: usize) -> Result<Self> {
        counts_exceed(count_paths(dd, depth), budget, "path basis")?;
        let mut levels: Vec<Vec<Path>> = vec![(0..dd.graph().num_vertices()).map(Path::vertex).collect()];
        if depth >= 1 {
            levels.push(dd.edges().iter().map(|e| Path { start: e.source, edges: vec![e.id] }).collect());
        }
        for _ in 2..=depth {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for p in prev {
                for &e in dd.outgoing(p.end(dd)) {
                    let mut edges = p.edges.clone();
                    edges.push(e);
                    next.push(Path { start: p.start, edges });
                }
            }
            levels.push(next);
        }
        Ok(Self(GradedBasis::from_levels(BasisKind::Paths, depth, levels)))
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.0
    }

    /// Unnormalized inner product of basis paths: `delta(p, q) mu(target(p))`.
    pub fn inner_product(&self, dd: &DirectedDouble, i: usize, j: usize) -> f64 {
        if i == j {
            dd.graph().weight(self.path(i).end(dd))
        } else {
            0.0
        }
    }
}

/// Loops at the basepoint of length at most `depth`. Loops are orthonormal
/// because the basepoint has weight 1.
#[derive(Debug, Clone)]
pub struct LoopBasis(GradedBasis);

impl std::ops::Deref for LoopBasis {
    type Target = GradedBasis;
    fn deref(&self) -> &GradedBasis {
        &self.0
    }
}

impl LoopBasis {
    pub fn new(dd: &DirectedDouble, depth: usize, budget: usize) -> Result<Self> {
        counts_exceed(count_loops(dd, depth), budget, "loop basis")?;
        let base = dd.graph().basepoint();
        let dist: Vec<usize> = dd.graph().distances().into_iter().map(|d| d.unwrap_or(usize::MAX)).collect();
        let mut walks = vec![Path::vertex(base)];
        let mut levels = vec![walks.clone()];
        for len in 1..=depth {
            let mut next = Vec::new();
            for p in &walks {
                for &e in dd.outgoing(p.end(dd)) {
                    if dist[dd.target(e)] <= depth - len {
                        let mut edges = p.edges.clone();
                        edges.push(e);
                        next.push(Path { start: base, edges });
                    }
                }
            }
            counts_exceed(next.len() as u128, budget.saturating_mul(4), "loop enumeration frontier")?;
            levels.push(next.iter().filter(|p| p.end(dd) == base).cloned().collect());
            walks = next;
        }
        Ok(Self(GradedBasis::from_levels(BasisKind::Loops, depth, levels)))
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.0
    }
}

/// Sparse operator on a truncated graded basis.
///
/// `min_shift..=max_shift` bounds the degree change of every entry.
/// Columns with input degree at most `exact_through` agree with the
/// untruncated operator; a negative value means no column is guaranteed.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedOperator {
    matrix: SparseMatrix,
    offsets: Arc<Vec<usize>>,
    degrees: Arc<Vec<usize>>,
    min_shift: isize,
    max_shift: isize,
    exact_through: isize,
}

impl GradedOperator {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn depth(&self) -> usize {
        self.offsets.len() - 2
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn shift_range(&self) -> (isize, isize) {
        (self.min_shift, self.max_shift)
    }

    pub fn exact_through(&self) -> isize {
        self.exact_through
    }

    /// Overrides the exactness metadata (for realizations known to be exact).
    pub fn with_exact_through(mut self, exact_through: isize) -> Self {
        self.exact_through = exact_through;
        self
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    fn range(&self, d: usize) -> std::ops::Range<usize> {
        if d + 1 >= self.offsets.len() {
            let end = *self.offsets.last().unwrap();
            end..end
        } else {
            self.offsets[d]..self.offsets[d + 1]
        }
    }

    /// `P_m T P_n` as a matrix indexed within the two degree ranges.
    pub fn block(&self, m: usize, n: usize) -> SparseMatrix {
        self.matrix.block(self.range(m), self.range(n))
    }

    /// Degree pairs (output, input) carrying nonzero entries.
    pub fn block_support(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<(usize, usize)> =
            self.matrix.iter().map(|(r, c, _)| (self.degrees[r], self.degrees[c])).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Restriction to degrees at most `k`.
    pub fn compress(&self, k: usize) -> GradedOperator {
        let k = k.min(self.depth());
        let n = self.offsets[k + 1];
        GradedOperator {
            matrix: self.matrix.filter(n, n, |r, c| r < n && c < n),
            offsets: Arc::new(self.offsets[..k + 2].to_vec()),
            degrees: Arc::new(self.degrees[..n].to_vec()),
            min_shift: self.min_shift,
            max_shift: self.max_shift,
            exact_through: self.exact_through.min(k as isize - self.max_shift),
        }
    }

    /// `[N, T]`: each entry scaled by (output degree - input degree).
    pub fn commutator_with_number(&self) -> GradedOperator {
        let deg = &self.degrees;
        GradedOperator {
            matrix: self.matrix.map_entries(|r, c, v| v * (deg[r] as f64 - deg[c] as f64)),
            ..self.clone()
        }
    }

    /// Entries whose degree change `d` satisfies the predicate.
    pub fn filter_shift(&self, keep: impl Fn(isize) -> bool) -> GradedOperator {
        let deg = &self.degrees;
        let n = self.dim();
        GradedOperator {
            matrix: self.matrix.filter(n, n, |r, c| keep(deg[r] as isize - deg[c] as isize)),
            ..self.clone()
        }
    }

    pub fn adjoint(&self) -> GradedOperator {
        GradedOperator {
            matrix: self.matrix.adjoint(),
            min_shift: -self.max_shift,
            max_shift: -self.min_shift,
            exact_through: self.exact_through + self.min_shift,
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &GradedOperator) -> GradedOperator {
        assert_eq!(self.offsets, other.offsets, "operators on different bases");
        GradedOperator {
            matrix: self.matrix.mul(&other.matrix),
            min_shift: self.min_shift + other.min_shift,
            max_shift: self.max_shift + other.max_shift,
            exact_through: other.exact_through.min(self.exact_through - other.max_shift),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &GradedOperator) -> GradedOperator {
        assert_eq!(self.offsets, other.offsets, "operators on different bases");
        GradedOperator {
            matrix: self.matrix.add(&other.matrix),
            min_shift: self.min_shift.min(other.min_shift),
            max_shift: self.max_shift.max(other.max_shift),
            exact_through: self.exact_through.min(other.exact_through),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: C64) -> GradedOperator {
        GradedOperator { matrix: self.matrix.scale(s), ..self.clone() }
    }

    pub fn sub(&self, other: &GradedOperator) -> GradedOperator {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.matrix.matvec(x, &mut y);
        y
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.matrix.get(r, c)
    }

    /// Largest entrywise difference over columns of degree at most `through`.
    pub fn max_diff_through(&self, other: &GradedOperator, through: isize) -> f64 {
        let deg = &self.degrees;
        self.matrix
            .sub(&other.matrix)
            .iter()
            .filter(|&(_, c, _)| deg[c] as isize <= through)
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Little-endian binary encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let put = |out: &mut Vec<u8>, x: u64| out.extend_from_slice(&x.to_le_bytes());
        let (row_ptr, cols, vals) = self.matrix.raw_parts();
        put(&mut out, self.offsets.len() as u64);
        self.offsets.iter().for_each(|&o| put(&mut out, o as u64));
        put(&mut out, self.min_shift as i64 as u64);
        put(&mut out, self.max_shift as i64 as u64);
        put(&mut out, self.exact_through as i64 as u64);
        put(&mut out, cols.len() as u64);
        row_ptr.iter().for_each(|&o| put(&mut out, o as u64));
        cols.iter().for_each(|&c| put(&mut out, c as u64));
        for v in vals {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = || -> Result<u64> {
            let chunk = bytes.get(pos..pos + 8).ok_or_else(|| Error::Corrupt("truncated operator".into()))?;
            pos += 8;
            Ok(u64::from_le_bytes(chunk.try_into().unwrap()))
        };
        let count = take()? as usize;
        if count < 2 || count > bytes.len() / 8 {
            return Err(Error::Corrupt("bad offset table".into()));
        }
        let offsets: Vec<usize> = (0..count).map(|_| take().map(|x| x as usize)).collect::<Result<_>>()?;
        let min_shift = take()? as i64 as isize;
        let max_shift = take()? as i64 as isize;
        let exact_through = take()? as i64 as isize;
        let nnz = take()? as usize;
        let n = *offsets.last().unwrap();
        if nnz > bytes.len() / 8 || n > bytes.len() / 8 {
            return Err(Error::Corrupt("bad sizes".into()));
        }
        let row_ptr: Vec<usize> = (0..=n).map(|_| take().map(|x| x as usize)).collect::<Result<_>>()?;
        let cols: Vec<usize> = (0..nnz).map(|_| take().map(|x| x as usize)).collect::<Result<_>>()?;
        let vals: Vec<C64> = (0..nnz)
            .map(|_| Ok(C64::new(f64::from_bits(take()?), f64::from_bits(take()?))))
            .collect::<Result<_>>()?;
        let matrix = SparseMatrix::from_raw_parts(n, n, row_ptr, cols, vals)
            .ok_or_else(|| Error::Corrupt("inconsistent sparse structure".into()))?;
        let mut degrees = Vec::with_capacity(n);
        for d in 0..offsets.len() - 1 {
            if offsets[d] > offsets[d + 1] {
                return Err(Error::Corrupt("offsets not monotone".into()));
            }
            degrees.extend(std::iter::repeat_n(d, offsets[d + 1] - offsets[d]));
        }
        Ok(GradedOperator {
            matrix,
            offsets: Arc::new(offsets),
            degrees: Arc::new(degrees),
            min_shift,
            max_shift,
            exact_through,
        })
    }
}

fn require_paths(basis: &PathBasis, dd: &DirectedDouble, edge: usize) -> Result<()> {
    dd.edge(edge)?;
    debug_assert_eq!(basis.kind(), BasisKind::Paths);
    Ok(())
}

/// Left creation `l(e)`: `p -> e p` when `p` starts at the target of `e`.
pub fn creation(dd: &DirectedDouble, basis: &PathBasis, edge: usize) -> Result<GradedOperator> {
    require_paths(basis, dd, edge)?;
    let (s, t) = (dd.source(edge), dd.target(edge));
    let mut triplets = Vec::new();
    for (i, p) in basis.paths().iter().enumerate() {
        if p.start == t && p.len() < basis.depth() {
            let mut edges = Vec::with_capacity(p.len() + 1);
            edges.push(edge);
            edges.extend_from_slice(&p.edges);
            let j = basis.index_of(&Path { start: s, edges }).expect("extended path in basis");
            triplets.push((j, i, C64::new(1.0, 0.0)));
        }
    }
    let n = basis.len();
    let depth = basis.depth() as isize;
    Ok(basis.operator(SparseMatrix::from_triplets(n, n, triplets), 1, 1, depth - 1))
}

/// Adjoint of creation: strips a leading `e`.
pub fn annihilation(dd: &DirectedDouble, basis: &PathBasis, edge: usize) -> Result<GradedOperator> {
    require_paths(basis, dd, edge)?;
    let t = dd.target(edge);
    let mut triplets = Vec::new();
    for (i, p) in basis.paths().iter().enumerate() {
        if p.edges.first() == Some(&edge) {
            let rest = Path { start: t, edges: p.edges[1..].to_vec() };
            triplets.push((basis.index_of(&rest).unwrap(), i, C64::new(1.0, 0.0)));
        }
    }
    let n = basis.len();
    let depth = basis.depth() as isize;
    Ok(basis.operator(SparseMatrix::from_triplets(n, n, triplets), -1, -1, depth))
}

/// `a_e l(e) + a_{e^op} l(e^op)^*` with `a_e = (mu(s)/mu(t))^(1/4)`.
pub fn edge_element(dd: &DirectedDouble, basis: &PathBasis, edge: usize) -> Result<GradedOperator> {
    let op = dd.edge(edge)?.opposite;
    let up = creation(dd, basis, edge)?.scale(C64::new(dd.path_weight(&[edge]), 0.0));
    let down = annihilation(dd, basis, op)?.scale(C64::new(dd.path_weight(&[op]), 0.0));
    Ok(up.add(&down))
}

/// Projection onto paths starting at `v`.
pub fn vertex_projection(dd: &DirectedDouble, basis: &GradedBasis, v: usize) -> GradedOperator {
    let _ = dd;
    let n = basis.len();
    let triplets = basis
        .paths()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.start == v)
        .map(|(i, _)| (i, i, C64::new(1.0, 0.0)))
        .collect();
    basis.operator(SparseMatrix::from_triplets(n, n, triplets), 0, 0, basis.depth() as isize)
}

/// Diagonal compression `E(x)(v) = <x v, v> / mu(v)` at every vertex.
pub fn vertex_expectations(op: &GradedOperator, basis: &PathBasis) -> Result<Vec<C64>> {
    if op.exact_through() < 0 {
        return Err(Error::InsufficientDepth { needed: op.shift_range().1.max(0) as usize, depth: basis.depth() });
    }
    Ok(basis.degree_range(0).map(|i| op.entry(i, i)).collect())
}

/// `Tr(x) = sum_v mu(v) E(x)(v)`.
pub fn trace(dd: &DirectedDouble, op: &GradedOperator, basis: &PathBasis) -> Result<C64> {
    let e = vertex_expectations(op, basis)?;
    Ok(basis
        .degree_range(0)
        .zip(e)
        .map(|(i, x)| x * dd.graph().weight(basis.path(i).start))
        .sum())
}
