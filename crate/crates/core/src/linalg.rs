//! Sparse complex matrices and largest-singular-value estimation.
//!
//! Small problems go through a dense Hermitian eigensolve; larger ones use
//! Lanczos with full reorthogonalization on the smaller Gram matrix. A Ritz
//! value never exceeds the true top eigenvalue, so the Lanczos route returns
//! a lower bound on the operator norm.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Compressed sparse row matrix with complex entries. Exact zeros are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect())
    }

    /// Duplicate positions are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, cols: keep_cols, vals: keep_vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        self.iter().collect()
    }

    pub fn map_entries(&self, f: impl Fn(usize, usize, C64) -> C64) -> Self {
        let t = self.iter().map(|(r, c, v)| (r, c, f(r, c, v))).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// Keeps entries satisfying the predicate, in a matrix of the given shape.
    pub fn filter(&self, nrows: usize, ncols: usize, keep: impl Fn(usize, usize) -> bool) -> Self {
        let t = self.iter().filter(|&(r, c, _)| keep(r, c)).collect();
        Self::from_triplets(nrows, ncols, t)
    }

    /// Sub-block `rows x cols` with indices shifted to start at zero.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut t = Vec::new();
        for r in rows.clone() {
            for (c, v) in self.row(r) {
                if cols.contains(&c) {
                    t.push((r - rows.start, c - cols.start, v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t)
    }

    pub fn adjoint(&self) -> Self {
        let t = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_entries(|_, _, v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.iter());
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![ZERO; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut list = Vec::new();
        let mut t = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        list.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            list.sort_unstable();
            for &c in &list {
                t.push((r, c, acc[c]));
                acc[c] = ZERO;
                touched[c] = false;
            }
            list.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *out = s;
        }
    }

    pub fn matvec_adjoint(&self, y: &[C64], x: &mut [C64]) {
        x.iter_mut().for_each(|v| *v = ZERO);
        for (r, &yr) in y.iter().enumerate().take(self.nrows) {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                x[self.cols[k]] += self.vals[k].conj() * yr;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[usize], &[C64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    pub(crate) fn from_raw_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<C64>,
    ) -> Option<Self> {
        let consistent = row_ptr.len() == nrows + 1
            && row_ptr.windows(2).all(|w| w[0] <= w[1])
            && row_ptr.last() == Some(&cols.len())
            && cols.len() == vals.len()
            && cols.iter().all(|&c| c < ncols);
        consistent.then_some(Self { nrows, ncols, row_ptr, cols, vals })
    }
}

#[derive(Debug, Clone)]
pub struct SingularValue {
    pub value: f64,
    /// Approximate top right singular vector (unit length, may be empty for the zero matrix).
    pub vector: Vec<C64>,
    pub iterations: usize,
    /// Residual norm of the top Ritz pair of the Gram matrix.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Problems whose dense Gram solve costs less than this many flops go dense.
    pub dense_flops: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-11, dense_flops: 4e6 }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn random_unit(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> =
        (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Largest singular value of `a`. `start` (right side) seeds Lanczos when given.
pub fn largest_singular_value(a: &SparseMatrix, start: Option<&[C64]>, opts: LanczosOptions) -> SingularValue {
    let (n, m) = (a.nrows(), a.ncols());
    if n == 0 || m == 0 || a.nnz() == 0 {
        return SingularValue { value: 0.0, vector: vec![ZERO; m], iterations: 0, residual: 0.0 };
    }
    let small = n.min(m) as f64;
    if small * small * (n.max(m) as f64) <= opts.dense_flops {
        return dense_top(a);
    }
    let right_side = m <= n;
    let dim = if right_side { m } else { n };
    let mut scratch = vec![ZERO; if right_side { n } else { m }];
    let mut gram = |x: &[C64], out: &mut [C64]| {
        if right_side {
            a.matvec(x, &mut scratch);
            a.matvec_adjoint(&scratch, out);
        } else {
            a.matvec_adjoint(x, &mut scratch);
            a.matvec(&scratch, out);
        }
    };
    let init = match start {
        Some(s) if right_side && s.len() == m && norm(s) > 0.0 => {
            let k = norm(s);
            s.iter().map(|x| x / k).collect()
        }
        Some(s) if !right_side && s.len() == m && norm(s) > 0.0 => {
            let mut u = vec![ZERO; n];
            a.matvec(s, &mut u);
            let k = norm(&u);
            if k > 0.0 {
                u.iter_mut().for_each(|x| *x /= k);
                u
            } else {
                random_unit(n, 0x5eed)
            }
        }
        _ => random_unit(dim, 0x5eed ^ dim as u64),
    };
    let (theta, vec, iterations, residual) = lanczos_top(&mut gram, init, opts);
    let value = theta.max(0.0).sqrt();
    let vector = if right_side {
        vec
    } else {
        let mut v = vec![ZERO; m];
        a.matvec_adjoint(&vec, &mut v);
        let k = norm(&v);
        if k > 0.0 {
            v.iter_mut().for_each(|x| *x /= k);
        }
        v
    };
    SingularValue { value, vector, iterations, residual }
}

/// Operator norm only. Small real or Hermitian matrices avoid the complex
/// Gram product; everything else goes through [`largest_singular_value`].
pub fn spectral_norm(a: &SparseMatrix, opts: LanczosOptions) -> f64 {
    let (n, m) = (a.nrows(), a.ncols());
    if a.nnz() == 0 {
        return 0.0;
    }
    let small = n.min(m) as f64;
    if small * small * (n.max(m) as f64) > opts.dense_flops {
        return largest_singular_value(a, None, opts).value;
    }
    let real = a.iter().all(|(_, _, z)| z.im == 0.0);
    let hermitian = n == m && a.iter().all(|(r, c, z)| a.get(c, r) == z.conj());
    let top_abs = |v: &nalgebra::DVector<f64>| v.iter().fold(0.0f64, |t, x| t.max(x.abs()));
    if real {
        let mut d = DMatrix::<f64>::zeros(n, m);
        for (r, c, z) in a.iter() {
            d[(r, c)] = z.re;
        }
        let v = if hermitian {
            top_abs(&d.symmetric_eigenvalues())
        } else {
            let g = if m <= n { d.transpose() * &d } else { &d * d.transpose() };
            top_abs(&g.symmetric_eigenvalues()).sqrt()
        };
        if v.is_finite() {
            return v;
        }
    } else if hermitian {
        // Real symmetric embedding [[Re, -Im], [Im, Re]] has the same
        // eigenvalues, each twice.
        let mut d = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for (r, c, z) in a.iter() {
            d[(r, c)] = z.re;
            d[(r + n, c + n)] = z.re;
            d[(r + n, c)] = z.im;
            d[(r, c + n)] = -z.im;
        }
        let v = top_abs(&d.symmetric_eigenvalues());
        if v.is_finite() {
            return v;
        }
    }
    largest_singular_value(a, None, opts).value
}

fn dense_top(a: &SparseMatrix) -> SingularValue {
    let d = a.to_dense();
    let right_side = a.ncols() <= a.nrows();
    let g = if right_side { d.adjoint() * &d } else { &d * d.adjoint() };
    let eig = SymmetricEigen::new(g);
    let (k, lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i, l) } else { best });
    let value = lambda.max(0.0).sqrt();
    let col: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
    let vector = if right_side {
        col
    } else {
        let u = nalgebra::DVector::from_vec(col);
        let v = d.adjoint() * u;
        let s = v.norm();
        v.iter().map(|x| if s > 0.0 { x / s } else { *x }).collect()
    };
    SingularValue { value, vector, iterations: 0, residual: 0.0 }
}

fn lanczos_top(
    gram: &mut dyn FnMut(&[C64], &mut [C64]),
    init: Vec<C64>,
    opts: LanczosOptions,
) -> (f64, Vec<C64>, usize, f64) {
    let dim = init.len();
    let mut basis: Vec<Vec<C64>> = vec![init];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];
    let mut best = (0.0, DVecF::zeros(1), f64::INFINITY);
    let limit = opts.max_iter.min(dim);
    for k in 0..limit {
        gram(&basis[k], &mut w);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        for (x, q) in w.iter_mut().zip(&basis[k]) {
            *x -= q * a;
        }
        if k > 0 {
            let b = beta[k - 1];
            for (x, q) in w.iter_mut().zip(&basis[k - 1]) {
                *x -= q * b;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (x, qi) in w.iter_mut().zip(q) {
                    *x -= qi * c;
                }
            }
        }
        let b = norm(&w);
        let check = k < 40 || k % 4 == 3 || k + 1 == limit || b <= 1e-14 * a.abs().max(1e-300);
        if check {
            let (theta, s) = tridiagonal_top(&alpha, &beta);
            let residual = b * s[k].abs();
            best = (theta, s, residual);
            if residual <= opts.tol * theta.abs().max(1e-300) || b <= 1e-14 * theta.abs().max(1e-300) {
                break;
            }
        }
        if k + 1 == limit {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let (theta, s, residual) = best;
    let mut vec = vec![ZERO; dim];
    for (coef, q) in s.iter().zip(&basis) {
        for (v, qi) in vec.iter_mut().zip(q) {
            *v += qi * *coef;
        }
    }
    let iterations = s.len();
    (theta, vec, iterations, residual)
}

type DVecF = nalgebra::DVector<f64>;

fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> (f64, DVecF) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i, l) } else { best });
    (theta, eig.eigenvectors.column(idx).into_owned())
}
