//! Compressed sparse rows, a sparse Cholesky wrapper and a generalized
//! Hermitian eigensolver for the lowest modes.

use crate::error::{CrError, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO: C = C { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub struct SparseMat {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<C>,
}

impl SparseMat {
    /// Duplicate entries are summed. Order of summation is the input order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, C)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<C> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C::new(1.0, 0.0))).collect())
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, C::new(v, 0.0))).collect())
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.push((r, self.indices[k], self.data[k]));
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        (self.indptr[r]..self.indptr[r + 1])
            .find(|&k| self.indices[k] == c)
            .map(|k| self.data[k])
            .unwrap_or(ZERO)
    }

    pub fn mul_vec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| (self.indptr[r]..self.indptr[r + 1]).map(|k| self.data[k] * x[self.indices[k]]).sum())
            .collect()
    }

    /// A^H x.
    pub fn adjoint_mul_vec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![ZERO; self.ncols];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k].conj() * x[r];
            }
        }
        y
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// Keeps only the listed rows and columns, in the given order.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (i, &k) in keep.iter().enumerate() {
            pos[k] = i;
        }
        let t = self
            .triplets()
            .into_iter()
            .filter(|&(r, c, _)| pos[r] != usize::MAX && pos[c] != usize::MAX)
            .map(|(r, c, v)| (pos[r], pos[c], v))
            .collect();
        Self::from_triplets(keep.len(), keep.len(), t)
    }

    /// Largest |A - A^H| entry relative to the largest |A| entry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst / scale.max(1e-300)
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut d = DMatrix::from_element(self.nrows, self.ncols, ZERO);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, C>> {
        let t: Vec<Triplet<usize, usize, C>> =
            self.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| CrError::Linalg(format!("sparse assembly: {e:?}")))
    }

    /// Writes (row, col, re, im) lines.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::from("row col re im\n");
        for (r, c, v) in self.triplets() {
            s.push_str(&format!("{r} {c} {:.17e} {:.17e}\n", v.re, v.im));
        }
        s
    }
}

/// Sparse Cholesky factor of a Hermitian positive definite matrix.
pub struct Cholesky {
    llt: faer::sparse::linalg::solvers::Llt<usize, C>,
    n: usize,
}

impl Cholesky {
    pub fn new(a: &SparseMat) -> Result<Self> {
        let f = a.to_faer()?;
        let llt = f.sp_cholesky(Side::Lower).map_err(|e| CrError::Linalg(format!("cholesky: {e:?}")))?;
        Ok(Self { llt, n: a.nrows })
    }

    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let mut m = faer::Mat::<C>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    pub fn solve_block(&self, b: &DMatrix<C>) -> DMatrix<C> {
        let mut m = faer::Mat::<C>::from_fn(self.n, b.ncols(), |i, j| b[(i, j)]);
        self.llt.solve_in_place(m.as_mut());
        DMatrix::from_fn(self.n, b.ncols(), |i, j| m[(i, j)])
    }
}

fn spmm(a: &SparseMat, x: &DMatrix<C>) -> DMatrix<C> {
    let mut y = DMatrix::from_element(a.nrows, x.ncols(), ZERO);
    for j in 0..x.ncols() {
        let col: Vec<C> = x.column(j).iter().copied().collect();
        let r = a.mul_vec(&col);
        for (i, v) in r.into_iter().enumerate() {
            y[(i, j)] = v;
        }
    }
    y
}

/// Smallest eigenpairs of H x = lambda M x.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// Columns are M-orthonormal eigenvectors.
    pub vectors: DMatrix<C>,
    pub iterations: usize,
}

/// Dense Rayleigh-Ritz on the span of `y`: returns Ritz values and vectors.
fn rayleigh_ritz(h: &SparseMat, m: &SparseMat, y: &DMatrix<C>) -> Result<(Vec<f64>, DMatrix<C>)> {
    let my = spmm(m, y);
    let mut ms = y.adjoint() * &my;
    ms = (&ms + ms.adjoint()) * C::new(0.5, 0.0);
    let eig_m = nalgebra::SymmetricEigen::new(ms);
    let top = eig_m.eigenvalues.iter().cloned().fold(0.0, f64::max);
    // Drop directions that are numerically dependent.
    let keep: Vec<usize> = (0..eig_m.eigenvalues.len()).filter(|&i| eig_m.eigenvalues[i] > 1e-13 * top).collect();
    if keep.is_empty() {
        return Err(CrError::Linalg("search space collapsed".into()));
    }
    let q = DMatrix::from_fn(y.ncols(), keep.len(), |i, j| {
        eig_m.eigenvectors[(i, keep[j])] / eig_m.eigenvalues[keep[j]].sqrt()
    });
    let basis = y * &q;
    let hb = spmm(h, &basis);
    let mut hs = basis.adjoint() * &hb;
    hs = (&hs + hs.adjoint()) * C::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(hs);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((vals, basis * u))
}

/// Lowest `k` eigenpairs of the pencil (H, M) with H Hermitian positive
/// semidefinite and M Hermitian positive definite. Dense for small systems,
/// otherwise shift-invert subspace iteration with Rayleigh-Ritz.
pub fn lowest_eigenpairs(h: &SparseMat, m: &SparseMat, k: usize, seed: u64) -> Result<EigenResult> {
    let n = h.nrows;
    let k = k.min(n);
    if n <= 600 {
        let (vals, vecs) = rayleigh_ritz(h, m, &DMatrix::identity(n, n))?;
        let kk = k.min(vals.len());
        return Ok(EigenResult { values: vals[..kk].to_vec(), vectors: vecs.columns(0, kk).into_owned(), iterations: 0 });
    }
    let ratio = (0..n).map(|i| h.get(i, i).re / m.get(i, i).re.max(1e-300)).fold(0.0, f64::max);
    let shift = 1e-8 * ratio;
    let shifted = h.add(&m.scale(shift));
    let chol = Cholesky::new(&shifted)?;
    let p = (k + (k / 2).max(12)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let mut prev: Vec<f64> = vec![f64::INFINITY; k];
    let mut change = f64::INFINITY;
    for it in 1..=400 {
        let y = chol.solve_block(&spmm(m, &x));
        let (vals, vecs) = rayleigh_ritz(h, m, &y)?;
        x = vecs;
        let scale = vals[k.min(vals.len()) - 1].abs().max(1e-300);
        change = (0..k.min(vals.len())).map(|i| (vals[i] - prev[i]).abs()).fold(0.0, f64::max);
        prev = vals[..k.min(vals.len())].to_vec();
        // Roundoff floor of the Rayleigh quotients grows with the largest diagonal ratio.
        if it >= 3 && change <= 1e-7 * scale + 1e-14 * ratio {
            return Ok(EigenResult { values: prev, vectors: x.columns(0, k).into_owned(), iterations: it });
        }
    }
    Err(CrError::NonConvergence { iterations: 400, residual: change })
}

/// Sparse Hermitian solve A x = b by Cholesky.
pub fn solve_hpd(a: &SparseMat, b: &[C]) -> Result<Vec<C>> {
    Ok(Cholesky::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseMat {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C::new(2.0, 0.0)));
            t.push((i, (i + 1) % n, C::new(-1.0, 0.0)));
            t.push(((i + 1) % n, i, C::new(-1.0, 0.0)));
        }
        SparseMat::from_triplets(n, n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMat::from_triplets(2, 2, vec![(0, 0, C::new(1.0, 0.0)), (0, 0, C::new(2.0, 0.0))]);
        assert_eq!(a.get(0, 0), C::new(3.0, 0.0));
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn periodic_chain_spectrum() {
        for n in [50, 1000] {
            let a = laplacian_1d(n);
            let r = lowest_eigenpairs(&a, &SparseMat::identity(n), 5, 1).unwrap();
            let exact: Vec<f64> = {
                let mut e: Vec<f64> = (0..n).map(|j| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
                e.sort_by(|a, b| a.partial_cmp(b).unwrap());
                e
            };
            for i in 0..5 {
                assert!((r.values[i] - exact[i]).abs() < 1e-9, "{n} {i} {} {}", r.values[i], exact[i]);
            }
        }
    }

    #[test]
    fn cholesky_solves() {
        let n = 30;
        let a = laplacian_1d(n).add(&SparseMat::identity(n));
        let b: Vec<C> = (0..n).map(|i| C::new(i as f64, 1.0)).collect();
        let x = solve_hpd(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        assert!(r.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-12));
    }
}
