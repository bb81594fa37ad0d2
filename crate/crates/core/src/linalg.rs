//! Dense and sparse factorization support, built on `faer`, plus the small
//! vector kernels shared by the solvers.

use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use faer::prelude::*;
use faer::sparse::SparseColMat;
use faer::Side;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(y: &mut [f64], alpha: f64) {
    for v in y {
        *v *= alpha;
    }
}

pub fn csr_to_dense(m: &CsrMatrix) -> Mat<f64> {
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for (r, cols, vals) in m.rows_iter() {
        for (&c, &v) in cols.iter().zip(vals) {
            out[(r, c)] = v;
        }
    }
    out
}

pub fn csr_to_sparse(m: &CsrMatrix) -> Result<SparseColMat<usize, f64>> {
    let mut triplets = Vec::with_capacity(m.nnz());
    for (r, cols, vals) in m.rows_iter() {
        for (&c, &v) in cols.iter().zip(vals) {
            triplets.push((r, c, v));
        }
    }
    SparseColMat::try_new_from_triplets(m.nrows(), m.ncols(), &triplets)
        .map_err(|e| Error::Factorization(format!("sparse conversion failed: {e:?}")))
}

pub fn col_from_slice(v: &[f64]) -> Col<f64> {
    Col::from_fn(v.len(), |i| v[i])
}

pub fn col_to_vec(c: ColRef<'_, f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

/// Sparse symmetric positive definite factorization (fill-reducing Cholesky).
pub struct SparseSpdSolver {
    n: usize,
    factor: faer::sparse::linalg::solvers::Cholesky<usize, f64>,
}

impl SparseSpdSolver {
    pub fn new(m: &CsrMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension("SPD factorization needs a square matrix".into()));
        }
        let sp = csr_to_sparse(m)?;
        let factor = sp
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(Self { n: m.nrows(), factor })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_slice(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = col_from_slice(b);
        let x = self.factor.solve(&rhs);
        col_to_vec(x.as_ref())
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        self.factor.solve(b)
    }
}

/// Dense symmetric positive definite factorization.
pub struct DenseSpdSolver {
    n: usize,
    factor: faer::linalg::solvers::Cholesky<f64>,
}

impl DenseSpdSolver {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        let factor = a
            .cholesky(Side::Lower)
            .map_err(|_| Error::Factorization("dense matrix is not positive definite".into()))?;
        Ok(Self { n: a.nrows(), factor })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_slice(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = col_from_slice(b);
        let x = self.factor.solve(&rhs);
        col_to_vec(x.as_ref())
    }

    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        self.factor.solve(b)
    }

    /// The lower Cholesky factor L with A = L L^T.
    pub fn lower(&self) -> Mat<f64> {
        self.factor.compute_l()
    }
}

/// Outcome of the rank-revealing symmetric factorization: the retained
/// (original) indices in pivot order and their pivot values.
#[derive(Clone, Debug)]
pub struct PivotedCholesky {
    pub kept: Vec<usize>,
    pub pivots: Vec<f64>,
    pub dropped: usize,
}

impl PivotedCholesky {
    /// Ratio of extreme retained pivots, a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        match (self.pivots.first(), self.pivots.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// Diagonally pivoted Cholesky of a symmetric positive semidefinite matrix.
/// Stops once the best remaining pivot falls below `rel_tol` times the
/// largest pivot, revealing the numerical rank.
pub fn pivoted_cholesky(a: MatRef<'_, f64>, rel_tol: f64) -> PivotedCholesky {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut w = a.to_owned();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::new();
    let mut col_k = vec![0.0f64; n];
    let mut max_pivot = 0.0f64;
    for k in 0..n {
        let (mut p, mut best) = (k, w[(k, k)]);
        for i in (k + 1)..n {
            if w[(i, i)] > best {
                best = w[(i, i)];
                p = i;
            }
        }
        max_pivot = max_pivot.max(best);
        if best <= 0.0 || best < rel_tol * max_pivot {
            break;
        }
        if p != k {
            perm.swap(k, p);
            swap_symmetric(&mut w, k, p);
        }
        pivots.push(best);
        let lkk = best.sqrt();
        {
            let ck = w.col_as_slice_mut(k);
            for v in &mut ck[k..n] {
                *v /= lkk;
            }
            col_k[k..n].copy_from_slice(&ck[k..n]);
        }
        for j in (k + 1)..n {
            let ljk = col_k[j];
            if ljk == 0.0 {
                continue;
            }
            let cj = w.col_as_slice_mut(j);
            for (ci, lk) in cj[j..n].iter_mut().zip(&col_k[j..n]) {
                *ci -= lk * ljk;
            }
        }
    }
    let rank = pivots.len();
    let mut kept = perm[..rank].to_vec();
    kept.sort_unstable();
    PivotedCholesky { kept, pivots, dropped: n - rank }
}

/// In-place symmetric permutation of rows/columns `k < p`, touching only the
/// lower triangle (the upper one is never maintained).
fn swap_symmetric(w: &mut Mat<f64>, k: usize, p: usize) {
    debug_assert!(k < p);
    let n = w.nrows();
    for j in 0..k {
        let a = w[(k, j)];
        w[(k, j)] = w[(p, j)];
        w[(p, j)] = a;
    }
    let d = w[(k, k)];
    w[(k, k)] = w[(p, p)];
    w[(p, p)] = d;
    for i in (k + 1)..p {
        let a = w[(i, k)];
        w[(i, k)] = w[(p, i)];
        w[(p, i)] = a;
    }
    for i in (p + 1)..n {
        let a = w[(i, k)];
        w[(i, k)] = w[(i, p)];
        w[(i, p)] = a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_and_dense_solvers_agree() {
        let mut b = crate::sparse::CooBuilder::new(4, 4);
        for i in 0..4 {
            b.push(i, i, 4.0);
            if i + 1 < 4 {
                b.push(i, i + 1, -1.0);
                b.push(i + 1, i, -1.0);
            }
        }
        let m = b.build(true);
        let rhs = vec![1.0, 2.0, 3.0, 4.0];
        let s = SparseSpdSolver::new(&m).unwrap();
        let d = DenseSpdSolver::new(csr_to_dense(&m).as_ref()).unwrap();
        let xs = s.solve_slice(&rhs);
        let xd = d.solve_slice(&rhs);
        for (a, b) in xs.iter().zip(&xd) {
            assert!((a - b).abs() < 1e-13);
        }
        let residual = m.apply(&xs);
        for (r, want) in residual.iter().zip(&rhs) {
            assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoted_cholesky_reveals_rank() {
        // rank-2 Gram matrix of three vectors, the third a copy of the first
        let v = [
            [1.0, 0.0, 2.0],
            [0.5, 1.0, -1.0],
            [1.0, 0.0, 2.0],
        ];
        let g = Mat::from_fn(3, 3, |i, j| {
            v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum::<f64>()
        });
        let piv = pivoted_cholesky(g.as_ref(), 1e-10);
        assert_eq!(piv.kept.len(), 2);
        assert_eq!(piv.dropped, 1);
        // exactly one of the duplicate columns survives
        assert!(piv.kept.contains(&1));
        assert_eq!(piv.kept.iter().filter(|&&k| k == 0 || k == 2).count(), 1);
    }

    #[test]
    fn pivoted_cholesky_full_rank_matches_pivot_count() {
        let a = Mat::from_fn(5, 5, |i, j| if i == j { (i + 1) as f64 } else { 0.1 });
        let piv = pivoted_cholesky(a.as_ref(), 1e-12);
        assert_eq!(piv.kept, vec![0, 1, 2, 3, 4]);
        assert!(piv.pivot_ratio() >= 1.0);
    }
}
