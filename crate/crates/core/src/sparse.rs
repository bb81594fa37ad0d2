//! Compressed-row sparse matrices and column collections.
//!
//! [`CsrMatrix`] stores the assembled operators (`K`, `M`, `A`, local blocks,
//! discrete gradient). Symmetric matrices are stored with both triangles so
//! that row access equals column access. [`ColMatrix`] holds collections of
//! sparse columns, used for the coarse bases `Z` and local near-kernel blocks.

use crate::{Error, Result};
use std::io::Write;

/// Triplet accumulator; duplicate entries are summed on compression.
#[derive(Clone, Debug, Default)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Sorts, merges duplicates and drops entries that cancelled exactly.
    pub fn build(mut self, symmetric: bool) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut it = self.entries.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values, symmetric }
    }
}

/// Sparse matrix in compressed-row layout.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    /// y = A^T x (for rectangular operators such as the discrete gradient).
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        y
    }

    /// Largest absolute asymmetry |a_ij - a_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// C = A + alpha * B, keeping the symmetry flag when both operands carry it.
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut builder = CooBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                builder.push(r, c, v);
            }
            let (cols, vals) = other.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                builder.push(r, c, alpha * v);
            }
        }
        Ok(builder.build(self.symmetric && other.symmetric))
    }

    pub fn scale(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// Principal submatrix on `keep` (sorted global indices); square matrices only.
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut new_of = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            new_of[old] = new;
        }
        let mut builder = CooBuilder::new(keep.len(), keep.len());
        for (new_r, &old_r) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_r);
            for (&c, &v) in cols.iter().zip(vals) {
                if new_of[c] != usize::MAX {
                    builder.push(new_r, new_of[c], v);
                }
            }
        }
        builder.build(self.symmetric)
    }

    /// Keeps rows/columns flagged `true`, returning the reduced matrix and the
    /// kept original indices (reduced index -> original index).
    pub fn restrict(&self, keep: &[bool]) -> (CsrMatrix, Vec<usize>) {
        assert_eq!(keep.len(), self.nrows);
        let kept: Vec<usize> = (0..self.nrows).filter(|&i| keep[i]).collect();
        (self.principal_submatrix(&kept), kept)
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = (usize, &[usize], &[f64])> {
        (0..self.nrows).map(move |r| {
            let (c, v) = self.row(r);
            (r, c, v)
        })
    }

    /// Matrix Market coordinate output; symmetric matrices emit the lower triangle.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let kind = if self.symmetric { "symmetric" } else { "general" };
        writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
        let nnz = if self.symmetric {
            self.rows_iter().map(|(r, cols, _)| cols.iter().filter(|&&c| c <= r).count()).sum()
        } else {
            self.nnz()
        };
        writeln!(w, "{} {} {}", self.nrows, self.ncols, nnz)?;
        for (r, cols, vals) in self.rows_iter() {
            for (&c, &v) in cols.iter().zip(vals) {
                if !self.symmetric || c <= r {
                    writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
                }
            }
        }
        Ok(())
    }
}

/// Collection of sparse columns with a fixed row dimension.
#[derive(Clone, Debug)]
pub struct ColMatrix {
    nrows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl ColMatrix {
    pub fn new(nrows: usize) -> Self {
        Self { nrows, cols: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    /// Appends a column given as (row, value) pairs; entries get sorted by row.
    pub fn push_col(&mut self, mut entries: Vec<(usize, f64)>) {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_unstable_by_key(|&(r, _)| r);
        debug_assert!(entries.iter().all(|&(r, _)| r < self.nrows));
        self.cols.push(entries);
    }

    pub fn push_dense_col(&mut self, dense: &[f64]) {
        assert_eq!(dense.len(), self.nrows);
        self.push_col(dense.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect());
    }

    pub fn append(&mut self, other: &ColMatrix) {
        assert_eq!(self.nrows, other.nrows);
        self.cols.extend(other.cols.iter().cloned());
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        self.cols[j].iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// y = Z x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj != 0.0 {
                for &(r, v) in col {
                    y[r] += v * xj;
                }
            }
        }
        y
    }

    /// y = Z^T x
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v * x[r]).sum())
            .collect()
    }

    /// Sparse dot between column `j` and a dense vector.
    pub fn col_dot(&self, j: usize, x: &[f64]) -> f64 {
        self.cols[j].iter().map(|&(r, v)| v * x[r]).sum()
    }

    pub fn scale_col(&mut self, j: usize, alpha: f64) {
        for (_, v) in &mut self.cols[j] {
            *v *= alpha;
        }
    }

    /// Keeps the selected columns, preserving their relative order.
    pub fn select(&self, keep: &[usize]) -> ColMatrix {
        ColMatrix {
            nrows: self.nrows,
            cols: keep.iter().map(|&j| self.cols[j].clone()).collect(),
        }
    }

    pub fn from_csr_columns(m: &CsrMatrix) -> ColMatrix {
        let mut cols = vec![Vec::new(); m.ncols()];
        for (r, cidx, vals) in m.rows_iter() {
            for (&c, &v) in cidx.iter().zip(vals) {
                cols[c].push((r, v));
            }
        }
        ColMatrix { nrows: m.nrows(), cols }
    }
}
