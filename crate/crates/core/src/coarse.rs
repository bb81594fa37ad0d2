//! Per-subdomain operators and the coarse spaces.
//!
//! Each subdomain carries its Dirichlet block `A_i = R_i A R_i^T`
//! (factorized), the Neumann matrix `A_i^Neu` subassembled over the overlap
//! elements, the partition-of-unity weights `D_i`, and the local near-kernel
//! `G_i`: the discrete gradient columns restricted to the subdomain, pruned
//! to a well-conditioned basis. The oblique projection
//!
//! ```text
//! xi_i = G_i (G_i^T A_i G_i)^{-1} G_i^T A_i
//! ```
//!
//! projects onto the local near-kernel orthogonally in the `A_i` inner
//! product. It is applied in factored form only.
//!
//! Coarse bases:
//! * `NK`: the global gradient columns themselves;
//! * `SNK`: the split near-kernel, one column `R_i^T D_i g` per surviving
//!   local gradient column, which strictly contains the NK space once the
//!   partition of unity splits columns across subdomains;
//! * GenEO: per subdomain, eigenvectors of the pencil
//!   `(I - xi^T) D A_i D (I - xi) V = lambda A_i^Neu V` with eigenvalues
//!   above the user threshold `tau`, prolonged as `R_i^T D_i (I - xi) V`.
//!   The right-hand matrix is positive semidefinite with a large kernel, so
//!   it is regularized by `delta * trace / n` on the diagonal, which turns
//!   the infinite eigenvalues of interest into large finite ones and
//!   perturbs finite ones at relative order `delta`.
//!
//! The coarse operator `E = Z^T A Z` is factorized with a rank-revealing
//! pivoted Cholesky; dependent columns of `Z` are dropped and recorded.

use crate::assembly::{assemble_neumann_local, CoefficientField, DiscreteGradient};
use crate::decomposition::{OverlappingDecomposition, PartitionOfUnity};
use crate::linalg::{self, pivoted_cholesky, DenseSpdSolver, SparseSpdSolver};
use crate::mesh::{BoundaryTags, Mesh};
use crate::sparse::{ColMatrix, CsrMatrix};
use crate::{Error, Result};
use faer::{Mat, Side};
use rayon::prelude::*;

/// Relative pivot tolerance for pruning dependent near-kernel columns.
pub const PRUNE_TOL: f64 = 1e-10;
/// Columns with smaller norm than this are dropped outright.
pub const NORM_TOL: f64 = 1e-14;
/// Default diagonal regularization for the singular eigenproblem right side.
pub const GEVP_DELTA: f64 = 1e-12;

/// Everything a subdomain needs for preconditioning and coarse construction.
pub struct LocalProblem {
    pub subdomain: usize,
    /// Sorted global free-dof indices of this subdomain.
    pub dofs: Vec<usize>,
    pub a_local: CsrMatrix,
    pub a_neumann: CsrMatrix,
    /// Partition-of-unity weights over `dofs`.
    pub weights: Vec<f64>,
    pub factor: SparseSpdSolver,
    /// Pruned local near-kernel columns, in local indices.
    pub near_kernel: ColMatrix,
    /// Free-node index that generated each kept near-kernel column.
    pub near_kernel_nodes: Vec<usize>,
    /// A_i * G_i, kept dense for the factored projection.
    ag: Mat<f64>,
    gag: Option<DenseSpdSolver>,
}

impl LocalProblem {
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn near_kernel_dim(&self) -> usize {
        self.near_kernel.ncols()
    }

    /// xi v: the A_i-orthogonal projection of `v` onto the local near-kernel.
    pub fn project_near_kernel(&self, v: &[f64]) -> Vec<f64> {
        let Some(gag) = &self.gag else {
            return vec![0.0; v.len()];
        };
        // G (G^T A G)^{-1} (A G)^T v
        let m = self.near_kernel.ncols();
        let rhs: Vec<f64> = (0..m).map(|j| linalg::dot(self.ag.col_as_slice(j), v)).collect();
        let coeffs = gag.solve_slice(&rhs);
        self.near_kernel.apply(&coeffs)
    }

    /// xi^T v.
    pub fn project_near_kernel_adjoint(&self, v: &[f64]) -> Vec<f64> {
        let Some(gag) = &self.gag else {
            return vec![0.0; v.len()];
        };
        // (A G) (G^T A G)^{-1} G^T v
        let rhs = self.near_kernel.apply_transpose(v);
        let coeffs = gag.solve_slice(&rhs);
        let mut out = vec![0.0; v.len()];
        for (j, &c) in coeffs.iter().enumerate() {
            linalg::axpy(&mut out, c, self.ag.col_as_slice(j));
        }
        out
    }

    /// D (I - xi) v, the weighted complement used in the eigenproblem and the
    /// coarse prolongations.
    pub fn weighted_complement(&self, v: &[f64]) -> Vec<f64> {
        let xi = self.project_near_kernel(v);
        v.iter()
            .zip(&xi)
            .zip(&self.weights)
            .map(|((a, b), w)| w * (a - b))
            .collect()
    }

    /// Prolongation by zero of a local vector to the global free-dof space.
    pub fn prolong(&self, local: &[f64], n_global: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_global];
        for (&g, &v) in self.dofs.iter().zip(local) {
            out[g] = v;
        }
        out
    }

    /// Restriction of a global vector to this subdomain.
    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&g| global[g]).collect()
    }
}

/// Builds every subdomain's operators; subdomains are processed in parallel.
pub fn build_local_problems(
    mesh: &Mesh,
    coeff: &CoefficientField,
    tags: &BoundaryTags,
    a: &CsrMatrix,
    gradient: &DiscreteGradient,
    decomp: &OverlappingDecomposition,
    pou: &PartitionOfUnity,
) -> Result<Vec<LocalProblem>> {
    let grad_cols = ColMatrix::from_csr_columns(&gradient.matrix);
    (0..decomp.n_subdomains())
        .into_par_iter()
        .map(|i| {
            build_one(mesh, coeff, tags, a, &grad_cols, decomp, pou, i)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn build_one(
    mesh: &Mesh,
    coeff: &CoefficientField,
    tags: &BoundaryTags,
    a: &CsrMatrix,
    grad_cols: &ColMatrix,
    decomp: &OverlappingDecomposition,
    pou: &PartitionOfUnity,
    i: usize,
) -> Result<LocalProblem> {
    let dofs = decomp.dofs[i].clone();
    if dofs.is_empty() {
        return Err(Error::Decomposition(format!("subdomain {i} has no free dofs")));
    }
    let n = dofs.len();
    let a_local = a.principal_submatrix(&dofs);
    let factor = SparseSpdSolver::new(&a_local)
        .map_err(|e| Error::Factorization(format!("subdomain {i} Dirichlet block: {e}")))?;
    let a_neumann = assemble_neumann_local(mesh, coeff, tags, &decomp.overlap_hexes[i], &dofs);
    let weights = pou.weights[i].clone();

    // Restrict the gradient columns; keep those with support here.
    let mut local_of_global = vec![usize::MAX; a.nrows()];
    for (l, &g) in dofs.iter().enumerate() {
        local_of_global[g] = l;
    }
    let mut candidates = ColMatrix::new(n);
    let mut candidate_nodes = Vec::new();
    for j in 0..grad_cols.ncols() {
        let entries: Vec<(usize, f64)> = grad_cols
            .col(j)
            .iter()
            .filter_map(|&(r, v)| {
                let l = local_of_global[r];
                (l != usize::MAX).then_some((l, v))
            })
            .collect();
        if !entries.is_empty() {
            candidates.push_col(entries);
            candidate_nodes.push(j);
        }
    }

    // Prune to an A_i-independent basis through the pivoted Gram factor.
    let m0 = candidates.ncols();
    let (near_kernel, near_kernel_nodes, ag, gag) = if m0 == 0 {
        (ColMatrix::new(n), Vec::new(), Mat::zeros(n, 0), None)
    } else {
        let mut ag0 = Mat::<f64>::zeros(n, m0);
        for j in 0..m0 {
            let col = apply_csr_to_sparse_col(&a_local, candidates.col(j));
            ag0.col_as_slice_mut(j).copy_from_slice(&col);
        }
        // unit-energy scaling, so the pruning tolerance is scale-free
        for j in 0..m0 {
            let d = candidates.col_dot(j, ag0.col_as_slice(j));
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "subdomain {i}: near-kernel column {j} has nonpositive energy {d}"
                )));
            }
            let s = 1.0 / d.sqrt();
            candidates.scale_col(j, s);
            for v in ag0.col_as_slice_mut(j) {
                *v *= s;
            }
        }
        let gram = Mat::from_fn(m0, m0, |r, c| candidates.col_dot(r, ag0.col_as_slice(c)));
        let piv = pivoted_cholesky(gram.as_ref(), PRUNE_TOL);
        let kept = piv.kept;
        let near_kernel = candidates.select(&kept);
        let nodes: Vec<usize> = kept.iter().map(|&k| candidate_nodes[k]).collect();
        let mut ag = Mat::<f64>::zeros(n, kept.len());
        for (new_j, &old_j) in kept.iter().enumerate() {
            ag.col_as_slice_mut(new_j).copy_from_slice(ag0.col_as_slice(old_j));
        }
        let gram_kept = Mat::from_fn(kept.len(), kept.len(), |r, c| gram[(kept[r], kept[c])]);
        let gag = DenseSpdSolver::new(gram_kept.as_ref()).map_err(|e| {
            Error::Factorization(format!("subdomain {i} near-kernel Gram matrix: {e}"))
        })?;
        (near_kernel, nodes, ag, Some(gag))
    };

    Ok(LocalProblem {
        subdomain: i,
        dofs,
        a_local,
        a_neumann,
        weights,
        factor,
        near_kernel,
        near_kernel_nodes,
        ag,
        gag,
    })
}

fn apply_csr_to_sparse_col(a: &CsrMatrix, col: &[(usize, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for &(r, v) in col {
        let (cols, vals) = a.row(r);
        for (&c, &av) in cols.iter().zip(vals) {
            out[c] += av * v;
        }
    }
    out
}

/// Spectrum of the local generalized eigenproblem, eigenvalues descending.
pub struct GeneoSpectrum {
    pub subdomain: usize,
    pub tau: f64,
    pub delta: f64,
    /// All pencil eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors for the eigenvalues above `tau`, one column each, in
    /// local coordinates and orthonormal in the regularized right-hand matrix.
    pub retained: Mat<f64>,
}

impl GeneoSpectrum {
    pub fn n_retained(&self) -> usize {
        self.retained.ncols()
    }
}

/// Solves the subdomain eigenproblem densely and keeps eigenpairs above `tau`.
pub fn geneo_eigenproblem(local: &LocalProblem, tau: f64, delta: f64) -> Result<GeneoSpectrum> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::Config(format!("GenEO threshold tau = {tau} must be positive")));
    }
    let n = local.n_dofs();

    // W = D (I - xi), built column by column through the factored projection.
    let mut w = Mat::<f64>::zeros(n, n);
    let m = local.near_kernel.ncols();
    if m == 0 {
        for c in 0..n {
            w[(c, c)] = local.weights[c];
        }
    } else {
        let gag = local.gag.as_ref().unwrap();
        // Y = (G^T A G)^{-1} (A G)^T, m x n
        let agt = local.ag.transpose().to_owned();
        let y = gag.solve_mat(&agt);
        let mut acc = vec![0.0f64; n];
        for c in 0..n {
            for v in acc.iter_mut() {
                *v = 0.0;
            }
            for j in 0..m {
                let yj = y[(j, c)];
                if yj != 0.0 {
                    for &(r, g) in local.near_kernel.col(j) {
                        acc[r] += g * yj;
                    }
                }
            }
            let wc = w.col_as_slice_mut(c);
            for r in 0..n {
                let id = if r == c { 1.0 } else { 0.0 };
                wc[r] = local.weights[r] * (id - acc[r]);
            }
        }
    }

    // Left matrix W^T A_i W, symmetrized after the product.
    let mut x = Mat::<f64>::zeros(n, n);
    for c in 0..n {
        let mut col = vec![0.0; n];
        local.a_local.apply_into(w.col_as_slice(c), &mut col);
        x.col_as_slice_mut(c).copy_from_slice(&col);
    }
    let lhs = w.transpose() * &x;
    let lhs = Mat::from_fn(n, n, |r, c| 0.5 * (lhs[(r, c)] + lhs[(c, r)]));

    // Regularized right matrix B = A^Neu + delta * (trace / n) I.
    let mut b = linalg::csr_to_dense(&local.a_neumann);
    let trace: f64 = (0..n).map(|i| b[(i, i)]).sum();
    let shift = delta * trace / n as f64;
    for i in 0..n {
        b[(i, i)] += shift;
    }
    let b_factor = DenseSpdSolver::new(b.as_ref()).map_err(|e| Error::Eigensolver {
        subdomain: local.subdomain,
        detail: format!("regularized Neumann matrix not positive definite: {e}"),
    })?;

    // Congruence to a standard problem: C = L^{-1} lhs L^{-T}.
    let l = b_factor.lower();
    let mut tmp = lhs;
    l.as_ref().solve_lower_triangular_in_place(tmp.as_mut());
    let mut reduced = tmp.transpose().to_owned();
    l.as_ref().solve_lower_triangular_in_place(reduced.as_mut());
    let reduced = Mat::from_fn(n, n, |r, c| 0.5 * (reduced[(r, c)] + reduced[(c, r)]));

    let evd = reduced.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let ascending: Vec<f64> = (0..n).map(|i| s[i]).collect();
    if ascending.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver {
            subdomain: local.subdomain,
            detail: "eigensolver returned non-finite values".into(),
        });
    }
    let eigenvalues: Vec<f64> = ascending.iter().rev().copied().collect();
    let n_keep = eigenvalues.iter().take_while(|&&l| l > tau).count();

    // Map the kept eigenvectors back: V = L^{-T} U.
    let u = evd.u();
    let mut retained = Mat::<f64>::zeros(n, n_keep);
    for k in 0..n_keep {
        let src = n - 1 - k; // descending order
        for r in 0..n {
            retained[(r, k)] = u[(r, src)];
        }
    }
    l.transpose().solve_upper_triangular_in_place(retained.as_mut());

    Ok(GeneoSpectrum { subdomain: local.subdomain, tau, delta, eigenvalues, retained })
}

/// Solves all subdomain eigenproblems in parallel.
pub fn geneo_all(locals: &[LocalProblem], tau: f64, delta: f64) -> Result<Vec<GeneoSpectrum>> {
    locals
        .par_iter()
        .map(|l| geneo_eigenproblem(l, tau, delta))
        .collect()
}

/// Origin of a coarse column, for size reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColOrigin {
    Nk,
    Snk,
    Geneo,
}

/// The near-kernel coarse basis: the gradient columns themselves.
pub fn build_nk_columns(gradient: &DiscreteGradient) -> ColMatrix {
    ColMatrix::from_csr_columns(&gradient.matrix)
}

/// The split near-kernel basis: `R_i^T D_i g` for every surviving local
/// gradient column `g`.
pub fn build_snk_columns(locals: &[LocalProblem], n_global: usize) -> ColMatrix {
    let mut z = ColMatrix::new(n_global);
    for local in locals {
        for j in 0..local.near_kernel.ncols() {
            let entries: Vec<(usize, f64)> = local
                .near_kernel
                .col(j)
                .iter()
                .map(|&(l, v)| (local.dofs[l], local.weights[l] * v))
                .collect();
            let norm: f64 = entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            if norm >= NORM_TOL {
                z.push_col(entries);
            }
        }
    }
    z
}

/// GenEO enrichment columns `R_i^T D_i (I - xi) V` for the retained modes.
pub fn build_geneo_columns(
    locals: &[LocalProblem],
    spectra: &[GeneoSpectrum],
    n_global: usize,
) -> ColMatrix {
    let mut z = ColMatrix::new(n_global);
    for spectrum in spectra {
        let local = &locals[spectrum.subdomain];
        for k in 0..spectrum.n_retained() {
            let v: Vec<f64> = (0..local.n_dofs()).map(|r| spectrum.retained[(r, k)]).collect();
            let w = local.weighted_complement(&v);
            let entries: Vec<(usize, f64)> =
                local.dofs.iter().zip(&w).map(|(&g, &val)| (g, val)).collect();
            z.push_col(entries);
        }
    }
    z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarseKind {
    None,
    Nk,
    Snk,
    NkGeneo,
    SnkGeneo,
}

impl CoarseKind {
    pub fn uses_geneo(self) -> bool {
        matches!(self, CoarseKind::NkGeneo | CoarseKind::SnkGeneo)
    }
}

/// Kept column counts by origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoarseSizes {
    pub nk: usize,
    pub snk: usize,
    pub geneo: usize,
}

impl CoarseSizes {
    pub fn total(&self) -> usize {
        self.nk + self.snk + self.geneo
    }
}

/// Coarse basis with its factorized operator `E = Z^T A Z`.
pub struct CoarseSpace {
    pub kind: CoarseKind,
    pub z: ColMatrix,
    pub sizes: CoarseSizes,
    /// Columns removed by the rank-revealing factorization.
    pub dropped: usize,
    /// Ratio of extreme retained pivots of E.
    pub pivot_ratio: f64,
    e_solver: DenseSpdSolver,
}

/// Assembles and factorizes `E = Z^T A Z`, dropping dependent columns.
pub fn assemble_coarse(
    kind: CoarseKind,
    parts: Vec<(ColOrigin, ColMatrix)>,
    a: &CsrMatrix,
    prune_tol: f64,
) -> Result<CoarseSpace> {
    let n = a.nrows();
    let mut z0 = ColMatrix::new(n);
    let mut origins = Vec::new();
    for (origin, cols) in parts {
        origins.extend(std::iter::repeat_n(origin, cols.ncols()));
        z0.append(&cols);
    }
    let n0 = z0.ncols();
    if n0 == 0 {
        return Err(Error::Config("coarse space has no columns".into()));
    }

    let mut e = Mat::<f64>::zeros(n0, n0);
    for k in 0..n0 {
        let az = apply_csr_to_sparse_col(a, z0.col(k));
        for j in 0..=k {
            let v = z0.col_dot(j, &az);
            e[(j, k)] = v;
            e[(k, j)] = v;
        }
    }

    // Normalize the basis to unit energy. Column scaling leaves the coarse
    // correction invariant but makes the pivot tolerance an angle criterion
    // instead of an energy one; raw energies span many orders of magnitude
    // between interface and interior columns when gamma is small.
    let energies: Vec<f64> = (0..n0).map(|k| e[(k, k)]).collect();
    if let Some(k) = energies.iter().position(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::Factorization(format!(
            "coarse column {k} has nonpositive energy {}",
            energies[k]
        )));
    }
    for k in 0..n0 {
        z0.scale_col(k, 1.0 / energies[k].sqrt());
        for j in 0..n0 {
            e[(j, k)] /= (energies[j] * energies[k]).sqrt();
        }
    }

    let piv = pivoted_cholesky(e.as_ref(), prune_tol);
    let kept = piv.kept.clone();
    if kept.is_empty() {
        return Err(Error::Factorization("coarse matrix has numerical rank zero".into()));
    }
    let z = z0.select(&kept);
    let mut sizes = CoarseSizes::default();
    for &k in &kept {
        match origins[k] {
            ColOrigin::Nk => sizes.nk += 1,
            ColOrigin::Snk => sizes.snk += 1,
            ColOrigin::Geneo => sizes.geneo += 1,
        }
    }
    let e_kept = Mat::from_fn(kept.len(), kept.len(), |r, c| e[(kept[r], kept[c])]);
    let e_solver = DenseSpdSolver::new(e_kept.as_ref()).map_err(|_| {
        Error::Factorization(
            "coarse matrix indefinite beyond the pruning tolerance; assembly is inconsistent"
                .into(),
        )
    })?;

    Ok(CoarseSpace {
        kind,
        z,
        sizes,
        dropped: piv.dropped,
        pivot_ratio: piv.pivot_ratio(),
        e_solver,
    })
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    /// Z E^{-1} Z^T r
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let rhs = self.z.apply_transpose(r);
        let y = self.e_solver.solve_slice(&rhs);
        self.z.apply(&y)
    }

    /// P0 v = Z E^{-1} Z^T A v
    pub fn project(&self, a: &CsrMatrix, v: &[f64]) -> Vec<f64> {
        self.solve(&a.apply(v))
    }

    /// P0^T v = A Z E^{-1} Z^T v
    pub fn project_adjoint(&self, a: &CsrMatrix, v: &[f64]) -> Vec<f64> {
        a.apply(&self.solve(v))
    }
}
