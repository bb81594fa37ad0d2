//! Edge-element assembly on hexahedral meshes.
//!
//! Lowest-order edge elements on axis-aligned bricks: one degree of freedom
//! per edge, the circulation `int_e u . t dl`. The shape function of an edge
//! is directed along its axis with trilinear hat profiles in the transverse
//! coordinates, mapped by the covariant (curl-conforming) transform. Element
//! integrals use 2x2x2 Gauss quadrature, which is exact for these integrands
//! on cubic cells, so reference matrices are computed once and scaled per
//! cell: the curl-curl block by `1 / (mu * h)` and the mass block by
//! `eps * h`.
//!
//! Dirichlet degrees of freedom are eliminated, producing reduced symmetric
//! positive definite systems over the free edges.

use crate::mesh::{BoundaryTags, CellBox, Mesh};
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::{Error, Result};
use std::sync::OnceLock;

/// Piecewise-constant coefficients per hex plus the global mass scaling.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub gamma: f64,
}

/// Named coefficient layouts used by the experiment scenarios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoefficientPattern {
    Uniform,
    /// Eight alternating layers along the beam: eps = 1, value, 1, value, ...
    LayersEps { value: f64 },
    /// Eight alternating layers along the beam in mu.
    LayersMu { value: f64 },
    /// eps takes `value` inside the given boxes (the mesh itself is unholed).
    HolesEps { value: f64 },
    /// mu takes `value` inside the given boxes.
    HolesMu { value: f64 },
}

impl CoefficientField {
    pub fn uniform(mesh: &Mesh, mu: f64, eps: f64, gamma: f64) -> Result<Self> {
        let field = Self {
            mu: vec![mu; mesh.n_hexes()],
            eps: vec![eps; mesh.n_hexes()],
            gamma,
        };
        field.validate()?;
        Ok(field)
    }

    /// Paints a pattern over the mesh cells. `boxes` locates the hole-valued
    /// patterns and may be empty for the uniform and layered ones.
    pub fn from_pattern(
        mesh: &Mesh,
        pattern: CoefficientPattern,
        boxes: &[CellBox],
        gamma: f64,
    ) -> Result<Self> {
        let nx = mesh.grid_cells[0];
        let mut mu = vec![1.0; mesh.n_hexes()];
        let mut eps = vec![1.0; mesh.n_hexes()];
        match pattern {
            CoefficientPattern::Uniform => {}
            CoefficientPattern::LayersEps { value } | CoefficientPattern::LayersMu { value } => {
                if nx < 8 {
                    return Err(Error::Config(format!(
                        "layered coefficients need at least 8 cells along the beam, got {nx}"
                    )));
                }
                let target: &mut Vec<f64> = if matches!(pattern, CoefficientPattern::LayersEps { .. })
                {
                    &mut eps
                } else {
                    &mut mu
                };
                for (hx, cell) in mesh.hex_cells.iter().enumerate() {
                    if (cell[0] * 8 / nx) % 2 == 1 {
                        target[hx] = value;
                    }
                }
            }
            CoefficientPattern::HolesEps { value } | CoefficientPattern::HolesMu { value } => {
                let target: &mut Vec<f64> = if matches!(pattern, CoefficientPattern::HolesEps { .. })
                {
                    &mut eps
                } else {
                    &mut mu
                };
                for (hx, &cell) in mesh.hex_cells.iter().enumerate() {
                    if boxes.iter().any(|b| b.contains(cell)) {
                        target[hx] = value;
                    }
                }
            }
        }
        let field = Self { mu, eps, gamma };
        field.validate()?;
        Ok(field)
    }

    fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma = {} must be positive", self.gamma)));
        }
        for (name, vals) in [("mu", &self.mu), ("eps", &self.eps)] {
            if let Some(v) = vals.iter().find(|v| **v <= 0.0 || !v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be strictly positive")));
            }
        }
        Ok(())
    }
}

struct ReferenceElement {
    curl_curl: [[f64; 12]; 12],
    mass: [[f64; 12]; 12],
    /// int over the reference cube of each shape function (a 3-vector).
    moment: [[f64; 3]; 12],
}

fn hat(b: usize, t: f64) -> f64 {
    if b == 0 {
        1.0 - t
    } else {
        t
    }
}

fn dhat(b: usize) -> f64 {
    if b == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Value and curl of reference edge function `e` at a reference point.
fn reference_basis(e: usize, p: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = e / 4;
    let b1 = (e % 4) & 1;
    let b2 = (e % 4) >> 1;
    let [x, y, z] = p;
    match axis {
        0 => {
            let v = hat(b1, y) * hat(b2, z);
            ([v, 0.0, 0.0], [0.0, hat(b1, y) * dhat(b2), -dhat(b1) * hat(b2, z)])
        }
        1 => {
            let v = hat(b1, x) * hat(b2, z);
            ([0.0, v, 0.0], [-hat(b1, x) * dhat(b2), 0.0, dhat(b1) * hat(b2, z)])
        }
        _ => {
            let v = hat(b1, x) * hat(b2, y);
            ([0.0, 0.0, v], [hat(b1, x) * dhat(b2), -dhat(b1) * hat(b2, y), 0.0])
        }
    }
}

fn reference_element() -> &'static ReferenceElement {
    static CELL: OnceLock<ReferenceElement> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = 0.5 / f64::sqrt(3.0);
        let pts = [0.5 - g, 0.5 + g];
        let mut curl_curl = [[0.0; 12]; 12];
        let mut mass = [[0.0; 12]; 12];
        let mut moment = [[0.0; 3]; 12];
        for &x in &pts {
            for &y in &pts {
                for &z in &pts {
                    let w = 0.125;
                    let vals: Vec<_> = (0..12).map(|e| reference_basis(e, [x, y, z])).collect();
                    for a in 0..12 {
                        let (va, ca) = vals[a];
                        for d in 0..3 {
                            moment[a][d] += w * va[d];
                        }
                        for b in 0..12 {
                            let (vb, cb) = vals[b];
                            mass[a][b] += w * (va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2]);
                            curl_curl[a][b] += w * (ca[0] * cb[0] + ca[1] * cb[1] + ca[2] * cb[2]);
                        }
                    }
                }
            }
        }
        ReferenceElement { curl_curl, mass, moment }
    })
}

fn assemble_full(mesh: &Mesh, scale: impl Fn(usize) -> f64, local: &[[f64; 12]; 12]) -> CsrMatrix {
    let n = mesh.n_edges();
    let mut builder = CooBuilder::with_capacity(n, n, mesh.n_hexes() * 144);
    for (hx, edges) in mesh.hex_to_edges.iter().enumerate() {
        let s = scale(hx);
        for a in 0..12 {
            for b in 0..12 {
                builder.push(edges[a], edges[b], s * local[a][b]);
            }
        }
    }
    builder.build(true)
}

/// Curl-curl matrix `K` over all edges, weighted by `1 / mu` per cell.
pub fn assemble_curl_curl_full(mesh: &Mesh, coeff: &CoefficientField) -> Result<CsrMatrix> {
    coeff.validate()?;
    let re = reference_element();
    let h = mesh.h;
    Ok(assemble_full(mesh, |hx| 1.0 / (coeff.mu[hx] * h), &re.curl_curl))
}

/// Edge mass matrix `M` over all edges, weighted by `eps` per cell.
pub fn assemble_mass_full(mesh: &Mesh, coeff: &CoefficientField) -> Result<CsrMatrix> {
    coeff.validate()?;
    let re = reference_element();
    let h = mesh.h;
    Ok(assemble_full(mesh, |hx| coeff.eps[hx] * h, &re.mass))
}

/// Mapping between a full dof set and its free (non-Dirichlet) subset.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub full_to_free: Vec<Option<usize>>,
    pub free_to_full: Vec<usize>,
}

impl DofMap {
    pub fn from_removed_flags(removed: &[bool]) -> Self {
        let mut full_to_free = vec![None; removed.len()];
        let mut free_to_full = Vec::new();
        for (i, &r) in removed.iter().enumerate() {
            if !r {
                full_to_free[i] = Some(free_to_full.len());
                free_to_full.push(i);
            }
        }
        Self { full_to_free, free_to_full }
    }

    pub fn edges(tags: &BoundaryTags) -> Self {
        Self::from_removed_flags(&tags.edge_is_dirichlet)
    }

    pub fn nodes(tags: &BoundaryTags) -> Self {
        Self::from_removed_flags(&tags.node_is_dirichlet)
    }

    pub fn n_free(&self) -> usize {
        self.free_to_full.len()
    }

    pub fn is_identity(&self) -> bool {
        self.free_to_full.len() == self.full_to_free.len()
    }
}

/// Removes Dirichlet rows and columns from an edge-space matrix, returning the
/// reduced matrix and the dof mapping used for reconstruction.
pub fn eliminate_dirichlet(matrix: &CsrMatrix, tags: &BoundaryTags) -> (CsrMatrix, DofMap) {
    assert_eq!(matrix.nrows(), tags.edge_is_dirichlet.len());
    let map = DofMap::edges(tags);
    (matrix.principal_submatrix(&map.free_to_full), map)
}

/// `K` reduced to the free edge dofs.
pub fn assemble_curl_curl(
    mesh: &Mesh,
    coeff: &CoefficientField,
    tags: &BoundaryTags,
) -> Result<CsrMatrix> {
    let full = assemble_curl_curl_full(mesh, coeff)?;
    Ok(eliminate_dirichlet(&full, tags).0)
}

/// `M` reduced to the free edge dofs.
pub fn assemble_mass(mesh: &Mesh, coeff: &CoefficientField, tags: &BoundaryTags) -> Result<CsrMatrix> {
    let full = assemble_mass_full(mesh, coeff)?;
    Ok(eliminate_dirichlet(&full, tags).0)
}

/// `A = K + gamma * M`.
pub fn combine_system(k: &CsrMatrix, m: &CsrMatrix, gamma: f64) -> Result<CsrMatrix> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::Config(format!("gamma = {gamma} must be positive")));
    }
    k.add_scaled(m, gamma)
}

/// Load vector for a constant volume source, over the free edge dofs.
pub fn assemble_rhs(mesh: &Mesh, tags: &BoundaryTags, f: [f64; 3]) -> Vec<f64> {
    let re = reference_element();
    let map = DofMap::edges(tags);
    let h2 = mesh.h * mesh.h;
    let mut rhs = vec![0.0; map.n_free()];
    for edges in &mesh.hex_to_edges {
        for (&edge, m) in edges.iter().zip(&re.moment) {
            if let Some(fe) = map.full_to_free[edge] {
                rhs[fe] += h2 * (f[0] * m[0] + f[1] * m[1] + f[2] * m[2]);
            }
        }
    }
    rhs
}

/// Discrete gradient `C`: rows are free edges, columns free nodes, entries
/// +1 at the edge head and -1 at the tail. Satisfies `K * C = 0`.
#[derive(Clone, Debug)]
pub struct DiscreteGradient {
    pub matrix: CsrMatrix,
    pub node_map: DofMap,
}

pub fn discrete_gradient(mesh: &Mesh, tags: &BoundaryTags) -> DiscreteGradient {
    let edge_map = DofMap::edges(tags);
    let node_map = DofMap::nodes(tags);
    let mut builder = CooBuilder::with_capacity(edge_map.n_free(), node_map.n_free(), 2 * edge_map.n_free());
    for (e, &(tail, head)) in mesh.edges.iter().enumerate() {
        if let Some(row) = edge_map.full_to_free[e] {
            if let Some(col) = node_map.full_to_free[head] {
                builder.push(row, col, 1.0);
            }
            if let Some(col) = node_map.full_to_free[tail] {
                builder.push(row, col, -1.0);
            }
        }
    }
    DiscreteGradient { matrix: builder.build(false), node_map }
}

/// Local Neumann matrix: the bilinear form `K + gamma M` subassembled over the
/// given hexes only, with rows/columns restricted to `dofs` (sorted global
/// free edge indices). No artificial condition is imposed on the subdomain's
/// interior boundary; the original Dirichlet data is inherited because
/// Dirichlet edges are not free dofs.
pub fn assemble_neumann_local(
    mesh: &Mesh,
    coeff: &CoefficientField,
    tags: &BoundaryTags,
    hexes: &[usize],
    dofs: &[usize],
) -> CsrMatrix {
    let re = reference_element();
    let edge_map = DofMap::edges(tags);
    let mut local_of_free = vec![usize::MAX; edge_map.n_free()];
    for (l, &g) in dofs.iter().enumerate() {
        local_of_free[g] = l;
    }
    let n = dofs.len();
    let h = mesh.h;
    let mut builder = CooBuilder::with_capacity(n, n, hexes.len() * 144);
    for &hx in hexes {
        let edges = &mesh.hex_to_edges[hx];
        let sk = 1.0 / (coeff.mu[hx] * h);
        let sm = coeff.gamma * coeff.eps[hx] * h;
        let local: [usize; 12] = std::array::from_fn(|a| {
            edge_map.full_to_free[edges[a]]
                .map(|f| local_of_free[f])
                .unwrap_or(usize::MAX)
        });
        for a in 0..12 {
            if local[a] == usize::MAX {
                continue;
            }
            for b in 0..12 {
                if local[b] == usize::MAX {
                    continue;
                }
                let v = sk * re.curl_curl[a][b] + sm * re.mass[a][b];
                builder.push(local[a], local[b], v);
            }
        }
    }
    builder.build(true)
}

/// Assembled problem bundle over the free edge dofs.
#[derive(Clone, Debug)]
pub struct System {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub a: CsrMatrix,
    pub rhs: Vec<f64>,
    pub gradient: DiscreteGradient,
    pub edge_map: DofMap,
}

impl System {
    pub fn build(mesh: &Mesh, coeff: &CoefficientField, tags: &BoundaryTags) -> Result<System> {
        let k = assemble_curl_curl(mesh, coeff, tags)?;
        let m = assemble_mass(mesh, coeff, tags)?;
        let a = combine_system(&k, &m, coeff.gamma)?;
        let rhs = assemble_rhs(mesh, tags, [1.0, 1.0, 1.0]);
        let gradient = discrete_gradient(mesh, tags);
        let edge_map = DofMap::edges(tags);
        Ok(System { k, m, a, rhs, gradient, edge_map })
    }

    pub fn n_dofs(&self) -> usize {
        self.a.nrows()
    }
}

/// max |K C| relative to max |K|; the discrete complex property makes this
/// vanish to rounding.
pub fn gradient_kernel_defect(k: &CsrMatrix, c: &CsrMatrix) -> f64 {
    let mut worst = 0.0f64;
    let mut col = vec![0.0; c.nrows()];
    for j in 0..c.ncols() {
        col.fill(0.0);
        // dense copy of column j
        for (r, cols, vals) in c.rows_iter() {
            for (&cc, &v) in cols.iter().zip(vals) {
                if cc == j {
                    col[r] = v;
                }
            }
        }
        let kc = k.apply(&col);
        worst = worst.max(kc.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    worst / k.max_abs()
}
