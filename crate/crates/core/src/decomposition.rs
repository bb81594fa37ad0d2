//! Overlapping domain decomposition of the hex mesh.
//!
//! Elements are first partitioned into disjoint owned sets (uniform strips
//! along the beam, or recursive coordinate bisection as a deterministic
//! stand-in for a graph partitioner), then grown by node-connected element
//! layers. Subdomain dof sets are the free edges touched by the grown element
//! sets; the partition of unity weights each dof by the inverse of its
//! multiplicity so that `sum_i R_i^T D_i R_i = I` holds exactly.

use crate::assembly::DofMap;
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Disjoint element ownership.
#[derive(Clone, Debug)]
pub struct Ownership {
    pub owned_hexes: Vec<Vec<usize>>,
}

impl Ownership {
    pub fn n_subdomains(&self) -> usize {
        self.owned_hexes.len()
    }
}

/// Uniform slabs along the beam length; `n` must divide the number of cell
/// layers in x.
pub fn partition_strips(mesh: &Mesh, n: usize) -> Result<Ownership> {
    let nx = mesh.grid_cells[0];
    if n == 0 || !nx.is_multiple_of(n) {
        return Err(Error::Decomposition(format!(
            "{n} subdomains do not evenly divide {nx} cell layers"
        )));
    }
    let width = nx / n;
    let mut owned = vec![Vec::new(); n];
    for (hx, cell) in mesh.hex_cells.iter().enumerate() {
        owned[cell[0] / width].push(hx);
    }
    if let Some(i) = owned.iter().position(|s| s.is_empty()) {
        return Err(Error::Decomposition(format!("strip {i} owns no elements")));
    }
    Ok(Ownership { owned_hexes: owned })
}

/// Recursive coordinate bisection: split the element set at the median of the
/// longest axis, recursing until `n` (a power of two) parts remain. Balanced
/// within one element per split and fully deterministic.
pub fn partition_rcb(mesh: &Mesh, n: usize) -> Result<Ownership> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Decomposition(format!(
            "recursive bisection needs a power-of-two subdomain count, got {n}"
        )));
    }
    if n > mesh.n_hexes() {
        return Err(Error::Decomposition(format!(
            "cannot split {} elements into {n} parts",
            mesh.n_hexes()
        )));
    }
    let mut owned = Vec::with_capacity(n);
    let all: Vec<usize> = (0..mesh.n_hexes()).collect();
    rcb_split(mesh, all, n, &mut owned);
    Ok(Ownership { owned_hexes: owned })
}

fn rcb_split(mesh: &Mesh, mut ids: Vec<usize>, parts: usize, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        ids.sort_unstable();
        out.push(ids);
        return;
    }
    let axis = {
        let mut best = (0usize, 0usize);
        for d in 0..3 {
            let lo = ids.iter().map(|&h| mesh.hex_cells[h][d]).min().unwrap();
            let hi = ids.iter().map(|&h| mesh.hex_cells[h][d]).max().unwrap();
            if hi - lo > best.1 {
                best = (d, hi - lo);
            }
        }
        best.0
    };
    ids.sort_unstable_by_key(|&h| (mesh.hex_cells[h][axis], h));
    let right = ids.split_off(ids.len().div_ceil(2));
    rcb_split(mesh, ids, parts / 2, out);
    rcb_split(mesh, right, parts / 2, out);
}

/// Overlapping decomposition with derived dof sets.
#[derive(Clone, Debug)]
pub struct OverlappingDecomposition {
    pub owned_hexes: Vec<Vec<usize>>,
    /// Owned elements plus `layers` node-connected element layers, sorted.
    pub overlap_hexes: Vec<Vec<usize>>,
    /// Free edge dofs touched by the overlap elements, sorted global indices.
    pub dofs: Vec<Vec<usize>>,
    /// Per free dof: number of subdomains containing it.
    pub dof_multiplicity: Vec<usize>,
    /// Per hex: number of subdomains whose overlap contains it.
    pub hex_multiplicity: Vec<usize>,
}

impl OverlappingDecomposition {
    pub fn n_subdomains(&self) -> usize {
        self.owned_hexes.len()
    }
}

/// Grows each owned set by `layers` rounds of node neighbours and derives the
/// subdomain dof sets.
pub fn extend_overlap(
    mesh: &Mesh,
    edge_map: &DofMap,
    ownership: &Ownership,
    layers: usize,
) -> Result<OverlappingDecomposition> {
    if layers == 0 {
        return Err(Error::Decomposition("overlap needs at least one element layer".into()));
    }
    let n = ownership.n_subdomains();
    let mut overlap_hexes = Vec::with_capacity(n);
    let mut dofs = Vec::with_capacity(n);
    let mut dof_multiplicity = vec![0usize; edge_map.n_free()];
    let mut hex_multiplicity = vec![0usize; mesh.n_hexes()];

    for owned in &ownership.owned_hexes {
        if owned.is_empty() {
            return Err(Error::Decomposition("subdomain owns no elements".into()));
        }
        let mut in_set = vec![false; mesh.n_hexes()];
        for &h in owned {
            in_set[h] = true;
        }
        for _ in 0..layers {
            let mut grow = Vec::new();
            for h in 0..mesh.n_hexes() {
                if !in_set[h] {
                    continue;
                }
                for &node in &mesh.hexes[h] {
                    for &e in &mesh.node_to_edges[node] {
                        for &other in &mesh.edge_to_hexes[e] {
                            if !in_set[other] {
                                grow.push(other);
                            }
                        }
                    }
                }
            }
            for h in grow {
                in_set[h] = true;
            }
        }
        let hexes: Vec<usize> = (0..mesh.n_hexes()).filter(|&h| in_set[h]).collect();
        let mut edge_seen = vec![false; edge_map.n_free()];
        for &h in &hexes {
            hex_multiplicity[h] += 1;
            for &e in &mesh.hex_to_edges[h] {
                if let Some(f) = edge_map.full_to_free[e] {
                    edge_seen[f] = true;
                }
            }
        }
        let set: Vec<usize> = (0..edge_map.n_free()).filter(|&f| edge_seen[f]).collect();
        for &f in &set {
            dof_multiplicity[f] += 1;
        }
        overlap_hexes.push(hexes);
        dofs.push(set);
    }

    if let Some(f) = dof_multiplicity.iter().position(|&m| m == 0) {
        return Err(Error::Decomposition(format!("free dof {f} is covered by no subdomain")));
    }
    Ok(OverlappingDecomposition {
        owned_hexes: ownership.owned_hexes.clone(),
        overlap_hexes,
        dofs,
        dof_multiplicity,
        hex_multiplicity,
    })
}

/// Diagonal partition-of-unity weights, one block per subdomain.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub weights: Vec<Vec<f64>>,
}

pub fn build_partition_of_unity(decomp: &OverlappingDecomposition) -> PartitionOfUnity {
    let weights = decomp
        .dofs
        .iter()
        .map(|set| set.iter().map(|&f| 1.0 / decomp.dof_multiplicity[f] as f64).collect())
        .collect();
    PartitionOfUnity { weights }
}

impl PartitionOfUnity {
    /// sum_i R_i^T D_i R_i v, which must reproduce `v`.
    pub fn glue(&self, decomp: &OverlappingDecomposition, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (set, w) in decomp.dofs.iter().zip(&self.weights) {
            for (&f, &wf) in set.iter().zip(w) {
                out[f] += wf * v[f];
            }
        }
        out
    }
}

/// Maximum number of subdomains interacting with any one subdomain through
/// the sparsity of `A`, the subdomain itself included.
pub fn compute_k0(a: &CsrMatrix, decomp: &OverlappingDecomposition) -> usize {
    let n_sub = decomp.n_subdomains();
    let n = a.nrows();
    let mut subs_of: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, set) in decomp.dofs.iter().enumerate() {
        for &f in set {
            subs_of[f].push(i as u32);
        }
    }
    let mut interacts = vec![false; n_sub * n_sub];
    for (r, cols, _) in a.rows_iter() {
        for &c in cols {
            for &i in &subs_of[r] {
                for &j in &subs_of[c] {
                    interacts[i as usize * n_sub + j as usize] = true;
                }
            }
        }
    }
    (0..n_sub)
        .map(|i| (0..n_sub).filter(|&j| interacts[i * n_sub + j]).count())
        .max()
        .unwrap_or(0)
}

/// Maximum number of subdomains sharing any one element.
pub fn compute_k1(decomp: &OverlappingDecomposition) -> usize {
    decomp.hex_multiplicity.iter().copied().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{self, CoefficientField};
    use crate::mesh::{build_beam_mesh, tag_boundary, BcSpec, BeamGeometry, HoleSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn setup(l: usize, c: usize) -> (crate::mesh::Mesh, crate::mesh::BoundaryTags, DofMap) {
        let geom = BeamGeometry::new(l, c, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        let tags = tag_boundary(&mesh, &BcSpec::all_dirichlet());
        let map = DofMap::edges(&tags);
        (mesh, tags, map)
    }

    #[test]
    fn strips_are_disjoint_and_cover() {
        let (mesh, _, _) = setup(2, 4);
        let own = partition_strips(&mesh, 2).unwrap();
        let mut seen = vec![0usize; mesh.n_hexes()];
        for (i, set) in own.owned_hexes.iter().enumerate() {
            assert_eq!(set.len(), mesh.n_hexes() / 2, "slab {i} unbalanced");
            for &h in set {
                seen[h] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        assert!(partition_strips(&mesh, 3).is_err());
    }

    #[test]
    fn single_subdomain_is_everything() {
        let (mesh, _, map) = setup(1, 4);
        let own = partition_strips(&mesh, 1).unwrap();
        let decomp = extend_overlap(&mesh, &map, &own, 1).unwrap();
        assert_eq!(decomp.overlap_hexes[0].len(), mesh.n_hexes());
        assert_eq!(decomp.dofs[0].len(), map.n_free());
        assert_eq!(compute_k1(&decomp), 1);
    }

    #[test]
    fn rcb_identity_and_midline_split() {
        let (mesh, _, _) = setup(2, 4);
        let one = partition_rcb(&mesh, 1).unwrap();
        assert_eq!(one.owned_hexes[0].len(), mesh.n_hexes());
        let two = partition_rcb(&mesh, 2).unwrap();
        assert_eq!(two.owned_hexes[0].len(), two.owned_hexes[1].len());
        // symmetric beam splits at mid-x
        let nx = mesh.grid_cells[0];
        for &h in &two.owned_hexes[0] {
            assert!(mesh.hex_cells[h][0] < nx / 2);
        }
        for &h in &two.owned_hexes[1] {
            assert!(mesh.hex_cells[h][0] >= nx / 2);
        }
        assert!(partition_rcb(&mesh, 3).is_err());
    }

    #[test]
    fn rcb_is_balanced_within_one() {
        let geom = BeamGeometry::new(8, 2, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        let own = partition_rcb(&mesh, 8).unwrap();
        let sizes: Vec<usize> = own.owned_hexes.iter().map(|s| s.len()).collect();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(hi - lo <= 1, "sizes {sizes:?}");
    }

    #[test]
    fn strip_overlap_region_is_two_cells_wide() {
        let (mesh, _, map) = setup(2, 4);
        let own = partition_strips(&mesh, 2).unwrap();
        let decomp = extend_overlap(&mesh, &map, &own, 1).unwrap();
        let shared: Vec<usize> = (0..mesh.n_hexes())
            .filter(|&h| decomp.hex_multiplicity[h] == 2)
            .collect();
        // one layer each side of the interface: x-cells 3 and 4
        assert_eq!(shared.len(), 2 * 4 * 4);
        for &h in &shared {
            let x = mesh.hex_cells[h][0];
            assert!(x == 3 || x == 4);
        }
        assert_eq!(compute_k1(&decomp), 2);
        assert!(extend_overlap(&mesh, &map, &own, 0).is_err());
    }

    #[test]
    fn pou_weights_are_inverse_multiplicity() {
        let (mesh, _, map) = setup(2, 4);
        let own = partition_strips(&mesh, 2).unwrap();
        let decomp = extend_overlap(&mesh, &map, &own, 1).unwrap();
        let pou = build_partition_of_unity(&decomp);
        for (i, set) in decomp.dofs.iter().enumerate() {
            for (k, &f) in set.iter().enumerate() {
                let expected = 1.0 / decomp.dof_multiplicity[f] as f64;
                assert_eq!(pou.weights[i][k], expected);
                assert!(expected == 1.0 || expected == 0.5);
            }
        }
    }

    #[test]
    fn pou_identity_is_exact_for_strip_multiplicities() {
        // slab width 3 exceeds twice the overlap, so multiplicities stay <= 2
        let (mesh, _, map) = setup(6, 2);
        let own = partition_strips(&mesh, 4).unwrap();
        let decomp = extend_overlap(&mesh, &map, &own, 1).unwrap();
        assert!(decomp.dof_multiplicity.iter().all(|&m| m <= 2));
        let pou = build_partition_of_unity(&decomp);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let v: Vec<f64> = (0..map.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let glued = pou.glue(&decomp, &v);
            // multiplicities of 1 or 2 make the reconstruction bitwise exact
            assert_eq!(glued, v);
        }
    }

    #[test]
    fn interaction_constant_for_strip_layouts() {
        // slab width 4 > twice the overlap width keeps interactions to
        // direct neighbours: second neighbours' dof sets share no element
        let geom = BeamGeometry::new(8, 2, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        let tags = tag_boundary(&mesh, &BcSpec::all_dirichlet());
        let map = DofMap::edges(&tags);
        let coeff = CoefficientField::uniform(&mesh, 1.0, 1.0, 1e-3).unwrap();
        let a = assembly::assemble_curl_curl(&mesh, &coeff, &tags).unwrap();
        let own = partition_strips(&mesh, 4).unwrap();
        let decomp = extend_overlap(&mesh, &map, &own, 1).unwrap();
        assert_eq!(compute_k0(&a, &decomp), 3);
        assert_eq!(compute_k1(&decomp), 2);
        let single = extend_overlap(&mesh, &map, &partition_strips(&mesh, 1).unwrap(), 1).unwrap();
        assert_eq!(compute_k0(&a, &single), 1);
    }
}
