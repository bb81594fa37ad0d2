//! Hexahedral beam meshes with optional holes.
//!
//! The beam occupies `L x 1 x 1` and is meshed by a Cartesian grid of cubic
//! cells of side `h = 1 / cells_per_unit`. Holes are unions of removed cells
//! specified on the integer cell grid: the built-in [`HoleSpec::Beam`] family
//! carves four square holes along the whole length plus two transverse holes
//! per unit length, each crossing the beam from one lateral side to the other
//! and passing through two of the longitudinal holes.
//!
//! Node and edge numbering is lexicographic in `(x, y, z)`, so every edge,
//! written with its smaller node first, points along a positive axis. This
//! makes discrete gradient entries deterministic and assembly reproducible
//! bit-for-bit.

use crate::{Error, Result};
use std::collections::HashMap;
use std::io::Write;

/// Local corner `l` of a hex has offsets `(l & 1, l >> 1 & 1, l >> 2 & 1)`.
///
/// The twelve local edges are listed by direction (x, y, z), each group
/// ordered by the two transverse offsets `(b1, b2)` as (0,0), (1,0), (0,1),
/// (1,1). The assembly module evaluates reference shape functions in exactly
/// this order.
pub const HEX_EDGE_CORNERS: [(usize, usize); 12] = [
    // x-directed, transverse (y, z)
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    // y-directed, transverse (x, z)
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    // z-directed, transverse (x, y)
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

const HEX_FACE_CORNERS: [[usize; 4]; 6] = [
    [0, 2, 4, 6], // x min
    [1, 3, 5, 7], // x max
    [0, 1, 4, 5], // y min
    [2, 3, 6, 7], // y max
    [0, 1, 2, 3], // z min
    [4, 5, 6, 7], // z max
];

/// Half-open box of cell indices, `lo[d] <= cell[d] < hi[d]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, cell: [usize; 3]) -> bool {
        (0..3).all(|d| self.lo[d] <= cell[d] && cell[d] < self.hi[d])
    }
}

/// Hole description on the integer cell grid.
#[derive(Clone, Debug)]
pub enum HoleSpec {
    None,
    /// Four longitudinal holes placed symmetrically in the cross-section plus
    /// two transverse holes per unit length, all of square cross-section
    /// `width_cells` wide.
    Beam { width_cells: usize },
    /// Explicit removed-cell boxes.
    Boxes(Vec<CellBox>),
}

impl HoleSpec {
    pub fn enabled(&self) -> bool {
        !matches!(self, HoleSpec::None)
    }
}

/// Beam of `length_units x 1 x 1` meshed with `cells_per_unit` cells per unit
/// length in every direction.
#[derive(Clone, Debug)]
pub struct BeamGeometry {
    pub length_units: usize,
    pub cells_per_unit: usize,
    pub holes: HoleSpec,
}

impl BeamGeometry {
    pub fn new(length_units: usize, cells_per_unit: usize, holes: HoleSpec) -> Result<Self> {
        if length_units == 0 {
            return Err(Error::Geometry("beam length must be at least one unit".into()));
        }
        if cells_per_unit == 0 {
            return Err(Error::Geometry("cells_per_unit must be positive".into()));
        }
        let geom = Self { length_units, cells_per_unit, holes };
        geom.hole_boxes()?; // validate the hole layout early
        Ok(geom)
    }

    /// Builds the geometry from a mesh spacing `h`; rejects `h` unless `1/h`
    /// is (numerically) a positive integer.
    pub fn with_spacing(length_units: usize, h: f64, holes: HoleSpec) -> Result<Self> {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::Geometry(format!("mesh spacing h = {h} must be positive")));
        }
        let inv = 1.0 / h;
        if (inv - inv.round()).abs() > 1e-9 || inv.round() < 1.0 {
            return Err(Error::Geometry(format!(
                "mesh spacing h = {h} must divide 1 (1/h = {inv} is not an integer)"
            )));
        }
        Self::new(length_units, inv.round() as usize, holes)
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells_per_unit as f64
    }

    /// Grid extent in cells: `(L * c, c, c)`.
    pub fn grid_cells(&self) -> [usize; 3] {
        let c = self.cells_per_unit;
        [self.length_units * c, c, c]
    }

    /// The removed-cell boxes described by the hole spec.
    pub fn hole_boxes(&self) -> Result<Vec<CellBox>> {
        let [nx, ny, nz] = self.grid_cells();
        let boxes = match &self.holes {
            HoleSpec::None => Vec::new(),
            HoleSpec::Beam { width_cells } => {
                Self::beam_hole_boxes(self.length_units, self.cells_per_unit, *width_cells)?
            }
            HoleSpec::Boxes(boxes) => boxes.clone(),
        };
        for b in &boxes {
            if (0..3).any(|d| b.lo[d] >= b.hi[d]) {
                return Err(Error::Geometry(format!("empty hole box {b:?}")));
            }
            if b.hi[0] > nx || b.hi[1] > ny || b.hi[2] > nz {
                return Err(Error::Geometry(format!(
                    "hole box {b:?} exceeds the {nx}x{ny}x{nz} cell grid"
                )));
            }
        }
        Ok(boxes)
    }

    /// The standard hole family: four longitudinal holes whose square
    /// cross-sections sit symmetrically and strictly inside the 1x1 face,
    /// plus two transverse holes per unit length crossing the full width and
    /// each passing through two of the longitudinal holes.
    pub fn beam_hole_boxes(
        length_units: usize,
        cells_per_unit: usize,
        width_cells: usize,
    ) -> Result<Vec<CellBox>> {
        let c = cells_per_unit;
        let w = width_cells;
        let half = c / 2;
        if w == 0 {
            return Err(Error::Geometry("hole width must be at least one cell".into()));
        }
        if half < w + 2 {
            return Err(Error::Geometry(format!(
                "hole width {w} does not fit strictly inside a cross-section of {c} cells \
                 (need cells_per_unit >= 2 * (width + 2))"
            )));
        }
        let near = (half - w) / 2;
        let far = c - near - w;
        let nx = length_units * c;
        let mut boxes = Vec::new();
        for &y in &[near, far] {
            for &z in &[near, far] {
                boxes.push(CellBox::new([0, y, z], [nx, y + w, z + w]));
            }
        }
        for unit in 0..length_units {
            let x0 = unit * c;
            // crosses the two holes at z = near, then the two at z = far
            boxes.push(CellBox::new([x0 + near, 0, near], [x0 + near + w, c, near + w]));
            boxes.push(CellBox::new([x0 + far, 0, far], [x0 + far + w, c, far + w]));
        }
        Ok(boxes)
    }
}

/// The six outer planes of the beam.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterFace {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl OuterFace {
    pub const ALL: [OuterFace; 6] = [
        OuterFace::XMin,
        OuterFace::XMax,
        OuterFace::YMin,
        OuterFace::YMax,
        OuterFace::ZMin,
        OuterFace::ZMax,
    ];

    fn index(self) -> usize {
        match self {
            OuterFace::XMin => 0,
            OuterFace::XMax => 1,
            OuterFace::YMin => 2,
            OuterFace::YMax => 3,
            OuterFace::ZMin => 4,
            OuterFace::ZMax => 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceBc {
    Dirichlet,
    Neumann,
}

/// Boundary condition assignment for the six outer faces. Hole-created faces
/// are always Neumann.
#[derive(Clone, Copy, Debug)]
pub struct BcSpec {
    faces: [FaceBc; 6],
}

impl BcSpec {
    pub fn new(faces: [FaceBc; 6]) -> Self {
        Self { faces }
    }

    /// Homogeneous Dirichlet on all six faces.
    pub fn all_dirichlet() -> Self {
        Self { faces: [FaceBc::Dirichlet; 6] }
    }

    /// Neumann on two opposite lateral faces (y min/max), Dirichlet elsewhere.
    pub fn mixed_lateral() -> Self {
        let mut faces = [FaceBc::Dirichlet; 6];
        faces[OuterFace::YMin.index()] = FaceBc::Neumann;
        faces[OuterFace::YMax.index()] = FaceBc::Neumann;
        Self { faces }
    }

    pub fn face(&self, f: OuterFace) -> FaceBc {
        self.faces[f.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Outer(OuterFace),
    Hole,
}

/// Quadrilateral face on the mesh boundary.
#[derive(Clone, Debug)]
pub struct BoundaryFace {
    pub nodes: [usize; 4],
    pub edges: [usize; 4],
    pub hex: usize,
    pub kind: FaceKind,
}

/// Immutable hexahedral mesh with full incidence information.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub h: f64,
    pub grid_cells: [usize; 3],
    pub nodes: Vec<[f64; 3]>,
    pub node_coords: Vec<[usize; 3]>,
    pub hexes: Vec<[usize; 8]>,
    pub hex_cells: Vec<[usize; 3]>,
    /// Oriented edges `(tail, head)` with `tail < head`.
    pub edges: Vec<(usize, usize)>,
    pub hex_to_edges: Vec<[usize; 12]>,
    pub node_to_edges: Vec<Vec<usize>>,
    pub edge_to_hexes: Vec<Vec<usize>>,
    pub boundary_faces: Vec<BoundaryFace>,
}

/// Closed-form edge count of a full `nx x ny x nz` cell grid.
pub fn grid_edge_count(nx: usize, ny: usize, nz: usize) -> usize {
    nx * (ny + 1) * (nz + 1) + (nx + 1) * ny * (nz + 1) + (nx + 1) * (ny + 1) * nz
}

/// Builds the beam mesh with holes carved out.
pub fn build_beam_mesh(geom: &BeamGeometry) -> Result<Mesh> {
    let [nx, ny, nz] = geom.grid_cells();
    let boxes = geom.hole_boxes()?;
    cartesian_mesh([nx, ny, nz], geom.spacing(), &boxes)
}

/// Builds a Cartesian mesh over an arbitrary cell grid with removed boxes.
pub fn cartesian_mesh(grid_cells: [usize; 3], h: f64, holes: &[CellBox]) -> Result<Mesh> {
    let [nx, ny, nz] = grid_cells;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::Geometry("cell grid must be nonempty in every direction".into()));
    }

    let mut cells = Vec::new();
    for cx in 0..nx {
        for cy in 0..ny {
            for cz in 0..nz {
                let cell = [cx, cy, cz];
                if !holes.iter().any(|b| b.contains(cell)) {
                    cells.push(cell);
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Geometry("holes remove every cell of the mesh".into()));
    }

    // Lexicographic node numbering over the used subset of the full grid.
    let gnx = nx + 1;
    let gny = ny + 1;
    let gnz = nz + 1;
    let grid_id = |x: usize, y: usize, z: usize| (x * gny + y) * gnz + z;
    let mut used = vec![false; gnx * gny * gnz];
    for &[cx, cy, cz] in &cells {
        for l in 0..8 {
            used[grid_id(cx + (l & 1), cy + (l >> 1 & 1), cz + (l >> 2 & 1))] = true;
        }
    }
    let mut node_of_grid = vec![usize::MAX; used.len()];
    let mut nodes = Vec::new();
    let mut node_coords = Vec::new();
    for x in 0..gnx {
        for y in 0..gny {
            for z in 0..gnz {
                let g = grid_id(x, y, z);
                if used[g] {
                    node_of_grid[g] = nodes.len();
                    nodes.push([x as f64 * h, y as f64 * h, z as f64 * h]);
                    node_coords.push([x, y, z]);
                }
            }
        }
    }

    let mut hexes = Vec::with_capacity(cells.len());
    for &[cx, cy, cz] in &cells {
        let mut corners = [0usize; 8];
        for (l, c) in corners.iter_mut().enumerate() {
            *c = node_of_grid[grid_id(cx + (l & 1), cy + (l >> 1 & 1), cz + (l >> 2 & 1))];
        }
        hexes.push(corners);
    }

    let mut edge_pairs: Vec<(usize, usize)> = Vec::with_capacity(hexes.len() * 12);
    for corners in &hexes {
        for &(t, h) in &HEX_EDGE_CORNERS {
            let (a, b) = (corners[t], corners[h]);
            debug_assert!(a < b, "lexicographic numbering orients edges along +axes");
            edge_pairs.push((a, b));
        }
    }
    edge_pairs.sort_unstable();
    edge_pairs.dedup();
    let edges = edge_pairs;
    let edge_id: HashMap<(usize, usize), usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();

    let mut hex_to_edges = Vec::with_capacity(hexes.len());
    let mut edge_to_hexes = vec![Vec::new(); edges.len()];
    for (hx, corners) in hexes.iter().enumerate() {
        let mut ids = [0usize; 12];
        for (le, &(t, h)) in HEX_EDGE_CORNERS.iter().enumerate() {
            let id = edge_id[&(corners[t], corners[h])];
            ids[le] = id;
            edge_to_hexes[id].push(hx);
        }
        hex_to_edges.push(ids);
    }

    let mut node_to_edges = vec![Vec::new(); nodes.len()];
    for (i, &(a, b)) in edges.iter().enumerate() {
        node_to_edges[a].push(i);
        node_to_edges[b].push(i);
    }

    // Boundary faces are those appearing in exactly one hex.
    let mut face_count: HashMap<[usize; 4], u8> = HashMap::new();
    for corners in &hexes {
        for local in &HEX_FACE_CORNERS {
            let mut key = [corners[local[0]], corners[local[1]], corners[local[2]], corners[local[3]]];
            key.sort_unstable();
            *face_count.entry(key).or_insert(0) += 1;
        }
    }
    let mut boundary_faces = Vec::new();
    for (hx, corners) in hexes.iter().enumerate() {
        for local in &HEX_FACE_CORNERS {
            let quad = [corners[local[0]], corners[local[1]], corners[local[2]], corners[local[3]]];
            let mut key = quad;
            key.sort_unstable();
            if face_count[&key] != 1 {
                continue;
            }
            let kind = classify_face(&key, &node_coords, [nx, ny, nz]);
            let mut face_edges = [usize::MAX; 4];
            let mut k = 0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let (a, b) = (key[i], key[j]);
                    let (ca, cb) = (node_coords[a], node_coords[b]);
                    let diff = (0..3).filter(|&d| ca[d] != cb[d]).count();
                    if diff == 1 {
                        face_edges[k] = edge_id[&(a, b)];
                        k += 1;
                    }
                }
            }
            debug_assert_eq!(k, 4);
            boundary_faces.push(BoundaryFace { nodes: key, edges: face_edges, hex: hx, kind });
        }
    }

    if holes.is_empty() {
        assert_eq!(edges.len(), grid_edge_count(nx, ny, nz));
    }

    Ok(Mesh {
        h,
        grid_cells,
        nodes,
        node_coords,
        hexes,
        hex_cells: cells,
        edges,
        hex_to_edges,
        node_to_edges,
        edge_to_hexes,
        boundary_faces,
    })
}

fn classify_face(nodes: &[usize; 4], coords: &[[usize; 3]], grid: [usize; 3]) -> FaceKind {
    for (d, face_pair) in [
        (0, [OuterFace::XMin, OuterFace::XMax]),
        (1, [OuterFace::YMin, OuterFace::YMax]),
        (2, [OuterFace::ZMin, OuterFace::ZMax]),
    ] {
        if nodes.iter().all(|&n| coords[n][d] == 0) {
            return FaceKind::Outer(face_pair[0]);
        }
        if nodes.iter().all(|&n| coords[n][d] == grid[d]) {
            return FaceKind::Outer(face_pair[1]);
        }
    }
    FaceKind::Hole
}

/// Dirichlet/Neumann tags derived from a [`BcSpec`].
#[derive(Clone, Debug)]
pub struct BoundaryTags {
    pub face_tags: Vec<FaceBc>,
    pub edge_is_dirichlet: Vec<bool>,
    pub node_is_dirichlet: Vec<bool>,
}

/// Tags every boundary face, edge and node. An edge or node is Dirichlet
/// exactly when it lies on at least one Dirichlet-tagged face; hole-created
/// faces are always Neumann.
pub fn tag_boundary(mesh: &Mesh, bc: &BcSpec) -> BoundaryTags {
    let mut face_tags = Vec::with_capacity(mesh.boundary_faces.len());
    let mut edge_is_dirichlet = vec![false; mesh.edges.len()];
    let mut node_is_dirichlet = vec![false; mesh.nodes.len()];
    for face in &mesh.boundary_faces {
        let tag = match face.kind {
            FaceKind::Outer(f) => bc.face(f),
            FaceKind::Hole => FaceBc::Neumann,
        };
        face_tags.push(tag);
        if tag == FaceBc::Dirichlet {
            for &e in &face.edges {
                edge_is_dirichlet[e] = true;
            }
            for &n in &face.nodes {
                node_is_dirichlet[n] = true;
            }
        }
    }
    BoundaryTags { face_tags, edge_is_dirichlet, node_is_dirichlet }
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_hexes(&self) -> usize {
        self.hexes.len()
    }

    /// Plain-text listing of nodes, hexes and edges, for debugging.
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "mesh {}x{}x{} cells, h = {}", self.grid_cells[0], self.grid_cells[1], self.grid_cells[2], self.h)?;
        writeln!(w, "nodes {}", self.n_nodes())?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(w, "  n{} {} {} {}", i, p[0], p[1], p[2])?;
        }
        writeln!(w, "hexes {}", self.n_hexes())?;
        for (i, hx) in self.hexes.iter().enumerate() {
            writeln!(w, "  h{} {:?}", i, hx)?;
        }
        writeln!(w, "edges {}", self.n_edges())?;
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            writeln!(w, "  e{} {} -> {}", i, a, b)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn unit_beam_counts() {
        let geom = BeamGeometry::with_spacing(1, 0.5, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        assert_eq!(mesh.n_hexes(), 8);
        assert_eq!(mesh.n_edges(), 54); // 2*3*3 + 3*2*3 + 3*3*2
        assert_eq!(mesh.n_nodes(), 27);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(BeamGeometry::with_spacing(1, 0.3, HoleSpec::None).is_err());
        assert!(BeamGeometry::with_spacing(1, -0.5, HoleSpec::None).is_err());
        assert!(BeamGeometry::with_spacing(0, 0.5, HoleSpec::None).is_err());
    }

    #[test]
    fn rejects_holes_that_do_not_fit() {
        // cross-section of 4 cells cannot hold the four-hole family
        assert!(BeamGeometry::new(1, 4, HoleSpec::Beam { width_cells: 1 }).is_err());
        // box outside the grid
        let b = HoleSpec::Boxes(vec![CellBox::new([0, 0, 0], [1, 1, 9])]);
        assert!(BeamGeometry::new(1, 4, b).is_err());
    }

    type GridPoint = (usize, usize, usize);

    /// Independent edge enumeration over the retained cells.
    fn brute_force_edges(grid: [usize; 3], holes: &[CellBox]) -> HashSet<(GridPoint, GridPoint)> {
        let mut set = HashSet::new();
        for cx in 0..grid[0] {
            for cy in 0..grid[1] {
                for cz in 0..grid[2] {
                    if holes.iter().any(|b| b.contains([cx, cy, cz])) {
                        continue;
                    }
                    let corner = |l: usize| (cx + (l & 1), cy + (l >> 1 & 1), cz + (l >> 2 & 1));
                    for &(t, h) in &HEX_EDGE_CORNERS {
                        set.insert((corner(t), corner(h)));
                    }
                }
            }
        }
        set
    }

    #[test]
    fn single_longitudinal_hole_matches_enumeration() {
        // L = 2, h = 1/4, one 1-cell-wide hole along the full length
        let hole = CellBox::new([0, 1, 1], [8, 2, 2]);
        let geom = BeamGeometry::with_spacing(2, 0.25, HoleSpec::Boxes(vec![hole])).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        assert_eq!(mesh.n_hexes(), 2 * 4 * 4 * 4 - 2 * 4);
        let oracle = brute_force_edges(geom.grid_cells(), &[hole]);
        assert_eq!(mesh.n_edges(), oracle.len());
    }

    #[test]
    fn beam_hole_family_matches_enumeration() {
        let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 }).unwrap();
        let boxes = geom.hole_boxes().unwrap();
        assert_eq!(boxes.len(), 4 + 2 * 2);
        let mesh = build_beam_mesh(&geom).unwrap();
        let oracle = brute_force_edges(geom.grid_cells(), &boxes);
        assert_eq!(mesh.n_edges(), oracle.len());
        // hole faces never lie in an outer plane
        let grid = geom.grid_cells();
        for f in &mesh.boundary_faces {
            if f.kind == FaceKind::Hole {
                for (d, &extent) in grid.iter().enumerate() {
                    assert!(!f.nodes.iter().all(|&n| mesh.node_coords[n][d] == 0));
                    assert!(!f.nodes.iter().all(|&n| mesh.node_coords[n][d] == extent));
                }
            }
        }
    }

    #[test]
    fn closed_form_edge_count_exhaustive() {
        for nx in 1..=8 {
            for ny in 1..=8 {
                for nz in 1..=8 {
                    let mesh = cartesian_mesh([nx, ny, nz], 1.0, &[]).unwrap();
                    assert_eq!(mesh.n_edges(), grid_edge_count(nx, ny, nz));
                }
            }
        }
    }

    #[test]
    fn reference_scale_edge_count() {
        // L = 4 beam at h = 1/16
        let geom = BeamGeometry::with_spacing(4, 1.0 / 16.0, HoleSpec::None).unwrap();
        let [nx, ny, nz] = geom.grid_cells();
        assert_eq!(grid_edge_count(nx, ny, nz), 53_856);
    }

    #[test]
    fn incidence_round_trip() {
        let geom = BeamGeometry::new(2, 4, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        for (hx, edges) in mesh.hex_to_edges.iter().enumerate() {
            for &e in edges {
                assert!(mesh.edge_to_hexes[e].contains(&hx));
            }
        }
        for (e, &(a, b)) in mesh.edges.iter().enumerate() {
            assert!(!mesh.edge_to_hexes[e].is_empty(), "edge in no hex");
            assert!(a < b);
            assert!(mesh.node_to_edges[a].contains(&e));
            assert!(mesh.node_to_edges[b].contains(&e));
        }
    }

    #[test]
    fn all_dirichlet_flags_every_boundary_edge() {
        let geom = BeamGeometry::new(1, 3, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        let tags = tag_boundary(&mesh, &BcSpec::all_dirichlet());
        let mut on_boundary = vec![false; mesh.n_edges()];
        for f in &mesh.boundary_faces {
            for &e in &f.edges {
                on_boundary[e] = true;
            }
        }
        assert_eq!(tags.edge_is_dirichlet, on_boundary);
        // every Dirichlet edge has both nodes on a Dirichlet face
        for (e, &(a, b)) in mesh.edges.iter().enumerate() {
            if tags.edge_is_dirichlet[e] {
                assert!(tags.node_is_dirichlet[a] && tags.node_is_dirichlet[b]);
            }
        }
    }

    #[test]
    fn mixed_bc_leaves_neumann_face_interior_free() {
        let geom = BeamGeometry::new(1, 4, HoleSpec::None).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        let tags = tag_boundary(&mesh, &BcSpec::mixed_lateral());
        let [nx, ny, nz] = geom.grid_cells();
        for (e, &(a, b)) in mesh.edges.iter().enumerate() {
            let ca = mesh.node_coords[a];
            let cb = mesh.node_coords[b];
            let on_y_face = (ca[1] == 0 && cb[1] == 0) || (ca[1] == ny && cb[1] == ny);
            let on_dirichlet_plane = (ca[0] == 0 && cb[0] == 0)
                || (ca[0] == nx && cb[0] == nx)
                || (ca[2] == 0 && cb[2] == 0)
                || (ca[2] == nz && cb[2] == nz);
            if on_y_face && !on_dirichlet_plane {
                assert!(!tags.edge_is_dirichlet[e], "interior of a Neumann face must stay free");
            }
            if on_y_face && on_dirichlet_plane {
                assert!(tags.edge_is_dirichlet[e], "face-intersection edges are Dirichlet");
            }
        }
    }

    #[test]
    fn hole_faces_are_never_dirichlet() {
        let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 }).unwrap();
        let mesh = build_beam_mesh(&geom).unwrap();
        let tags = tag_boundary(&mesh, &BcSpec::mixed_lateral());
        for (f, face) in mesh.boundary_faces.iter().enumerate() {
            if face.kind == FaceKind::Hole {
                assert_eq!(tags.face_tags[f], FaceBc::Neumann);
            }
        }
        // hole-boundary edges stay free except where a longitudinal hole rim
        // meets the Dirichlet x-end planes
        let nx = geom.grid_cells()[0];
        for face in &mesh.boundary_faces {
            if face.kind == FaceKind::Hole {
                for &e in &face.edges {
                    let (a, b) = mesh.edges[e];
                    let on_x_end = [a, b].iter().all(|&n| mesh.node_coords[n][0] == 0)
                        || [a, b].iter().all(|&n| mesh.node_coords[n][0] == nx);
                    if !on_x_end {
                        assert!(!tags.edge_is_dirichlet[e]);
                    }
                }
            }
        }
    }
}
