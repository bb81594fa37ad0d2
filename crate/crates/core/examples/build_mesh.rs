//! Builds beam meshes with and without holes and prints their anatomy.
//!
//! Usage: `cargo run --release --example build_mesh [-- --dump]`

use hcurl_schwarz::mesh::{
    build_beam_mesh, grid_edge_count, tag_boundary, BcSpec, BeamGeometry, FaceKind, HoleSpec,
};

fn main() -> hcurl_schwarz::Result<()> {
    let dump = std::env::args().any(|a| a == "--dump");

    let plain = BeamGeometry::with_spacing(2, 1.0 / 8.0, HoleSpec::None)?;
    let mesh = build_beam_mesh(&plain)?;
    let [nx, ny, nz] = plain.grid_cells();
    println!("plain beam {}x{}x{} cells (h = {})", nx, ny, nz, plain.spacing());
    println!("  hexes {}  nodes {}  edges {}", mesh.n_hexes(), mesh.n_nodes(), mesh.n_edges());
    println!("  closed-form edge count {}", grid_edge_count(nx, ny, nz));

    let holed = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 })?;
    let mesh = build_beam_mesh(&holed)?;
    let boxes = holed.hole_boxes()?;
    println!("\nbeam with the standard hole family ({} boxes)", boxes.len());
    println!("  hexes {}  nodes {}  edges {}", mesh.n_hexes(), mesh.n_nodes(), mesh.n_edges());
    let holes = mesh.boundary_faces.iter().filter(|f| f.kind == FaceKind::Hole).count();
    println!("  boundary faces {} of which hole-created {}", mesh.boundary_faces.len(), holes);

    for (name, bc) in [
        ("all-dirichlet", BcSpec::all_dirichlet()),
        ("mixed-lateral", BcSpec::mixed_lateral()),
    ] {
        let tags = tag_boundary(&mesh, &bc);
        let dirichlet = tags.edge_is_dirichlet.iter().filter(|d| **d).count();
        println!(
            "  {}: {} Dirichlet edges, {} free dofs",
            name,
            dirichlet,
            mesh.n_edges() - dirichlet
        );
    }

    if dump {
        let small = BeamGeometry::new(1, 2, HoleSpec::None)?;
        let mesh = build_beam_mesh(&small)?;
        println!("\ntext dump of the 2x2x2 unit beam:");
        let mut out = Vec::new();
        mesh.write_text(&mut out)?;
        print!("{}", String::from_utf8_lossy(&out));
    }
    Ok(())
}
