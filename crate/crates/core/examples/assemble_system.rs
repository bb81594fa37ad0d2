//! Assembles K, M, A and the discrete gradient, checks the exact-kernel
//! identity K C = 0 and optionally exports A in Matrix Market format.
//!
//! Usage: `cargo run --release --example assemble_system [-- /path/to/A.mtx]`

use hcurl_schwarz::assembly::{gradient_kernel_defect, System};
use hcurl_schwarz::mesh::{build_beam_mesh, tag_boundary, BcSpec, BeamGeometry, HoleSpec};
use hcurl_schwarz::CoefficientField;

fn main() -> hcurl_schwarz::Result<()> {
    let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 })?;
    let mesh = build_beam_mesh(&geom)?;
    let tags = tag_boundary(&mesh, &BcSpec::mixed_lateral());
    let coeff = CoefficientField::uniform(&mesh, 1.0, 1.0, 1e-3)?;
    let system = System::build(&mesh, &coeff, &tags)?;

    println!("free dofs          {}", system.n_dofs());
    println!("nnz(K)             {}", system.k.nnz());
    println!("nnz(M)             {}", system.m.nnz());
    println!("nnz(A)             {}", system.a.nnz());
    println!("gradient columns   {}", system.gradient.matrix.ncols());
    println!("A symmetry defect  {:.3e}", system.a.symmetry_defect());
    println!(
        "max|K C| / max|K|  {:.3e}",
        gradient_kernel_defect(&system.k, &system.gradient.matrix)
    );
    println!(
        "rhs: {} entries, |rhs| = {:.6e}",
        system.rhs.len(),
        hcurl_schwarz::linalg::norm2(&system.rhs)
    );

    if let Some(path) = std::env::args().nth(1) {
        let mut file = std::fs::File::create(&path)?;
        system.a.write_matrix_market(&mut file)?;
        println!("wrote {path}");
    }
    Ok(())
}
