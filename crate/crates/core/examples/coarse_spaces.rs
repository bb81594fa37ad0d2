//! Builds the NK, SNK and GenEO coarse bases on the holed beam and shows how
//! the spectral enrichment reacts to the geometry.

use hcurl_schwarz::bench::{build_problem, decompose_problem, PartitionName};
use hcurl_schwarz::coarse::{
    assemble_coarse, build_geneo_columns, build_nk_columns, build_snk_columns, geneo_all,
    CoarseKind, ColOrigin, GEVP_DELTA, PRUNE_TOL,
};
use hcurl_schwarz::mesh::{BcSpec, BeamGeometry, HoleSpec};
use hcurl_schwarz::CoefficientPattern;

fn main() -> hcurl_schwarz::Result<()> {
    let tau = 10.0;
    let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 })?;
    let problem = build_problem(&geom, &BcSpec::mixed_lateral(), CoefficientPattern::Uniform, 1e-3)?;
    let sub = decompose_problem(&problem, PartitionName::Strips, 4, 1)?;
    let n = problem.system.n_dofs();

    let nk = build_nk_columns(&problem.system.gradient);
    let snk = build_snk_columns(&sub.locals, n);
    println!("free dofs {n}");
    println!("NK columns  {}", nk.ncols());
    println!("SNK columns {} (split strictly enlarges the basis)", snk.ncols());

    let spectra = geneo_all(&sub.locals, tau, GEVP_DELTA)?;
    for s in &spectra {
        let head: Vec<String> = s.eigenvalues.iter().take(4).map(|l| format!("{l:.2e}")).collect();
        println!(
            "subdomain {}: {} eigenvalues above tau = {tau}, spectrum head [{}]",
            s.subdomain,
            s.n_retained(),
            head.join(", ")
        );
    }
    let geneo = build_geneo_columns(&sub.locals, &spectra, n);

    let coarse = assemble_coarse(
        CoarseKind::SnkGeneo,
        vec![(ColOrigin::Snk, snk), (ColOrigin::Geneo, geneo)],
        &problem.system.a,
        PRUNE_TOL,
    )?;
    println!(
        "assembled coarse space: dim {} ({} snk + {} geneo kept, {} dropped)",
        coarse.dim(),
        coarse.sizes.snk,
        coarse.sizes.geneo,
        coarse.dropped
    );
    println!("E pivot ratio {:.3e}", coarse.pivot_ratio);
    Ok(())
}
