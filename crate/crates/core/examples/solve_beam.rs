//! Solves the holed-beam problem with every preconditioner variant and
//! compares iteration counts.

use hcurl_schwarz::bench::{
    build_preconditioner, build_problem, decompose_problem, CoarseSection, CoarseSet,
    PartitionName,
};
use hcurl_schwarz::mesh::{BcSpec, BeamGeometry, HoleSpec};
use hcurl_schwarz::solver::gmres_solve;
use hcurl_schwarz::{CoefficientPattern, GmresOptions, Method};
use std::sync::Arc;

fn main() -> hcurl_schwarz::Result<()> {
    let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 })?;
    let problem = build_problem(&geom, &BcSpec::mixed_lateral(), CoefficientPattern::Uniform, 1e-3)?;
    let sub = decompose_problem(&problem, PartitionName::Strips, 4, 1)?;
    let methods = [
        Method::As,
        Method::AsNk,
        Method::AsSnk,
        Method::AsNkGeneo,
        Method::AsSnkGeneo,
    ];
    let coarse = CoarseSet::build(&problem, &sub, &methods, &CoarseSection::default())?;
    let a = Arc::new(problem.system.a.clone());

    println!(
        "beam {}x1x1, h = {}, N = 4, {} dofs, GenEO retained {}",
        geom.length_units,
        geom.spacing(),
        problem.system.n_dofs(),
        coarse.geneo_retained
    );
    println!("{:<14} {:>6} {:>10} {:>11}", "method", "iters", "coarse dim", "solve [s]");
    for method in methods {
        let m = build_preconditioner(method, a.clone(), &sub, &coarse)?;
        let (_, report) =
            gmres_solve(&problem.system.a, &problem.system.rhs, &m, &GmresOptions::default());
        println!(
            "{:<14} {:>6} {:>10} {:>11.3}",
            method.to_string(),
            format!("{}{}", report.iterations, if report.converged { "" } else { "*" }),
            m.coarse_dim(),
            report.solve_seconds
        );
    }
    Ok(())
}
