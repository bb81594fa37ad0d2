//! Measures the dense spectrum of the enriched two-level operator and checks
//! it against the theoretical window `[1 / (1 + k1 tau), k0]`.

use hcurl_schwarz::bench::{
    build_preconditioner, build_problem, decompose_problem, CoarseSection, CoarseSet,
    PartitionName,
};
use hcurl_schwarz::mesh::{BcSpec, BeamGeometry, HoleSpec};
use hcurl_schwarz::solver::preconditioned_spectrum_dense;
use hcurl_schwarz::{CoefficientPattern, Method};
use std::sync::Arc;

fn main() -> hcurl_schwarz::Result<()> {
    let tau = 10.0;
    let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 })?;
    let problem = build_problem(&geom, &BcSpec::mixed_lateral(), CoefficientPattern::Uniform, 1e-3)?;
    let sub = decompose_problem(&problem, PartitionName::Strips, 4, 1)?;
    let coarse_cfg = CoarseSection { tau, ..CoarseSection::default() };
    let methods = [Method::AsSnkGeneo];
    let coarse = CoarseSet::build(&problem, &sub, &methods, &coarse_cfg)?;
    let a = Arc::new(problem.system.a.clone());
    let m = build_preconditioner(Method::AsSnkGeneo, a, &sub, &coarse)?;

    println!(
        "dense spectrum of the AS-SNK-GenEO preconditioned operator ({} dofs)",
        problem.system.n_dofs()
    );
    let spectrum = preconditioned_spectrum_dense(&problem.system.a, &m)?;
    let lambda_min = spectrum[0];
    let lambda_max = spectrum[spectrum.len() - 1];
    let lower = 1.0 / (1.0 + sub.k1 as f64 * tau);
    let upper = sub.k0 as f64;
    println!("k0 = {}  k1 = {}  tau = {tau}", sub.k0, sub.k1);
    println!("theory window  [{lower:.6}, {upper:.1}]   kappa bound {:.1}", (1.0 + sub.k1 as f64 * tau) * upper);
    println!("measured       [{lambda_min:.6}, {lambda_max:.6}]   kappa {:.3}", lambda_max / lambda_min);
    let ok = lambda_max <= upper + 1e-6 && lambda_min >= lower - 1e-6;
    println!("bound satisfied: {}", if ok { "yes" } else { "NO" });
    Ok(())
}
