//! Partitions the beam into overlapping subdomains and reports the
//! decomposition constants and the partition-of-unity identity.

use hcurl_schwarz::assembly::DofMap;
use hcurl_schwarz::bench::{build_problem, decompose_problem, PartitionName};
use hcurl_schwarz::linalg;
use hcurl_schwarz::mesh::{BcSpec, BeamGeometry, HoleSpec};
use hcurl_schwarz::CoefficientPattern;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() -> hcurl_schwarz::Result<()> {
    let geom = BeamGeometry::new(2, 8, HoleSpec::Beam { width_cells: 1 })?;
    let problem = build_problem(&geom, &BcSpec::mixed_lateral(), CoefficientPattern::Uniform, 1e-3)?;
    let edge_map = DofMap::edges(&problem.tags);

    for (name, partition) in [("strips", PartitionName::Strips), ("rcb", PartitionName::Rcb)] {
        let sub = decompose_problem(&problem, partition, 4, 1)?;
        println!("{name} partition, N = 4:");
        for i in 0..4 {
            println!(
                "  subdomain {i}: {:>4} owned hexes, {:>4} with overlap, {:>5} dofs",
                sub.decomp.owned_hexes[i].len(),
                sub.decomp.overlap_hexes[i].len(),
                sub.decomp.dofs[i].len()
            );
        }
        println!("  k0 = {}  k1 = {}", sub.k0, sub.k1);

        // partition of unity reconstructs any vector
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..edge_map.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let glued = sub.pou.glue(&sub.decomp, &v);
        let diff: Vec<f64> = v.iter().zip(&glued).map(|(a, b)| a - b).collect();
        println!("  partition-of-unity residual {:.3e}", linalg::norm2(&diff));
        let max_mult = sub.decomp.dof_multiplicity.iter().max().unwrap();
        println!("  max dof multiplicity {max_mult}\n");
    }
    Ok(())
}
