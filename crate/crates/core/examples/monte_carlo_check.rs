//! Seeded Monte Carlo estimate of `C_2/|Λ|` for hard disks next to the mesh value.

use gibbs_interp::cluster::{BoxDomain, ClusterEngine, Mode};
use gibbs_interp::oracle::monte_carlo_ck;
use gibbs_interp::potential::Potential;

fn main() -> gibbs_interp::error::Result<()> {
    let disks = Potential::hard_sphere(2, 1.0)?;
    let domain = BoxDomain::for_potential(2, &disks)?;
    let (mean, se) = monte_carlo_ck(&disks, &domain, 2, 200_000, 1)?;
    let c = ClusterEngine::default().coefficient(&disks, &domain, 2, 0.05, Mode::Certified)?;
    println!("Monte Carlo C_2/|Λ| = {mean:.5} ± {se:.5}");
    println!("mesh        C_2/|Λ| = {:.5} ± {:.5} (δ = {})", c.value, c.error_bound, c.delta_used);
    Ok(())
}
