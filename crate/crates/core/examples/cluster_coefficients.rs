//! Certified cluster coefficients of hard rods against the Tonks closed form.
//!
//! `cargo run --release --example cluster_coefficients`

use gibbs_interp::cluster::{BoxDomain, ClusterEngine, Mode};
use gibbs_interp::oracle::tonks_cluster_coefficients;
use gibbs_interp::potential::Potential;

fn main() -> gibbs_interp::error::Result<()> {
    let rods = Potential::hard_sphere(1, 0.5)?;
    let domain = BoxDomain::for_potential(1, &rods)?;
    let exact = tonks_cluster_coefficients(domain.volume(), 0.5, 3);
    let engine = ClusterEngine::default();
    for (k, eps) in [(1, 1e-12), (2, 1e-2), (3, 0.25)] {
        let c = engine.coefficient(&rods, &domain, k, eps, Mode::Certified)?;
        println!(
            "C_{k}/|Λ| = {:+.6} ± {:.2e}  (δ = 2^{}, exact {:+.6})",
            c.value,
            c.error_bound,
            c.delta_used.log2(),
            exact[k - 1]
        );
    }
    Ok(())
}
