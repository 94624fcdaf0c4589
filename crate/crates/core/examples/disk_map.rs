//! Build and certify the polynomial disk-to-strip map for a few widths.

use gibbs_interp::interpolation::{default_map, map_for};

fn main() -> gibbs_interp::error::Result<()> {
    let phi = default_map()?;
    println!(
        "preset γ = {}: N = {}, ρ = {}, β = {}, |z₁| = {:.6}, distance {:.5} (+ slack {:.2e})",
        phi.gamma,
        phi.degree,
        phi.rho,
        phi.beta_anchor,
        phi.z1.norm(),
        phi.certification.sampled_distance,
        phi.certification.slack
    );
    for gamma in [0.5, 2.0, 7.0] {
        let m = map_for(gamma)?;
        println!("γ = {gamma}: N = {}, β = {}, |z₁| = {:.4}", m.degree, m.beta_anchor, m.z1.norm());
    }
    Ok(())
}
