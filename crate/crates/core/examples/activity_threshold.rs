//! Certified activity thresholds for hard spheres.

use gibbs_interp::oracle::certified_lambda_threshold;
use gibbs_interp::potential::Potential;

fn main() -> gibbs_interp::error::Result<()> {
    let rods = Potential::hard_sphere(1, 1.0)?;
    let t = certified_lambda_threshold(&rods, 1, 1.0 / 32.0)?;
    println!("d = 1, r = 1: λ* = {:.6} (e/2 = {:.6})", t.lambda, std::f64::consts::E / 2.0);
    let disks = Potential::hard_sphere(2, 1.0)?;
    let t = certified_lambda_threshold(&disks, 1, 1.0 / 64.0)?;
    let b = t.bounds[0];
    println!(
        "d = 2, r = 1: λ* = {:.6} from V_1 = {:.5} ± {:.1e} (e/π = {:.6})",
        t.lambda,
        b.estimate,
        b.error_bound,
        std::f64::consts::E / std::f64::consts::PI
    );
    Ok(())
}
