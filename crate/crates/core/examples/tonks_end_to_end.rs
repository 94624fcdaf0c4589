//! Full pipeline on hard rods in `[-2, 2)` against the exact Tonks gas.

use gibbs_interp::cluster::Mode;
use gibbs_interp::oracle::tonks_gas_logz;
use gibbs_interp::pipeline::{approximate_logz, ZeroFreeInput};
use gibbs_interp::potential::Potential;

fn main() -> gibbs_interp::error::Result<()> {
    let rods = Potential::hard_sphere(1, 0.5)?;
    for lambda in [0.1, 0.2] {
        let zf = ZeroFreeInput::new(lambda, 0.7, 1.4)?;
        let r = approximate_logz(&rods, 2, &zf, 0.05, Mode::Adaptive)?;
        let exact = tonks_gas_logz(4.0, 0.5, lambda)? / 4.0;
        println!(
            "λ = {lambda}: k = {}, log Z/L = {:.6}, exact {:.6}, reported ε/L = {:.2e}",
            r.stages.budget.term_count,
            r.log_z_per_volume,
            exact,
            r.epsilon / r.volume()
        );
    }
    Ok(())
}
