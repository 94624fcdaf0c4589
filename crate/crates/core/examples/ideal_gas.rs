//! With no interaction the pipeline returns `log Z/|Λ| = λ` exactly.

use gibbs_interp::cluster::Mode;
use gibbs_interp::pipeline::{approximate_logz, verify_run, ZeroFreeInput};
use gibbs_interp::potential::Potential;

fn main() -> gibbs_interp::error::Result<()> {
    let p = Potential::zero(2)?;
    let zf = ZeroFreeInput::new(0.5, 3.5, 1.0)?;
    let r = approximate_logz(&p, 3, &zf, 0.05, Mode::Certified)?;
    println!("log Z/|Λ| = {} ± {:.2e}", r.log_z_per_volume, r.epsilon / r.volume());
    for c in verify_run(&r, &p, 3, 0.5).comparisons {
        println!("  {:<20} reference {:<10.6} pass {}", c.oracle, c.reference, c.pass);
    }
    Ok(())
}
