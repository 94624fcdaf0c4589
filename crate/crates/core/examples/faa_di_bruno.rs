//! Taylor coefficients of `f ∘ Φ` through the Bell transform.

use gibbs_interp::interpolation::{bell_transform_coefficients, compose_and_evaluate};
use num_complex::Complex64;

fn main() -> gibbs_interp::error::Result<()> {
    // Φ(z) = z + z²/2, f(w) = w - w²/2 + w³/3
    let phi = [0.0, 1.0, 0.5].map(|x| Complex64::new(x, 0.0));
    let t = bell_transform_coefficients(&phi, 6)?;
    for i in 1..=3 {
        let row: Vec<String> = (0..=6).map(|j| format!("{:6.3}", t.get(i, j).re)).collect();
        println!("β[{i}] = {}", row.join(" "));
    }
    let f = [(1.0, 0.0), (-0.5, 0.0), (1.0 / 3.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)];
    let z = Complex64::new(0.2, 0.0);
    let out = compose_and_evaluate(&f, &t, z);
    let w = z + z * z / 2.0;
    let direct = w - w * w / 2.0 + w * w * w / 3.0;
    println!("f(Φ(0.2)) ≈ {:.12} (direct {:.12})", out.value.re, direct.re);
    Ok(())
}
