//! Faà di Bruno coefficients of a composition `g = f ∘ Φ`.
//!
//! With `a_m = Φ^{(m)}(0)/m!` and `x_m = m!·a_m`,
//!
//! `β[i][j] = (i!/j!)·B_{j,i}(x_1, …) = Σ i!/∏ j_m! · ∏ a_m^{j_m}`
//!
//! over `(j_1, j_2, …)` with `Σ j_m = i` and `Σ m·j_m = j`, so that
//! `g^{(j)}(0)/j! = Σ_i f^{(i)}(0)/i! · β[i][j]`. Multinomials are exact
//! big integers, rounded once to `f64`.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use super::disk_map::DiskMap;
use crate::error::{Error, Result};

pub const J_MAX_LIMIT: usize = 200;
/// Refuse a transform that would visit more index sequences than this.
pub const SEQUENCE_CEILING: u64 = 100_000_000;

/// Lower-triangular `β[i][j]`, `1 ≤ i ≤ j ≤ j_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTransform {
    j_max: usize,
    rows: Vec<Vec<Complex64>>,
}

impl CoefficientTransform {
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// `β[i][j]`, zero above the diagonal and outside the computed range.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i == 0 || i > j || j > self.j_max {
            return Complex64::new(0.0, 0.0);
        }
        self.rows[i - 1][j - i]
    }

    pub fn identity(j_max: usize) -> Self {
        let rows = (1..=j_max)
            .map(|i| (i..=j_max).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        CoefficientTransform { j_max, rows }
    }
}

/// `β` for the polynomial with Taylor coefficients `a` (`a[0]` is ignored).
pub fn bell_transform_coefficients(a: &[Complex64], j_max: usize) -> Result<CoefficientTransform> {
    if j_max > J_MAX_LIMIT {
        return Err(Error::input(format!("j_max must be at most {J_MAX_LIMIT}, got {j_max}")));
    }
    let support: Vec<usize> = (1..a.len()).filter(|&m| a[m] != Complex64::new(0.0, 0.0)).collect();
    let work = sequence_count(&support, j_max);
    if work > SEQUENCE_CEILING as f64 {
        return Err(Error::refusal(format!(
            "Bell transform up to j = {j_max} needs about {work:.3e} index sequences, above {SEQUENCE_CEILING}"
        )));
    }
    let mut fact = vec![BigUint::one()];
    for n in 1..=j_max {
        let next = &fact[n - 1] * BigUint::from(n);
        fact.push(next);
    }
    let rows: Vec<Result<Vec<Complex64>>> = (1..=j_max)
        .into_par_iter()
        .map(|i| {
            (i..=j_max)
                .map(|j| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut mult = Vec::with_capacity(support.len());
                    visit(&support, 0, i, j, &mut mult, &mut |m| {
                        let mut denom = BigUint::one();
                        let mut term = Complex64::new(1.0, 0.0);
                        for &(part, count) in m.iter() {
                            denom *= &fact[count];
                            term *= a[part].powi(count as i32);
                        }
                        let w = &fact[i] / denom;
                        acc += term * to_f64(&w)?;
                        Ok(())
                    })?;
                    Ok(acc)
                })
                .collect()
        })
        .collect();
    Ok(CoefficientTransform { j_max, rows: rows.into_iter().collect::<Result<_>>()? })
}

/// `β` for the Taylor coefficients of a disk map.
pub fn bell_transform(phi: &DiskMap, j_max: usize) -> Result<CoefficientTransform> {
    bell_transform_coefficients(&phi.coefficients, j_max)
}

fn to_f64(x: &BigUint) -> Result<f64> {
    let bits = x.bits();
    match x.to_f64() {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(Error::refusal(format!(
            "multinomial with {bits} bits overflows double precision; {bits}-bit exponent range required"
        ))),
    }
}

/// Enumerate multiplicities `(part, count)` with `Σ count = parts` and
/// `Σ part·count = total`, parts drawn from `support[idx..]`.
fn visit(
    support: &[usize],
    idx: usize,
    parts: usize,
    total: usize,
    mult: &mut Vec<(usize, usize)>,
    f: &mut dyn FnMut(&[(usize, usize)]) -> Result<()>,
) -> Result<()> {
    if parts == 0 {
        return if total == 0 { f(mult) } else { Ok(()) };
    }
    if idx == support.len() {
        return Ok(());
    }
    let m = support[idx];
    // Remaining parts are at least support[idx] each.
    if m * parts > total {
        return Ok(());
    }
    let largest = *support.last().unwrap();
    if largest * parts < total {
        return Ok(());
    }
    for count in (0..=parts.min(total / m)).rev() {
        if count > 0 {
            mult.push((m, count));
        }
        visit(support, idx + 1, parts - count, total - m * count, mult, f)?;
        if count > 0 {
            mult.pop();
        }
    }
    Ok(())
}

/// Number of `(i, j)` index sequences, `1 ≤ i ≤ j ≤ j_max`, counted by a
/// partition recurrence.
fn sequence_count(support: &[usize], j_max: usize) -> f64 {
    // ways[i][j]: sequences with i parts summing to j.
    let mut ways = vec![vec![0.0f64; j_max + 1]; j_max + 1];
    ways[0][0] = 1.0;
    for &m in support {
        for i in 1..=j_max {
            for j in m..=j_max {
                ways[i][j] += ways[i - 1][j - m];
            }
        }
    }
    (1..=j_max).flat_map(|i| (i..=j_max).map(move |j| (i, j))).map(|(i, j)| ways[i][j]).sum()
}

/// Coefficients of `Φ(z)^i` up to `z^{j_max}` by repeated convolution, an
/// independent route to `β[i][·]`.
pub fn power_coefficients(a: &[Complex64], i: usize, j_max: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); j_max + 1];
    out[0] = Complex64::new(1.0, 0.0);
    for _ in 0..i {
        let mut next = vec![Complex64::new(0.0, 0.0); j_max + 1];
        for (p, &x) in out.iter().enumerate() {
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (m, &y) in a.iter().enumerate().skip(1) {
                if p + m > j_max {
                    break;
                }
                next[p + m] += x * y;
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn identity_map() {
        let t = bell_transform_coefficients(&[c(0.0), c(1.0)], 12).unwrap();
        assert_eq!(t, CoefficientTransform::identity(12));
    }

    #[test]
    fn b32_is_three_x1_x2() {
        let a = [c(0.0), c(0.7), c(-0.3), c(0.2)];
        let t = bell_transform_coefficients(&a, 6).unwrap();
        let (x1, x2) = (0.7, 2.0 * -0.3);
        let expected = 2.0 / 6.0 * 3.0 * x1 * x2;
        assert!((t.get(2, 3) - c(expected)).norm() < 1e-15);
        assert_eq!(t.get(1, 1), a[1]);
    }

    #[test]
    fn single_part_rows() {
        let a: Vec<Complex64> = (0..9).map(|m| c(1.0 / (m as f64 + 2.0))).collect();
        let t = bell_transform_coefficients(&a, 20).unwrap();
        for j in 1..=20 {
            // B_{j,1} = x_j, so β[1][j] = a_j.
            let want = if j < a.len() { a[j] } else { c(0.0) };
            assert_eq!(t.get(1, j), want);
        }
        // B_{j,i} = 0 when j > deg·i.
        assert_eq!(t.get(2, 17), c(0.0));
    }

    #[test]
    fn refuses_large_requests() {
        assert!(matches!(bell_transform_coefficients(&[c(0.0), c(1.0)], 201), Err(Error::Input(_))));
        let dense: Vec<Complex64> = (0..60).map(|_| c(0.5)).collect();
        assert!(matches!(bell_transform_coefficients(&dense, 200), Err(Error::Refusal(_))));
    }

    #[test]
    fn large_multinomials_are_exact() {
        // Φ = z + z² gives β[i][j] = C(i, j - i).
        let t = bell_transform_coefficients(&[c(0.0), c(1.0), c(1.0)], 200).unwrap();
        let c100_50 = 100891344545564193334812497256.0;
        assert!((t.get(100, 150).re - c100_50).abs() <= 1e-15 * c100_50);
        assert_eq!(t.get(100, 200), c(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_convolution(a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..6)) {
            let mut coeffs: Vec<Complex64> = a.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
            coeffs[0] = c(0.0);
            let j_max = 12;
            let t = bell_transform_coefficients(&coeffs, j_max).unwrap();
            let mass: f64 = coeffs.iter().map(|z| z.norm()).sum();
            for i in 1..=j_max {
                let p = power_coefficients(&coeffs, i, j_max);
                for j in i..=j_max {
                    let scale = mass.powi(i as i32).max(1.0);
                    prop_assert!((t.get(i, j) - p[j]).norm() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn bell_bound(a in proptest::collection::vec(-2.0f64..2.0, 2..6)) {
            let mut coeffs: Vec<Complex64> = a.iter().map(|&x| c(x)).collect();
            coeffs[0] = c(0.0);
            let t = bell_transform_coefficients(&coeffs, 15).unwrap();
            let mut fact = 1.0;
            let mut mass = 0.0;
            for (m, z) in coeffs.iter().enumerate().skip(1) {
                fact *= m as f64;
                mass += fact * z.norm();
            }
            for i in 1..=15 {
                for j in i..=15 {
                    prop_assert!(t.get(i, j).norm() <= mass.powi(i as i32) * (1.0 + 1e-12));
                }
            }
        }
    }
}
