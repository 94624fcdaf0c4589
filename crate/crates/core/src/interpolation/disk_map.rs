//! Polynomial maps from the closed unit disk into `𝒩_γ = {z : d(z, [0,1]) < γ}`.
//!
//! `Φ(z) = T_N(ρz)/T_N(ρβ)` with `T_N(w) = Σ_{m=1}^N w^m/m`, so `Φ(0) = 0`
//! and `Φ(β) = 1`. Certification samples `Φ` at the `M`-th roots of unity by
//! one FFT and adds `(π/M)·Σ m|a_m|`, which bounds `(π/M)·max|Φ′|` on the
//! circle. Since `𝒩_γ` is convex and `Φ` is analytic, containment of the
//! boundary image gives containment of the whole disk image.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat;

/// Boundary samples used for certification.
pub const CERTIFY_SAMPLES: usize = 1 << 16;
/// Boundary samples for the cheap first pass of a sweep.
pub const SCREEN_SAMPLES: usize = 1 << 10;
/// Tolerance on `|Φ(z₁) - 1|`.
pub const ANCHOR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub samples: usize,
    /// `max_k d(Φ(e^{2πik/M}), [0,1])`.
    #[serde(with = "hexfloat::serde_f64")]
    pub sampled_distance: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub slack: f64,
    /// Angle of the worst sample, in radians.
    #[serde(with = "hexfloat::serde_f64")]
    pub worst_angle: f64,
}

impl Certification {
    /// Upper bound on `max_{|z|=1} d(Φ(z), [0,1])`.
    pub fn distance(&self) -> f64 {
        self.sampled_distance + self.slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiskMap {
    #[serde(with = "hexfloat::serde_f64")]
    pub gamma: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub rho: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub beta_anchor: f64,
    pub degree: usize,
    /// `a_0 … a_N`, with `a_0 = 0`.
    #[serde(serialize_with = "serialize_complex")]
    pub coefficients: Vec<Complex64>,
    #[serde(serialize_with = "serialize_one_complex")]
    pub z1: Complex64,
    pub certification: Certification,
}

fn serialize_one_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [hexfloat::format(z.re), hexfloat::format(z.im)].serialize(s)
}

fn serialize_complex<S: serde::Serializer>(zs: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    zs.iter()
        .map(|z| [hexfloat::format(z.re), hexfloat::format(z.im)])
        .collect::<Vec<_>>()
        .serialize(s)
}

/// Distance from `w` to the segment `[0, 1]`.
pub fn distance_to_unit_segment(w: Complex64) -> f64 {
    if w.re < 0.0 {
        w.norm()
    } else if w.re > 1.0 {
        (w - 1.0).norm()
    } else {
        w.im.abs()
    }
}

/// Horner evaluation of `Σ a_m z^m`.
pub fn evaluate(coefficients: &[Complex64], z: Complex64) -> Complex64 {
    coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn truncated_log_coefficients(rho: f64, beta: f64, degree: usize) -> Vec<f64> {
    let mut raw = vec![0.0; degree + 1];
    let mut pw = 1.0;
    for (m, c) in raw.iter_mut().enumerate().skip(1) {
        pw *= rho;
        *c = pw / m as f64;
    }
    let norm = raw.iter().rev().fold(0.0, |acc, &a| acc * beta + a);
    raw.iter().map(|a| a / norm).collect()
}

/// Sample `Σ a_m z^m` at the `samples`-th roots of unity. Coefficients of
/// degree at least `samples` are folded, which is exact on the roots.
pub fn boundary_values(coefficients: &[Complex64], samples: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); samples];
    for (m, &a) in coefficients.iter().enumerate() {
        buf[m % samples] += a;
    }
    let fft = FftPlanner::new().plan_fft_inverse(samples);
    fft.process(&mut buf);
    buf
}

/// Boundary certificate for the polynomial with the given coefficients.
pub fn certify(coefficients: &[Complex64], samples: usize) -> Certification {
    let values = boundary_values(coefficients, samples);
    let (worst, sampled) = values
        .iter()
        .enumerate()
        .map(|(k, &w)| (k, distance_to_unit_segment(w)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let derivative_sum: f64 = coefficients.iter().enumerate().map(|(m, a)| m as f64 * a.norm()).sum();
    Certification {
        samples,
        sampled_distance: sampled,
        slack: std::f64::consts::PI / samples as f64 * derivative_sum,
        worst_angle: 2.0 * std::f64::consts::PI * worst as f64 / samples as f64,
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// Build and certify `Φ = T_N(ρz)/T_N(ρβ)` for `𝒩_γ`.
///
/// Any `γ > 0` is accepted; a map certified for `γ` is valid for every
/// larger width.
pub fn build_disk_map(gamma: f64, rho: f64, beta_anchor: f64, degree: usize) -> Result<DiskMap> {
    build_with_samples(gamma, rho, beta_anchor, degree, CERTIFY_SAMPLES)
}

pub fn build_with_samples(gamma: f64, rho: f64, beta_anchor: f64, degree: usize, samples: usize) -> Result<DiskMap> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::input(format!("γ must be positive, got {gamma}")));
    }
    check_unit("ρ", rho)?;
    check_unit("β_anchor", beta_anchor)?;
    if degree == 0 {
        return Err(Error::input("disk map degree must be at least 1"));
    }
    if samples < 8 {
        return Err(Error::input("need at least 8 boundary samples"));
    }
    let coefficients: Vec<Complex64> =
        truncated_log_coefficients(rho, beta_anchor, degree).into_iter().map(|a| Complex64::new(a, 0.0)).collect();
    let z1 = Complex64::new(beta_anchor, 0.0);
    let anchor = (evaluate(&coefficients, z1) - 1.0).norm();
    if anchor > ANCHOR_TOL {
        return Err(Error::refusal(format!("|Φ(z₁) - 1| = {anchor:e} exceeds {ANCHOR_TOL:e}")));
    }
    let certification = certify(&coefficients, samples);
    if !(certification.distance() < gamma) {
        let w = evaluate(&coefficients, Complex64::from_polar(1.0, certification.worst_angle));
        return Err(Error::refusal(format!(
            "disk map (ρ = {rho}, β = {beta_anchor}, N = {degree}) not certified for γ = {gamma}: worst boundary \
             point e^{{i·{:.6}}} ↦ {:.6}{:+.6}i at distance {:.6}, plus slack {:.3e}",
            certification.worst_angle,
            w.re,
            w.im,
            certification.sampled_distance,
            certification.slack
        )));
    }
    Ok(DiskMap { gamma, rho, beta_anchor, degree, coefficients, z1, certification })
}

impl DiskMap {
    /// `Φ(z) = z/β` on the disk, exact for any `γ > 1/β`.
    pub fn scaled_identity(gamma: f64, beta_anchor: f64) -> Result<Self> {
        build_disk_map(gamma, 0.5, beta_anchor, 1)
    }

    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        evaluate(&self.coefficients, z)
    }

    /// `Φ^{(m)}(0)/m!`, zero beyond the degree.
    pub fn taylor(&self, m: usize) -> Complex64 {
        self.coefficients.get(m).copied().unwrap_or_default()
    }

    /// `Σ_m |Φ^{(m)}(0)|`.
    pub fn derivative_mass(&self) -> f64 {
        let mut fact = 1.0;
        let mut total = 0.0;
        for (m, a) in self.coefficients.iter().enumerate().skip(1) {
            fact *= m as f64;
            total += fact * a.norm();
        }
        total
    }

    /// Re-run the certificate with a different number of samples.
    pub fn recertify(&self, samples: usize) -> Certification {
        certify(&self.coefficients, samples)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    #[serde(with = "hexfloat::serde_f64")]
    pub gamma: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub rho: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub beta_anchor: f64,
    pub degree: usize,
}

const PRESET_JSON: &str = include_str!("../../data/disk_map_presets.json");

/// The shipped table of certified parameters.
pub fn presets() -> Vec<Preset> {
    serde_json::from_str(PRESET_JSON).expect("shipped preset table parses")
}

/// The default map for `γ = 1/4`.
pub fn default_map() -> Result<DiskMap> {
    let p = presets().into_iter().find(|p| p.gamma == 0.25).expect("preset table has γ = 1/4");
    build_disk_map(p.gamma, p.rho, p.beta_anchor, p.degree)
}

/// Parameter grid searched by [`sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub degrees: Vec<usize>,
    pub rhos: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            degrees: (1..=16).collect(),
            rhos: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            betas: (1..100).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

/// The certified map with the smallest anchor on the grid (ties broken by
/// degree, then `ρ`): candidates are screened with [`SCREEN_SAMPLES`] and
/// the winner is certified with [`CERTIFY_SAMPLES`].
pub fn sweep(gamma: f64, grid: &SweepGrid) -> Result<DiskMap> {
    let mut betas = grid.betas.clone();
    betas.sort_by(f64::total_cmp);
    for &beta in &betas {
        let cands: Vec<(usize, f64)> =
            grid.degrees.iter().flat_map(|&n| grid.rhos.iter().map(move |&r| (n, r))).collect();
        let ok: Vec<Option<(usize, f64)>> = cands
            .par_iter()
            .map(|&(n, r)| build_with_samples(gamma, r, beta, n, SCREEN_SAMPLES).ok().map(|_| (n, r)))
            .collect();
        for (n, r) in ok.into_iter().flatten() {
            if let Ok(map) = build_disk_map(gamma, r, beta, n) {
                return Ok(map);
            }
        }
    }
    Err(Error::refusal(format!(
        "no certified disk map for γ = {gamma} on the sweep grid; a larger zero-free width δ_zf (γ = δ_zf/λ) \
         or a finer grid is needed"
    )))
}

/// A certified map for `γ`: the shipped preset with the smallest anchor whose
/// width is at most `γ`, or a fresh [`sweep`] if that finds a smaller anchor.
pub fn map_for(gamma: f64) -> Result<DiskMap> {
    let preset = presets()
        .into_iter()
        .filter(|p| p.gamma <= gamma)
        .min_by(|a, b| a.beta_anchor.total_cmp(&b.beta_anchor))
        .map(|p| build_disk_map(p.gamma, p.rho, p.beta_anchor, p.degree));
    let fresh = sweep(gamma, &SweepGrid::default());
    match (preset, fresh) {
        (Some(Ok(p)), Ok(f)) => Ok(if f.beta_anchor < p.beta_anchor { f } else { p }),
        (Some(Ok(p)), Err(_)) => Ok(p),
        (_, fresh) => fresh,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fft_matches_horner() {
        let coeffs: Vec<Complex64> = (0..40).map(|m| Complex64::new(1.0 / (m as f64 + 1.0), m as f64 * 0.01)).collect();
        for &samples in &[16usize, 64, 256] {
            let vals = boundary_values(&coeffs, samples);
            for (k, v) in vals.iter().enumerate() {
                let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / samples as f64);
                let h = evaluate(&coeffs, z);
                assert!((v - h).norm() < 1e-12, "samples={samples} k={k}");
            }
        }
    }

    #[test]
    fn segment_distance() {
        assert_eq!(distance_to_unit_segment(Complex64::new(0.5, -0.25)), 0.25);
        assert_eq!(distance_to_unit_segment(Complex64::new(-3.0, 4.0)), 5.0);
        assert_eq!(distance_to_unit_segment(Complex64::new(4.0, 4.0)), 5.0);
    }

    #[test]
    fn anchor_and_origin() {
        let m = build_disk_map(3.0, 0.7, 0.4, 6).unwrap();
        assert_eq!(m.coefficients[0], Complex64::new(0.0, 0.0));
        assert_eq!(m.evaluate(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        assert!((m.evaluate(m.z1) - 1.0).norm() <= ANCHOR_TOL);
        assert!(m.certification.distance() < 3.0);
    }

    #[test]
    fn scaled_identity_is_a_disk() {
        let m = DiskMap::scaled_identity(5.0, 0.25).unwrap();
        assert_relative_eq!(m.certification.sampled_distance, 4.0, max_relative = 1e-12);
        assert!(DiskMap::scaled_identity(3.9, 0.25).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_disk_map(0.25, 1.0, 0.5, 4), Err(Error::Input(_))));
        assert!(matches!(build_disk_map(0.25, 0.5, 0.0, 4), Err(Error::Input(_))));
        assert!(matches!(build_disk_map(-1.0, 0.5, 0.5, 4), Err(Error::Input(_))));
        assert!(matches!(build_disk_map(0.25, 0.5, 0.5, 0), Err(Error::Input(_))));
        let e = build_disk_map(0.25, 0.5, 0.5, 4).unwrap_err().to_string();
        assert!(e.contains("worst boundary point"), "{e}");
    }

    #[test]
    fn denser_sampling_stays_within_slack() {
        for (r, b, n) in [(0.7, 0.4, 6), (0.9, 0.3, 12), (0.5, 0.2, 1)] {
            let m = build_disk_map(10.0, r, b, n).unwrap();
            let c = m.recertify(1 << 10);
            let fine = m.recertify(1 << 12);
            assert!(fine.sampled_distance <= c.sampled_distance + c.slack);
            assert!(fine.slack < c.slack);
        }
    }

    #[test]
    fn sweep_prefers_small_anchor() {
        let m = sweep(7.0, &SweepGrid::default()).unwrap();
        assert!(m.beta_anchor <= 0.15);
        assert!(m.certification.distance() < 7.0);
        assert!(sweep(0.01, &SweepGrid { degrees: vec![1, 2], rhos: vec![0.5], betas: vec![0.5] }).is_err());
    }
}
