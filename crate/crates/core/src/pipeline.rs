//! End-to-end approximation of `log Z_{Λ_n}(λ)/|Λ_n|`.
//!
//! With `f(z) = log Z(λz)/(C|Λ_n|)`, the zero-free input
//! asserts `|f| ≤ 1` on `𝒩_γ([0,1])`, `γ = δ_zf/λ`. The Taylor coefficients
//! `f_i = λ^i C_i(Λ_n)/(i!·C·|Λ_n|)` come from the cluster module and are
//! pushed through a certified disk map to evaluate `f(1)`.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cluster::{BoxDomain, ClusterCoefficient, ClusterEngine, Mode};
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::interpolation::{self, budget, disk_map, DiskMap, TaylorBudget};
use crate::oracle;
use crate::potential::{temperedness_constant, Potential, PotentialKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    UserAsserted,
    /// Heuristic defaults below a certified activity threshold; not a
    /// certified zero-free region.
    ThresholdDerived,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFreeInput {
    #[serde(with = "hexfloat::serde_f64")]
    pub lambda: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub delta_zf: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub c_bound: f64,
    pub provenance: Provenance,
}

impl ZeroFreeInput {
    pub fn new(lambda: f64, delta_zf: f64, c_bound: f64) -> Result<Self> {
        let zf = ZeroFreeInput { lambda, delta_zf, c_bound, provenance: Provenance::UserAsserted };
        zf.validate()?;
        Ok(zf)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("λ", self.lambda), ("δ_zf", self.delta_zf), ("C_bound", self.c_bound)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `λ = fraction · λ*` for the certified threshold `λ*`, with
    /// `δ_zf = 0.1·λ` and `C = max(1, λ(1 + C_φ))`.
    pub fn threshold_derived(p: &Potential, fraction: f64, k_used: usize, quad_width: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::input(format!("threshold fraction must lie in (0, 1), got {fraction}")));
        }
        let t = oracle::certified_lambda_threshold(p, k_used, quad_width)?;
        if !t.lambda.is_finite() {
            return Err(Error::input("the potential has no interaction; give λ directly"));
        }
        let lambda = fraction * t.lambda;
        let c_phi = temperedness_constant(p, quad_width)?;
        let c_phi = c_phi.estimate + c_phi.error_bound;
        Ok(ZeroFreeInput {
            lambda,
            delta_zf: 0.1 * lambda,
            c_bound: (lambda * (1.0 + c_phi)).max(1.0),
            provenance: Provenance::ThresholdDerived,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    #[serde(with = "hexfloat::serde_f64")]
    pub gamma: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub certified_for: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub rho: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub beta_anchor: f64,
    pub degree: usize,
    #[serde(with = "hexfloat::serde_f64")]
    pub certified_distance: f64,
}

impl MapSummary {
    fn of(map: &DiskMap, gamma: f64) -> Self {
        MapSummary {
            gamma,
            certified_for: map.gamma,
            rho: map.rho,
            beta_anchor: map.beta_anchor,
            degree: map.degree,
            certified_distance: map.certification.distance(),
        }
    }

    fn rebuild(&self) -> Result<DiskMap> {
        disk_map::build_disk_map(self.certified_for, self.rho, self.beta_anchor, self.degree)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub map: MapSummary,
    /// Target for `f(1)`, `ε/(C|Λ_n|)`.
    #[serde(with = "hexfloat::serde_f64")]
    pub f_target: f64,
    pub budget: TaylorBudget,
    pub coefficients: Vec<ClusterCoefficient>,
    /// Bound on `|f(1) - Σ g_j z₁^j|` from truncation.
    #[serde(with = "hexfloat::serde_f64")]
    pub truncation_error: f64,
    /// Bound from the reported coefficient errors.
    #[serde(with = "hexfloat::serde_f64")]
    pub coefficient_error: f64,
    /// `C·Re Σ_{j<m} g_j z₁^j` for `m = 1 … k`.
    #[serde(with = "hexfloat::serde_vec")]
    pub partial_sums: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub potential: String,
    pub dimension: usize,
    pub n: u32,
    pub zero_free: ZeroFreeInput,
    pub mode: Mode,
    /// True when every coefficient bound is certified.
    pub certified: bool,
    #[serde(with = "hexfloat::serde_f64")]
    pub requested_epsilon: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub log_z_per_volume: f64,
    /// Additive bound on `log Z` (not per volume).
    #[serde(with = "hexfloat::serde_f64")]
    pub epsilon: f64,
    pub stages: StageReport,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ApproxResult {
    pub fn volume(&self) -> f64 {
        (2.0 * self.n as f64).powi(self.dimension as i32)
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("ε must lie in (0, 1), got {eps}")))
    }
}

pub fn approximate_logz(p: &Potential, n: u32, zf: &ZeroFreeInput, eps: f64, mode: Mode) -> Result<ApproxResult> {
    approximate_logz_with(&ClusterEngine::default(), p, n, zf, eps, mode)
}

/// [`approximate_logz`] with a caller-owned engine (settings and cache).
pub fn approximate_logz_with(
    engine: &ClusterEngine,
    p: &Potential,
    n: u32,
    zf: &ZeroFreeInput,
    eps: f64,
    mode: Mode,
) -> Result<ApproxResult> {
    let start = Instant::now();
    check_epsilon(eps)?;
    zf.validate()?;
    let domain = BoxDomain::for_potential(n, p)?;
    let volume = domain.volume();
    let gamma = zf.delta_zf / zf.lambda;
    let map = disk_map::map_for(gamma).map_err(|e| match e {
        Error::Refusal(m) => Error::refusal(format!("disk map stage: {m}")),
        other => other,
    })?;
    let z1 = map.z1;
    let f_target = eps / (zf.c_bound * volume);
    let k = budget::taylor_terms_needed(z1.norm(), f_target / 2.0)?;
    let needed = k - 1;
    if needed > engine.settings.k_hard_limit {
        return Err(Error::refusal(format!(
            "truncation stage: |z₁| = {} and ε/(C|Λ|) = {f_target:e} need {k} Taylor terms, i.e. C_1 … C_{needed}, \
             above the coefficient hard limit {}; a larger δ_zf, larger ε or smaller box is needed",
            z1.norm(),
            engine.settings.k_hard_limit
        )));
    }
    let transform = interpolation::bell_transform(&map, needed.max(1))?;
    let plan = budget::allocate_budget(f_target, &transform, k, zf.lambda, zf.c_bound, z1.norm())?;
    let coefficients = engine.series(p, &domain, &plan.coefficient_targets, mode)?;
    let result = assemble(p, n, zf, eps, mode, MapSummary::of(&map, gamma), f_target, plan, coefficients, &transform)?;
    Ok(ApproxResult { wall_time: start.elapsed(), ..result })
}

/// `(f_i, err_i)` from the coefficients `C_i/|Λ_n|`.
fn f_coefficients(coefficients: &[ClusterCoefficient], lambda: f64, c_bound: f64) -> Vec<(f64, f64)> {
    let mut scale = 1.0 / c_bound;
    coefficients
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            scale *= lambda / (idx + 1) as f64;
            (scale * c.value, scale * c.error_bound)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    p: &Potential,
    n: u32,
    zf: &ZeroFreeInput,
    eps: f64,
    mode: Mode,
    map: MapSummary,
    f_target: f64,
    plan: TaylorBudget,
    coefficients: Vec<ClusterCoefficient>,
    transform: &interpolation::CoefficientTransform,
) -> Result<ApproxResult> {
    let d = p.dimension();
    let volume = (2.0 * n as f64).powi(d as i32);
    let f = f_coefficients(&coefficients, zf.lambda, zf.c_bound);
    let z1 = Complex64::new(map.beta_anchor, 0.0);
    let composed = interpolation::compose_and_evaluate(&f, transform, z1);
    let certified = coefficients.iter().all(|c| c.certified);
    Ok(ApproxResult {
        potential: p.hash().to_string(),
        dimension: d,
        n,
        zero_free: *zf,
        mode,
        certified,
        requested_epsilon: eps,
        log_z_per_volume: zf.c_bound * composed.value.re,
        epsilon: zf.c_bound * volume * composed.error(),
        stages: StageReport {
            map,
            f_target,
            budget: plan,
            coefficients,
            truncation_error: composed.truncation_bound,
            coefficient_error: composed.propagated_bound,
            partial_sums: composed.partial_sums.iter().map(|s| zf.c_bound * s.re).collect(),
        },
        wall_time: Duration::ZERO,
    })
}

/// Recompute the value from the coefficients stored in `result`.
pub fn recompose(result: &ApproxResult) -> Result<f64> {
    let map = result.stages.map.rebuild()?;
    let k = result.stages.budget.term_count;
    let transform = interpolation::bell_transform(&map, (k - 1).max(1))?;
    let f = f_coefficients(&result.stages.coefficients, result.zero_free.lambda, result.zero_free.c_bound);
    let composed = interpolation::compose_and_evaluate(&f, &transform, map.z1);
    Ok(result.zero_free.c_bound * composed.value.re)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub oracle: String,
    #[serde(with = "hexfloat::serde_f64")]
    pub reference: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub value: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub tolerance: f64,
    pub pass: bool,
}

impl Comparison {
    fn new(oracle: impl Into<String>, reference: f64, value: f64, tolerance: f64) -> Self {
        let pass = (value - reference).abs() <= tolerance;
        Comparison { oracle: oracle.into(), reference, value, tolerance, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub comparisons: Vec<Comparison>,
    /// Oracles that were not applicable or declined to run, with reasons.
    pub skipped: Vec<String>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mc_samples: u64,
    /// Ceiling passed to the direct quadrature.
    pub direct_ceiling: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, mc_samples: 200_000, direct_ceiling: 1e7 }
    }
}

pub fn verify_run(result: &ApproxResult, p: &Potential, n: u32, lambda: f64) -> VerificationReport {
    verify_run_with(result, p, n, lambda, &VerifyOptions::default())
}

/// Compare `result` with every applicable oracle. Failures and skipped
/// oracles are report entries, never errors.
pub fn verify_run_with(result: &ApproxResult, p: &Potential, n: u32, lambda: f64, opts: &VerifyOptions) -> VerificationReport {
    let mut comparisons = Vec::new();
    let mut skipped = Vec::new();
    let d = p.dimension();
    let domain = match BoxDomain::new(n, d) {
        Ok(b) => b,
        Err(e) => {
            return VerificationReport { comparisons, skipped: vec![format!("all: {e}")] };
        }
    };
    let volume = domain.volume();
    let value = result.log_z_per_volume;
    let tol = result.epsilon / volume;

    match recompose(result) {
        Ok(v) => comparisons.push(Comparison::new("recompose", v, value, 0.0)),
        Err(e) => skipped.push(format!("recompose: {e}")),
    }

    if p.is_zero() {
        comparisons.push(Comparison::new("ideal-gas", lambda, value, tol + 4.0 * f64::EPSILON * lambda));
    }
    if let (1, PotentialKind::HardSphere { radius }) = (d, &p.kind) {
        match oracle::tonks_gas_logz(volume, *radius, lambda) {
            Ok(z) => comparisons.push(Comparison::new("tonks", z / volume, value, tol)),
            Err(e) => skipped.push(format!("tonks: {e}")),
        }
    }

    // Direct quadrature, on the coarsest width the box admits.
    let width = if p.is_zero() { 2.0 * n as f64 } else { direct_width(p, &domain) };
    match oracle::partition_function_direct_with_ceiling(p, &domain, lambda, 6, width, opts.direct_ceiling) {
        Ok(z) => {
            let (lo, hi) = z.log_interval();
            let (lo, hi) = (lo / volume, hi / volume);
            let mid = 0.5 * (lo + hi);
            comparisons.push(Comparison::new("direct-quadrature", mid, value, tol + 0.5 * (hi - lo)));
        }
        Err(e) => skipped.push(format!("direct-quadrature: {e}")),
    }

    for c in &result.stages.coefficients {
        if !(2..=3).contains(&c.k) {
            continue;
        }
        match oracle::monte_carlo_ck(p, &domain, c.k, opts.mc_samples, opts.seed) {
            Ok((m, se)) => comparisons.push(Comparison::new(format!("monte-carlo-C{}", c.k), m, c.value, c.error_bound + 3.0 * se)),
            Err(e) => skipped.push(format!("monte-carlo-C{}: {e}", c.k)),
        }
    }
    VerificationReport { comparisons, skipped }
}

/// A quadrature width of about `R/16`, rounded to a power of two dividing
/// the box side.
fn direct_width(p: &Potential, domain: &BoxDomain) -> f64 {
    let target = p.shells.range / 16.0;
    let mut w = 2.0 * domain.n as f64;
    while w > target {
        w /= 2.0;
    }
    w
}

/// Test hook: shift the stored `C_k/|Λ_n|` by `delta` without touching the
/// reported value, so [`verify_run`] must flag the run.
#[doc(hidden)]
pub fn corrupt_coefficient(result: &mut ApproxResult, k: usize, delta: f64) {
    if let Some(c) = result.stages.coefficients.iter_mut().find(|c| c.k == k) {
        c.value += delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_gas_is_exact() {
        for (d, n) in [(1, 1), (2, 3)] {
            let p = Potential::zero(d).unwrap();
            let zf = ZeroFreeInput::new(0.4, 4.0, 1.0).unwrap();
            let r = approximate_logz(&p, n, &zf, 0.05, Mode::Certified).unwrap();
            assert!((r.log_z_per_volume - 0.4).abs() <= r.epsilon / r.volume());
            assert!(r.epsilon <= 0.05);
            assert!(r.certified);
            let report = verify_run(&r, &p, n, 0.4);
            assert!(report.all_pass(), "{report:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Potential::zero(1).unwrap();
        let zf = ZeroFreeInput::new(0.4, 4.0, 1.0).unwrap();
        assert!(matches!(approximate_logz(&p, 1, &zf, 1.5, Mode::Certified), Err(Error::Input(_))));
        assert!(ZeroFreeInput::new(0.0, 1.0, 1.0).is_err());
        let narrow = ZeroFreeInput::new(1.0, 0.01, 1.0).unwrap();
        assert!(matches!(approximate_logz(&p, 1, &narrow, 0.05, Mode::Certified), Err(Error::Refusal(_))));
    }

    #[test]
    fn threshold_derived_defaults_are_marked() {
        let p = Potential::hard_sphere(1, 1.0).unwrap();
        let zf = ZeroFreeInput::threshold_derived(&p, 0.5, 1, 0.1).unwrap();
        assert_eq!(zf.provenance, Provenance::ThresholdDerived);
        assert!((zf.lambda - 0.25 * std::f64::consts::E).abs() < 1e-12);
        assert_eq!(zf.delta_zf, 0.1 * zf.lambda);
        assert!(zf.c_bound >= 1.0);
    }

    #[test]
    fn corruption_is_detected() {
        let p = Potential::zero(1).unwrap();
        let zf = ZeroFreeInput::new(0.4, 4.0, 1.0).unwrap();
        let mut r = approximate_logz(&p, 1, &zf, 0.05, Mode::Certified).unwrap();
        corrupt_coefficient(&mut r, 1, 0.5);
        let report = verify_run(&r, &p, 1, 0.4);
        assert!(!report.all_pass());
        assert!(report.comparisons.iter().any(|c| c.oracle == "recompose" && !c.pass));
    }
}
