//! Cluster-expansion coefficients `C_k(Λ_n)/|Λ_n|` by structured mesh sums.
//!
//! `C_k(Λ_n) = Σ_{G ∈ 𝒢_k} ∫_{Λ_n^k} ∏_{ij ∈ E(G)} (e^{-φ(x_i - x_j)} - 1) dx`.
//! Each graph is split over edge labellings `σ` into integrals of `f^σ`,
//! which are replaced by lattice sums over `S_{σ,δ}` with explicit error
//! bounds (see [`bounds`]).
//!
//! The lattice of `Λ_n = [-n, n)^d` is `x = -n + aδ` with `0 ≤ a < 2n/δ` and
//! `δ` a power of two, so cells `x + [0, δ)^d` tile the box exactly and
//! halving `δ` refines the lattice.

pub mod bounds;
mod cache;
pub mod mesh;
mod walk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{CacheKey, CoefficientCache, LevelValue};
pub use mesh::{f_sigma, in_u_gamma, mesh_points, stream_sum, MeshPoints};

use crate::error::{Error, Result};
use crate::graphs::{self, EdgeLabelling};
use crate::hexfloat;
use crate::potential::Potential;
use walk::{Ctx, Partial, Walk};

/// The box `Λ_n = [-n, n)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub n: u32,
    pub d: usize,
}

impl BoxDomain {
    pub fn new(n: u32, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("box half-side n must be a positive integer"));
        }
        if d == 0 || d > crate::potential::MAX_DIM {
            return Err(Error::input(format!("box dimension must be in 1..={}", crate::potential::MAX_DIM)));
        }
        Ok(BoxDomain { n, d })
    }

    pub fn for_potential(n: u32, p: &Potential) -> Result<Self> {
        Self::new(n, p.dimension())
    }

    /// `|Λ_n| = (2n)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.n as f64).powi(self.d as i32)
    }

    /// Membership in the half-open box.
    pub fn contains(&self, x: &[f64]) -> bool {
        let n = self.n as f64;
        x.len() == self.d && x.iter().all(|&v| -n <= v && v < n)
    }

    /// Lattice points per axis at mesh width `delta`.
    pub fn side(&self, delta: f64) -> i64 {
        (2.0 * self.n as f64 / delta) as i64
    }
}

/// Mesh width `δ` and the shrinkage `γ = 2√d R δ` derived from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshParams {
    delta: f64,
    gamma: f64,
    dimension: usize,
}

/// Largest admissible mesh width, from `γ ≤ 1/d`.
pub fn delta_cap(p: &Potential) -> f64 {
    let d = p.dimension() as f64;
    1.0 / (2.0 * d * d.sqrt() * p.shells.range)
}

/// The cap with a few ulps of slack, so an exact power-of-two cap survives rounding.
fn admissible_cap(p: &Potential) -> f64 {
    delta_cap(p) * (1.0 + 4.0 * f64::EPSILON)
}

fn largest_power_of_two_at_most(x: f64) -> f64 {
    debug_assert!(x.is_normal() && x > 0.0);
    f64::from_bits(x.to_bits() & !((1u64 << 52) - 1))
}

fn is_power_of_two(x: f64) -> bool {
    x > 0.0 && x.is_normal() && x.to_bits() & ((1u64 << 52) - 1) == 0
}

impl MeshParams {
    pub fn new(delta: f64, p: &Potential) -> Result<Self> {
        let cap = admissible_cap(p);
        if !is_power_of_two(delta) {
            return Err(Error::input(format!("mesh width must be a power of two, got {delta}")));
        }
        if delta > cap {
            return Err(Error::input(format!(
                "mesh width {delta} exceeds the cap 1/(2 d^1.5 R) = {} implied by γ ≤ 1/d",
                delta_cap(p)
            )));
        }
        let d = p.dimension() as f64;
        Ok(MeshParams { delta, gamma: 2.0 * d.sqrt() * p.shells.range * delta, dimension: p.dimension() })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub(crate) fn check(&self, p: &Potential) -> Result<()> {
        let again = MeshParams::new(self.delta, p)?;
        if again != *self || self.dimension != p.dimension() {
            return Err(Error::input("mesh parameters were built for a different potential"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `δ` from the explicit error bounds.
    Certified,
    /// Halve `δ` until successive values agree; the estimate is heuristic.
    Adaptive,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(Mode::Certified),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(Error::input(format!("mode must be certified or adaptive, got {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelledIntegralResult {
    pub value: f64,
    pub point_count: u128,
    pub error_bound: f64,
}

/// `δ^{dk} Σ_{x ∈ S_{σ,δ}} f^σ(x)` with its certified bound.
pub fn labelled_integral(
    p: &Potential,
    sigma: &EdgeLabelling<'_>,
    mesh: &MeshParams,
    domain: &BoxDomain,
) -> Result<LabelledIntegralResult> {
    mesh.check(p)?;
    let k = sigma.graph.order();
    let shrunk = p.shells.shrunk(mesh.gamma);
    let ctx = Ctx { potential: p, shrunk: &shrunk, delta: mesh.delta, side: domain.side(mesh.delta) };
    let w = Walk::new(sigma, p, &shrunk, mesh.gamma, mesh.delta);
    let mut total = Partial::default();
    for part in w.slabs().par_iter().map(|&s| w.sum(&ctx, s)).collect::<Vec<_>>() {
        total.merge(&part);
    }
    let scale = mesh.delta.powi((p.dimension() * k) as i32);
    Ok(LabelledIntegralResult {
        value: total.sum.value() * scale,
        point_count: total.points,
        error_bound: bounds::pair_bound(&p.shells, domain, k, sigma.graph.edge_count(), mesh.delta).total(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    #[serde(with = "hexfloat::serde_f64")]
    pub delta: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub value: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub certified_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterCoefficient {
    pub k: usize,
    /// Approximation of `C_k(Λ_n)/|Λ_n|`.
    #[serde(with = "hexfloat::serde_f64")]
    pub value: f64,
    /// Certified bound, or the last-step difference in adaptive mode.
    #[serde(with = "hexfloat::serde_f64")]
    pub error_bound: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub target: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub delta_used: f64,
    pub mode: Mode,
    pub certified: bool,
    /// Mesh levels evaluated, coarse to fine.
    pub levels: Vec<Level>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterSettings {
    pub k_hard_limit: usize,
    /// Refuse a mesh level whose estimated candidate count exceeds this.
    pub cost_ceiling: f64,
    pub delta_floor: f64,
    pub max_adaptive_levels: usize,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings {
            k_hard_limit: graphs::DEFAULT_K_HARD_LIMIT,
            cost_ceiling: 1e11,
            delta_floor: 2f64.powi(-40),
            max_adaptive_levels: 24,
        }
    }
}

/// Mesh-sum evaluator with a shared coefficient cache.
#[derive(Debug, Default)]
pub struct ClusterEngine {
    pub settings: ClusterSettings,
    cache: CoefficientCache,
}

/// Number of connected graphs on `k` vertices with each edge count.
pub fn edge_histogram(k: usize, k_hard_limit: usize) -> Result<Vec<u64>> {
    let mut hist = vec![0u64; k * k.saturating_sub(1) / 2 + 1];
    for g in graphs::connected_graphs_with_limit(k, k_hard_limit)? {
        hist[g.edge_count()] += 1;
    }
    Ok(hist)
}

/// Number of mask chunks handed to worker threads. Fixed, so the reduction
/// order does not depend on the thread count.
const GRAPH_CHUNKS: usize = 256;

impl ClusterEngine {
    pub fn new(settings: ClusterSettings) -> Self {
        ClusterEngine { settings, cache: CoefficientCache::in_memory() }
    }

    pub fn with_cache(settings: ClusterSettings, cache: CoefficientCache) -> Self {
        ClusterEngine { settings, cache }
    }

    pub fn cache(&self) -> &CoefficientCache {
        &self.cache
    }

    fn check_order(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::input("coefficient order k must be at least 1"));
        }
        if k > self.settings.k_hard_limit {
            return Err(Error::refusal(format!(
                "coefficient order {k} exceeds the hard limit {}: the sum runs over all connected labelled \
                 graphs, whose number grows superexponentially",
                self.settings.k_hard_limit
            )));
        }
        Ok(())
    }

    /// Estimated candidate offsets inspected at mesh width `delta`.
    pub fn cost_estimate(&self, p: &Potential, k: usize, delta: f64) -> Result<f64> {
        if k == 1 || p.is_zero() {
            return Ok(1.0);
        }
        let hist = edge_histogram(k, self.settings.k_hard_limit)?;
        let ell = p.shells.shell_count() as f64;
        let pairs: f64 = hist.iter().enumerate().map(|(e, &c)| c as f64 * ell.powi(e as i32)).sum();
        let mesh = MeshParams::new(delta, p)?;
        let (_, ext) = p.shells.canonical(p.shells.shell_count());
        let b = ((1.0 - mesh.gamma) * ext / delta).floor().max(0.0);
        let per = (2.0 * b + 1.0).powi(p.dimension() as i32);
        let mut walk = 0.0;
        let mut prod = 1.0;
        for _ in 1..k {
            prod *= per;
            walk += prod;
        }
        Ok(pairs * walk)
    }

    /// Mesh value of `C_k/|Λ_n|` at one `δ`, from the cache when possible.
    pub fn level(&self, p: &Potential, domain: &BoxDomain, k: usize, delta: f64) -> Result<LevelValue> {
        self.check_order(k)?;
        if domain.d != p.dimension() {
            return Err(Error::input("box and potential dimensions differ"));
        }
        let mesh = MeshParams::new(delta, p)?;
        let key: CacheKey = (p.hash().to_string(), domain.n, k, delta.to_bits());
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let side = domain.side(delta);
        let lv = if k == 1 {
            LevelValue { value: 1.0, error_bound: 0.0, point_count: (side as u128).pow(domain.d as u32) }
        } else if p.is_zero() {
            LevelValue { value: 0.0, error_bound: 0.0, point_count: 0 }
        } else {
            let cost = self.cost_estimate(p, k, delta)?;
            if cost > self.settings.cost_ceiling {
                return Err(Error::refusal(format!(
                    "mesh level δ = {delta} for C_{k} needs about {cost:.3e} candidate offsets, above the \
                     ceiling {:.3e}",
                    self.settings.cost_ceiling
                )));
            }
            self.evaluate(p, domain, k, &mesh)?
        };
        self.cache.insert(key, lv)
    }

    fn evaluate(&self, p: &Potential, domain: &BoxDomain, k: usize, mesh: &MeshParams) -> Result<LevelValue> {
        let shrunk = p.shells.shrunk(mesh.gamma);
        let ctx = Ctx { potential: p, shrunk: &shrunk, delta: mesh.delta, side: domain.side(mesh.delta) };
        let ell = p.shells.shell_count();
        let limit = self.settings.k_hard_limit;
        let chunks = graphs::chunk_ranges(k, GRAPH_CHUNKS);
        let partials: Vec<Result<Partial>> = chunks
            .into_par_iter()
            .map(|range| {
                let mut part = Partial::default();
                for g in graphs::connected_graphs_in_range(k, limit, range)? {
                    for sigma in graphs::edge_labellings(&g, ell) {
                        let w = Walk::new(&sigma, p, &shrunk, mesh.gamma, mesh.delta);
                        if w.is_empty() {
                            continue;
                        }
                        let slabs = w.slabs();
                        let subs: Vec<Partial> = slabs.par_iter().map(|&s| w.sum(&ctx, s)).collect();
                        for s in &subs {
                            part.merge(s);
                        }
                    }
                }
                Ok(part)
            })
            .collect();
        let mut total = Partial::default();
        for part in partials {
            total.merge(&part?);
        }
        let hist = edge_histogram(k, limit)?;
        let scale = mesh.delta.powi((p.dimension() * k) as i32);
        Ok(LevelValue {
            value: total.sum.value() * scale / domain.volume(),
            error_bound: bounds::coefficient_bound(&p.shells, domain, k, &hist, mesh.delta),
            point_count: total.points,
        })
    }

    /// Mesh width for `C_k` at additive target `eps`.
    ///
    /// Certified mode returns the largest power of two below the cap whose
    /// summed bound is at most `eps`; adaptive mode returns the starting
    /// width `min(R/4, cap)` rounded down to a power of two.
    pub fn choose_delta(&self, k: usize, eps: f64, p: &Potential, domain: &BoxDomain, mode: Mode) -> Result<f64> {
        self.check_order(k)?;
        check_eps(eps)?;
        let cap = admissible_cap(p);
        let top = largest_power_of_two_at_most(cap);
        if mode == Mode::Adaptive {
            return Ok(largest_power_of_two_at_most(cap.min(p.shells.range / 4.0)));
        }
        if k == 1 || p.is_zero() {
            return Ok(top);
        }
        let hist = edge_histogram(k, self.settings.k_hard_limit)?;
        let mut delta = top;
        loop {
            let b = bounds::coefficient_bound(&p.shells, domain, k, &hist, delta);
            if b <= eps {
                return Ok(delta);
            }
            if delta / 2.0 < self.settings.delta_floor {
                let required = delta * eps / b;
                return Err(Error::refusal(format!(
                    "certified C_{k} at error {eps:e} needs δ ≈ {required:.3e}, below the feasibility floor {:e}; \
                     try adaptive mode",
                    self.settings.delta_floor
                )));
            }
            delta /= 2.0;
        }
    }

    pub fn coefficient(&self, p: &Potential, domain: &BoxDomain, k: usize, eps: f64, mode: Mode) -> Result<ClusterCoefficient> {
        self.check_order(k)?;
        check_eps(eps)?;
        if domain.d != p.dimension() {
            return Err(Error::input("box and potential dimensions differ"));
        }
        if k == 1 || p.is_zero() {
            let delta = self.choose_delta(k, eps, p, domain, Mode::Certified)?;
            let lv = self.level(p, domain, k, delta)?;
            return Ok(ClusterCoefficient {
                k,
                value: lv.value,
                error_bound: 0.0,
                target: eps,
                delta_used: delta,
                mode,
                certified: true,
                levels: vec![Level { delta, value: lv.value, certified_bound: 0.0 }],
            });
        }
        match mode {
            Mode::Certified => {
                let delta = self.choose_delta(k, eps, p, domain, mode)?;
                let lv = self.level(p, domain, k, delta).map_err(|e| match e {
                    Error::Refusal(m) => Error::refusal(format!("{m}; try adaptive mode")),
                    other => other,
                })?;
                Ok(ClusterCoefficient {
                    k,
                    value: lv.value,
                    error_bound: lv.error_bound,
                    target: eps,
                    delta_used: delta,
                    mode,
                    certified: true,
                    levels: vec![Level { delta, value: lv.value, certified_bound: lv.error_bound }],
                })
            }
            Mode::Adaptive => self.adaptive(p, domain, k, eps),
        }
    }

    fn adaptive(&self, p: &Potential, domain: &BoxDomain, k: usize, eps: f64) -> Result<ClusterCoefficient> {
        let mut delta = self.choose_delta(k, eps, p, domain, Mode::Adaptive)?;
        let mut prev = self.level(p, domain, k, delta)?;
        let mut levels = vec![Level { delta, value: prev.value, certified_bound: prev.error_bound }];
        let mut empty_run = usize::from(prev.point_count == 0);
        for _ in 1..self.settings.max_adaptive_levels {
            let next_delta = delta / 2.0;
            let cur = self.level(p, domain, k, next_delta).map_err(|e| match e {
                Error::Refusal(m) => Error::refusal(format!(
                    "adaptive refinement of C_{k} stopped before converging (last step difference {:e}, target \
                     {:e}): {m}",
                    levels.len().checked_sub(2).map_or(f64::NAN, |i| (levels[i + 1].value - levels[i].value).abs()),
                    eps / 2.0
                )),
                other => other,
            })?;
            delta = next_delta;
            levels.push(Level { delta, value: cur.value, certified_bound: cur.error_bound });
            let diff = (cur.value - prev.value).abs();
            empty_run = if cur.point_count == 0 { empty_run + 1 } else { 0 };
            let converged = (diff < eps / 2.0 && prev.point_count > 0) || empty_run >= 3;
            if converged {
                return Ok(ClusterCoefficient {
                    k,
                    value: cur.value,
                    error_bound: diff,
                    target: eps,
                    delta_used: delta,
                    mode: Mode::Adaptive,
                    certified: false,
                    levels,
                });
            }
            prev = cur;
        }
        Err(Error::refusal(format!(
            "adaptive refinement of C_{k} did not converge within {} levels",
            self.settings.max_adaptive_levels
        )))
    }

    /// `C_1 … C_{k_max}` with `errors[k-1]` the target for `C_k`.
    pub fn series(&self, p: &Potential, domain: &BoxDomain, errors: &[f64], mode: Mode) -> Result<Vec<ClusterCoefficient>> {
        errors
            .iter()
            .enumerate()
            .map(|(i, &eps)| self.coefficient(p, domain, i + 1, eps, mode))
            .collect()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("error target must be positive and finite, got {eps}")))
    }
}

pub fn choose_delta(k: usize, eps: f64, p: &Potential, domain: &BoxDomain, mode: Mode) -> Result<f64> {
    ClusterEngine::default().choose_delta(k, eps, p, domain, mode)
}

pub fn cluster_coefficient(p: &Potential, domain: &BoxDomain, k: usize, eps: f64, mode: Mode) -> Result<ClusterCoefficient> {
    ClusterEngine::default().coefficient(p, domain, k, eps, mode)
}

pub fn cluster_series(
    p: &Potential,
    domain: &BoxDomain,
    k_max: usize,
    errors: &[f64],
    mode: Mode,
) -> Result<Vec<ClusterCoefficient>> {
    if errors.len() != k_max {
        return Err(Error::input(format!("need {k_max} error targets, got {}", errors.len())));
    }
    ClusterEngine::default().series(p, domain, errors, mode)
}

#[cfg(test)]
mod tests;
