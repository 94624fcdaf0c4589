//! Truncation control and error allocation for `f(1) = g(z₁)`, `g = f ∘ Φ`.
//!
//! A budget with `k` terms evaluates `Σ_{j=0}^{k-1} g_j z₁^j` (`g_0 = 0`), so
//! it needs `f_1 … f_{k-1}`. If `|g| ≤ 1` on the disk the truncation error
//! is at most `|z₁|^k/(1 - |z₁|)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bell::CoefficientTransform;
use crate::error::{Error, Result};
use crate::hexfloat;

/// Smallest admissible target for one cluster coefficient.
pub const BUDGET_FLOOR: f64 = 1e-13;

/// Factor keeping the recomputed propagated bound strictly below `ε/2`
/// after rounding.
const SAFETY: f64 = 1.0 - 1e-9;

/// Smallest `k ≥ 1` with `|z₁|^k/(1 - |z₁|) ≤ ε_half`.
pub fn taylor_terms_needed(z1_abs: f64, eps_half: f64) -> Result<usize> {
    if !(z1_abs > 0.0 && z1_abs < 1.0) {
        return Err(Error::input(format!("|z₁| must lie in (0, 1), got {z1_abs}")));
    }
    if !(eps_half > 0.0 && eps_half.is_finite()) {
        return Err(Error::input(format!("truncation target must be positive, got {eps_half}")));
    }
    let mut k = 1;
    while z1_abs.powi(k as i32) / (1.0 - z1_abs) > eps_half {
        k += 1;
    }
    Ok(k)
}

pub fn truncation_bound(z1_abs: f64, k: usize) -> f64 {
    z1_abs.powi(k as i32) / (1.0 - z1_abs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorBudget {
    pub term_count: usize,
    /// Targets for `C_i(Λ_n)/|Λ_n|`, `i = 1 … k-1`.
    #[serde(with = "hexfloat::serde_vec")]
    pub coefficient_targets: Vec<f64>,
    /// The induced errors on `f^{(i)}(0)/i!`.
    #[serde(with = "hexfloat::serde_vec")]
    pub f_errors: Vec<f64>,
    #[serde(with = "hexfloat::serde_f64")]
    pub truncation_bound: f64,
    /// `Σ_j |z₁|^j Σ_i |β[i][j]| err_f(i)`, recomputed after allocation.
    #[serde(with = "hexfloat::serde_f64")]
    pub propagated_bound: f64,
}

/// Weights `w_i = Σ_{j=i}^{k-1} |z₁|^j |β[i][j]|`.
fn weights(transform: &CoefficientTransform, k: usize, z1_abs: f64) -> Vec<f64> {
    (1..k).map(|i| (i..k).map(|j| z1_abs.powi(j as i32) * transform.get(i, j).norm()).sum()).collect()
}

/// Propagated error of coefficient errors `err[i-1]` on `f_i` through `β`.
pub fn propagated_error(transform: &CoefficientTransform, z1_abs: f64, err: &[f64]) -> f64 {
    let k = err.len() + 1;
    weights(transform, k, z1_abs).iter().zip(err).map(|(w, e)| w * e).sum()
}

/// Split `eps/2` evenly over `f_1 … f_{k-1}` and convert each share into a
/// target for `C_i/|Λ_n|` via `f_i = λ^i C_i(Λ_n)/(i!·C·|Λ_n|)`.
///
/// `eps` is the target for `f(1)`, in units of `C·|Λ_n|`.
pub fn allocate_budget(
    eps: f64,
    transform: &CoefficientTransform,
    k: usize,
    lambda: f64,
    c_bound: f64,
    z1_abs: f64,
) -> Result<TaylorBudget> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::input(format!("error target must be positive, got {eps}")));
    }
    if !(lambda > 0.0 && c_bound > 0.0) {
        return Err(Error::input("activity and normalization constant must be positive"));
    }
    if k == 0 || k > transform.j_max() + 1 {
        return Err(Error::input(format!("term count {k} needs β up to j = {}", k.saturating_sub(1))));
    }
    let trunc = truncation_bound(z1_abs, k);
    if trunc > eps / 2.0 {
        return Err(Error::input(format!(
            "term count {k} leaves truncation error {trunc:e} above ε/2 = {:e}",
            eps / 2.0
        )));
    }
    let w = weights(transform, k, z1_abs);
    let share = if k > 1 { SAFETY * eps / 2.0 / (k - 1) as f64 } else { 0.0 };
    let mut f_errors = Vec::with_capacity(k - 1);
    let mut targets = Vec::with_capacity(k - 1);
    let mut fact = 1.0;
    for (idx, &wi) in w.iter().enumerate() {
        let i = idx + 1;
        fact *= i as f64;
        if wi == 0.0 {
            return Err(Error::input(format!("coefficient {i} has zero weight; Φ′(0) must be nonzero")));
        }
        let ef = share / wi;
        let target = ef * fact * c_bound / lambda.powi(i as i32);
        if !(target >= BUDGET_FLOOR) {
            return Err(Error::refusal(format!(
                "budget requires C_{i}/|Λ| to within {target:e}, below the floor {BUDGET_FLOOR:e}"
            )));
        }
        f_errors.push(ef);
        targets.push(target);
    }
    let propagated = propagated_error(transform, z1_abs, &f_errors);
    debug_assert!(propagated <= eps / 2.0);
    Ok(TaylorBudget {
        term_count: k,
        coefficient_targets: targets,
        f_errors,
        truncation_bound: trunc,
        propagated_bound: propagated,
    })
}

/// `g_j = Σ_i f_i β[i][j]` for `j = 1 … len(f)`.
pub fn transform_coefficients(f: &[Complex64], transform: &CoefficientTransform) -> Vec<Complex64> {
    (1..=f.len())
        .map(|j| (1..=j).map(|i| f[i - 1] * transform.get(i, j)).sum())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Composed {
    pub value: Complex64,
    pub truncation_bound: f64,
    pub propagated_bound: f64,
    /// `Σ_{j<m} g_j z₁^j` for `m = 1 … k`.
    pub partial_sums: Vec<Complex64>,
}

impl Composed {
    pub fn error(&self) -> f64 {
        self.truncation_bound + self.propagated_bound
    }
}

/// Evaluate `Σ_{j=0}^{k-1} g_j z₁^j` from `(f_i, err_i)`, `i = 1 … k-1`.
pub fn compose_and_evaluate(f_coeffs: &[(f64, f64)], transform: &CoefficientTransform, z1: Complex64) -> Composed {
    let f: Vec<Complex64> = f_coeffs.iter().map(|&(v, _)| Complex64::new(v, 0.0)).collect();
    let err: Vec<f64> = f_coeffs.iter().map(|&(_, e)| e).collect();
    let g = transform_coefficients(&f, transform);
    let mut partial = Vec::with_capacity(g.len() + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    partial.push(acc);
    let mut zp = Complex64::new(1.0, 0.0);
    for gj in &g {
        zp *= z1;
        acc += gj * zp;
        partial.push(acc);
    }
    let k = f_coeffs.len() + 1;
    Composed {
        value: acc,
        truncation_bound: truncation_bound(z1.norm(), k),
        propagated_bound: propagated_error(transform, z1.norm(), &err),
        partial_sums: partial,
    }
}
