//! Explicit error constants for one labelled mesh integral.
//!
//! With `V = |Λ_n|`, `P = (2R)^{d(k-1)}`, `E = |E(G)|`, `γ = 2√d R δ` and
//! `t = √d R δ`:
//!
//! * `E_lip   = 2 L E √(dk) δ V P`
//! * `E_shrink = 4 E P d γ V`
//! * `E_bdry  = 2 E P [(1+t)^d - (1-t)^d] V`
//!
//! `E_bdry` covers configurations whose lattice corner leaves a shrunk shell
//! although the point itself is inside: a shift below `√d δ` in every edge
//! difference, and `K + B(s) ⊆ (1 + sR)K` because `K ⊇ B(0, 1/R)`.

use serde::{Deserialize, Serialize};

use crate::hexfloat;
use crate::potential::ShellDecomposition;

use super::BoxDomain;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    #[serde(with = "hexfloat::serde_f64")]
    pub lipschitz: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub shrink: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub boundary: f64,
}

impl PairBound {
    pub fn total(&self) -> f64 {
        self.lipschitz + self.shrink + self.boundary
    }
}

/// Absolute bound for one `(G, σ)` with `edges` edges on `k` vertices.
pub fn pair_bound(shells: &ShellDecomposition, domain: &BoxDomain, k: usize, edges: usize, delta: f64) -> PairBound {
    if edges == 0 {
        return PairBound { lipschitz: 0.0, shrink: 0.0, boundary: 0.0 };
    }
    let d = shells.dimension as f64;
    let r = shells.range;
    let v = domain.volume();
    let p = (2.0 * r).powi((shells.dimension * (k - 1)) as i32);
    let e = edges as f64;
    let gamma = 2.0 * d.sqrt() * r * delta;
    let t = d.sqrt() * r * delta;
    let layer = (1.0 + t).powi(shells.dimension as i32) - (1.0 - t).max(0.0).powi(shells.dimension as i32);
    PairBound {
        lipschitz: 2.0 * shells.lipschitz * e * (d * k as f64).sqrt() * delta * v * p,
        shrink: 4.0 * e * p * d * gamma * v,
        boundary: 2.0 * e * p * layer * v,
    }
}

/// Bound on `|C_k/|Λ_n| - mesh value|`, summing [`pair_bound`] over all
/// `(G, σ)`. `edge_histogram[e]` is the number of connected graphs with `e`
/// edges.
pub fn coefficient_bound(
    shells: &ShellDecomposition,
    domain: &BoxDomain,
    k: usize,
    edge_histogram: &[u64],
    delta: f64,
) -> f64 {
    let ell = shells.shell_count() as f64;
    let mut acc = crate::sum::Neumaier::new();
    for (e, &count) in edge_histogram.iter().enumerate() {
        if count == 0 || e == 0 {
            continue;
        }
        acc.add(count as f64 * ell.powi(e as i32) * pair_bound(shells, domain, k, e, delta).total());
    }
    acc.value() / domain.volume()
}
