//! Pointwise integrand, the set `U_γ`, and the literal mesh-point stream.
//!
//! The stream enumerates `x_1` over the box lattice and every further vertex
//! over offsets in `[-2R, 2R]^d` from its tree parent. It is exponentially
//! slower than the collapsed walk and serves as the reference it is tested
//! against.

use crate::error::{Error, Result};
use crate::graphs::{spanning_tree, EdgeLabelling};
use crate::potential::{Potential, ShrunkShells, MAX_DIM};
use crate::sum::Neumaier;

use super::{BoxDomain, MeshParams};

fn diff(a: &[f64], b: &[f64], out: &mut [f64; MAX_DIM]) {
    for (c, (x, y)) in a.iter().zip(b).enumerate() {
        out[c] = x - y;
    }
}

/// `∏_{ij ∈ E(G)} (e^{-φ(x_i - x_j)} - 1) · 1{x_i - x_j ∈ Δ_{σ(ij)}}`.
pub fn f_sigma(p: &Potential, sigma: &EdgeLabelling<'_>, x: &[Vec<f64>]) -> f64 {
    let d = p.dimension();
    let mut buf = [0.0; MAX_DIM];
    let mut prod = 1.0;
    for (&(i, j), &label) in sigma.graph.edges().iter().zip(&sigma.labels) {
        diff(&x[i], &x[j], &mut buf);
        if p.shells.shell_index(&buf[..d]) != Some(label) {
            return 0.0;
        }
        prod *= p.mayer_unchecked(&buf[..d]);
        if prod == 0.0 {
            return 0.0;
        }
    }
    prod
}

/// Membership of `x` in `U_γ`: inside the half-open box, every edge
/// difference in its shrunk shell, and `f^σ(x) ≠ 0`.
pub fn in_u_gamma(p: &Potential, sigma: &EdgeLabelling<'_>, gamma: f64, domain: &BoxDomain, x: &[Vec<f64>]) -> Result<bool> {
    let cap = 1.0 / p.dimension() as f64;
    if !(0.0..=cap).contains(&gamma) {
        return Err(Error::input(format!("shrinkage γ must lie in [0, 1/d] = [0, {cap}], got {gamma}")));
    }
    Ok(in_u_gamma_with(p, sigma, &p.shells.shrunk(gamma), domain, x))
}

fn in_u_gamma_with(p: &Potential, sigma: &EdgeLabelling<'_>, shrunk: &ShrunkShells, domain: &BoxDomain, x: &[Vec<f64>]) -> bool {
    let d = p.dimension();
    if !x.iter().all(|xi| domain.contains(xi)) {
        return false;
    }
    let mut buf = [0.0; MAX_DIM];
    for (&(i, j), &label) in sigma.graph.edges().iter().zip(&sigma.labels) {
        diff(&x[i], &x[j], &mut buf);
        if !shrunk.contains(label, &buf[..d]) {
            return false;
        }
    }
    f_sigma(p, sigma, x) != 0.0
}

/// Iterator over `S_{σ,δ} = U_γ ∩ ((δZ)^d)^k`, restricted to the box lattice
/// `x = -n + aδ`, `0 ≤ a < 2n/δ`.
pub struct MeshPoints<'a> {
    potential: &'a Potential,
    sigma: EdgeLabelling<'a>,
    domain: BoxDomain,
    shrunk: ShrunkShells,
    delta: f64,
    order: Vec<usize>,
    parent: Vec<usize>,
    side: i64,
    reach: i64,
    idx: Vec<i64>,
    done: bool,
}

pub fn mesh_points<'a>(
    p: &'a Potential,
    sigma: &EdgeLabelling<'a>,
    mesh: &MeshParams,
    domain: &BoxDomain,
) -> Result<MeshPoints<'a>> {
    mesh.check(p)?;
    let k = sigma.graph.order();
    let d = p.dimension();
    let tree = spanning_tree(sigma.graph, None)?;
    let (order, parent) = tree.walk(k);
    let side = domain.side(mesh.delta());
    let reach = (2.0 * p.shells.range / mesh.delta()).floor() as i64;
    let mut idx = vec![0i64; d * k];
    for v in idx.iter_mut().skip(d) {
        *v = -reach;
    }
    Ok(MeshPoints {
        potential: p,
        sigma: sigma.clone(),
        domain: *domain,
        shrunk: p.shells.shrunk(mesh.gamma()),
        delta: mesh.delta(),
        order,
        parent,
        side,
        reach,
        idx,
        done: false,
    })
}

impl MeshPoints<'_> {
    fn advance(&mut self) {
        let d = self.potential.dimension();
        for i in (0..self.idx.len()).rev() {
            let (lo, hi) = if i < d { (0, self.side - 1) } else { (-self.reach, self.reach) };
            if self.idx[i] < hi {
                self.idx[i] += 1;
                return;
            }
            self.idx[i] = lo;
        }
        self.done = true;
    }

    fn current(&self) -> Option<Vec<Vec<f64>>> {
        let d = self.potential.dimension();
        let k = self.order.len();
        let mut lattice = vec![vec![0i64; d]; k];
        lattice[0].copy_from_slice(&self.idx[..d]);
        for (t, &v) in self.order.iter().enumerate().skip(1) {
            let u = self.parent[v];
            for c in 0..d {
                let a = lattice[u][c] + self.idx[t * d + c];
                if a < 0 || a >= self.side {
                    return None;
                }
                lattice[v][c] = a;
            }
        }
        let n = self.domain.n as f64;
        Some(
            lattice
                .iter()
                .map(|a| a.iter().map(|&ai| -n + ai as f64 * self.delta).collect())
                .collect(),
        )
    }
}

impl Iterator for MeshPoints<'_> {
    type Item = Vec<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let cand = self.current();
            self.advance();
            if let Some(x) = cand {
                if in_u_gamma_with(self.potential, &self.sigma, &self.shrunk, &self.domain, &x) {
                    return Some(x);
                }
            }
        }
        None
    }
}

/// `δ^{dk} Σ_{x ∈ S_{σ,δ}} f^σ(x)` and `|S_{σ,δ}|` from the literal stream.
pub fn stream_sum(p: &Potential, sigma: &EdgeLabelling<'_>, mesh: &MeshParams, domain: &BoxDomain) -> Result<(f64, u128)> {
    let k = sigma.graph.order();
    let mut acc = Neumaier::new();
    let mut count = 0u128;
    for x in mesh_points(p, sigma, mesh, domain)? {
        acc.add(f_sigma(p, sigma, &x));
        count += 1;
    }
    Ok((acc.value() * mesh.delta().powi((p.dimension() * k) as i32), count))
}
