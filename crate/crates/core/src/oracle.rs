//! Independent reference values: direct quadrature of the partition
//! function, the exact hard-rod (Tonks) gas, seeded Monte Carlo estimates of
//! `C_k`, and the chain integrals `V_k` behind the activity threshold.
//!
//! Quadratures run on cells of width `w`. A cell on which every factor keeps
//! one shell of every body is evaluated at its centre with a Lipschitz error
//! (zero for hard cores and step potentials); any other cell contributes its
//! whole volume to the error bound. Monte Carlo uses ChaCha8 streams seeded
//! from `(seed, chunk index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::BoxDomain;
use crate::error::{Error, Result};
use crate::graphs;
use crate::hexfloat;
use crate::potential::{cell_grid, norm_range, Norm, Potential, MAX_DIM};
use crate::sum::Neumaier;

/// Default ceiling on quadrature work (cells or cell tuples visited).
pub const DEFAULT_COST_CEILING: f64 = 1e10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectZResult {
    #[serde(with = "hexfloat::serde_f64")]
    pub value: f64,
    pub n_max: usize,
    #[serde(with = "hexfloat::serde_f64")]
    pub quad_width: f64,
    /// `Σ_{k > N_max} λ^k |S|^k / k!`.
    #[serde(with = "hexfloat::serde_f64")]
    pub truncation_bound: f64,
    /// `Σ_{k ≤ N_max} λ^k/k! · (quadrature error of the k-particle integral)`.
    #[serde(with = "hexfloat::serde_f64")]
    pub quadrature_bound: f64,
    /// `∫_{S^k} e^{-H}` for `k = 0 … N_max`.
    #[serde(with = "hexfloat::serde_vec")]
    pub integrals: Vec<f64>,
}

impl DirectZResult {
    pub fn total_bound(&self) -> f64 {
        self.truncation_bound + self.quadrature_bound
    }

    /// An interval for `log Z` implied by the bounds.
    pub fn log_interval(&self) -> (f64, f64) {
        let lo = (self.value - self.quadrature_bound).max(1.0);
        (lo.ln(), (self.value + self.total_bound()).ln())
    }
}

fn sorted_tuple_count(cells: f64, m: usize) -> f64 {
    // C(cells + m - 1, m)
    (0..m).fold(1.0, |acc, i| acc * (cells + i as f64) / (i as f64 + 1.0))
}

/// Midpoint evaluation of `Z_S(λ) = Σ_{k ≤ N_max} λ^k/k! ∫_{S^k} e^{-H}`.
///
/// `quad_width` must divide `2n`. Symmetry of the integrand is used to sum
/// over nondecreasing cell tuples with multinomial weights.
pub fn partition_function_direct(
    p: &Potential,
    domain: &BoxDomain,
    lambda: f64,
    n_max: usize,
    quad_width: f64,
) -> Result<DirectZResult> {
    partition_function_direct_with_ceiling(p, domain, lambda, n_max, quad_width, DEFAULT_COST_CEILING)
}

pub fn partition_function_direct_with_ceiling(
    p: &Potential,
    domain: &BoxDomain,
    lambda: f64,
    n_max: usize,
    quad_width: f64,
    cost_ceiling: f64,
) -> Result<DirectZResult> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input(format!("activity must be nonnegative, got {lambda}")));
    }
    if n_max > 6 {
        return Err(Error::input(format!("direct quadrature supports N_max ≤ 6, got {n_max}")));
    }
    if domain.d != p.dimension() {
        return Err(Error::input("box and potential dimensions differ"));
    }
    let d = domain.d;
    let span = 2.0 * domain.n as f64;
    let per_axis = (span / quad_width).round();
    if !(quad_width > 0.0) || (per_axis * quad_width - span).abs() > 1e-9 * span || per_axis < 1.0 {
        return Err(Error::input(format!("quadrature width {quad_width} must divide the box side {span}")));
    }
    let per_axis = per_axis as i64;
    let cells = (per_axis as f64).powi(d as i32);
    let vol = domain.volume();
    let cost: f64 = (1..=n_max).map(|m| sorted_tuple_count(cells, m)).sum();
    let mut integrals = vec![1.0; n_max + 1];
    let mut errors = vec![0.0; n_max + 1];
    if p.is_zero() {
        for m in 1..=n_max {
            integrals[m] = vol.powi(m as i32);
        }
    } else if lambda > 0.0 && n_max > 0 {
        if cost > cost_ceiling {
            return Err(Error::refusal(format!(
                "direct quadrature needs about {cost:.3e} cell tuples, above the ceiling {cost_ceiling:.3e}"
            )));
        }
        let (vals, errs) = direct_integrals(p, domain, n_max, quad_width, per_axis);
        integrals = vals;
        errors = errs;
    }
    let mut value = Neumaier::new();
    let mut quad = Neumaier::new();
    let mut term = 1.0;
    for m in 0..=n_max {
        if m > 0 {
            term *= lambda / m as f64;
        }
        value.add(term * integrals[m]);
        quad.add(term * errors[m]);
    }
    let value = value.value();
    let truncation_bound = poisson_tail(lambda * vol, n_max);
    let out = DirectZResult {
        value,
        n_max,
        quad_width,
        truncation_bound,
        quadrature_bound: quad.value(),
        integrals,
    };
    Ok(out)
}

/// `Σ_{k > m} x^k / k!`, summed directly to avoid cancellation.
fn poisson_tail(x: f64, m: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    for k in 1..=m {
        term *= x / k as f64;
    }
    let mut acc = Neumaier::new();
    let mut k = m + 1;
    loop {
        term *= x / k as f64;
        acc.add(term);
        if term < 1e-18 * acc.value() || k > m + 10_000 {
            break;
        }
        k += 1;
    }
    acc.value()
}

#[derive(Clone, Copy)]
struct PairEntry {
    value: f64,
    deviation: f64,
}

fn direct_integrals(p: &Potential, domain: &BoxDomain, n_max: usize, w: f64, per_axis: i64) -> (Vec<f64>, Vec<f64>) {
    let d = domain.d;
    let ncells = per_axis.pow(d as u32) as usize;
    let coords: Vec<[i64; MAX_DIM]> = (0..ncells)
        .map(|mut lin| {
            let mut c = [0i64; MAX_DIM];
            for k in (0..d).rev() {
                c[k] = (lin % per_axis as usize) as i64;
                lin /= per_axis as usize;
            }
            c
        })
        .collect();
    // Pair factors depend only on the difference of cell indices.
    let dspan = 2 * per_axis - 1;
    let table_len = dspan.pow(d as u32) as usize;
    let table: Vec<PairEntry> = (0..table_len)
        .map(|mut lin| {
            let mut lo = [0.0; MAX_DIM];
            let mut hi = [0.0; MAX_DIM];
            let mut ctr = [0.0; MAX_DIM];
            for k in (0..d).rev() {
                let delta = (lin % dspan as usize) as i64 - (per_axis - 1);
                lin /= dspan as usize;
                ctr[k] = delta as f64 * w;
                lo[k] = ctr[k] - w;
                hi[k] = ctr[k] + w;
            }
            let f = p.boltzmann_box(&lo[..d], &hi[..d], &ctr[..d]);
            PairEntry { value: f.value, deviation: f.deviation }
        })
        .collect();
    let index = |a: &[i64; MAX_DIM], b: &[i64; MAX_DIM]| -> usize {
        let mut lin = 0usize;
        for k in 0..d {
            lin = lin * dspan as usize + (a[k] - b[k] + per_axis - 1) as usize;
        }
        lin
    };
    let cell_vol = w.powi(d as i32);
    let parts: Vec<(Vec<Neumaier>, Vec<Neumaier>)> = (0..ncells)
        .into_par_iter()
        .map(|first| {
            let mut vals = vec![Neumaier::new(); n_max + 1];
            let mut errs = vec![Neumaier::new(); n_max + 1];
            let mut stack = vec![first];
            vals[1].add(1.0);
            if n_max >= 2 {
                extend(&coords, &table, &index, n_max, &mut stack, 1.0, 0.0, 1.0, 1, &mut vals, &mut errs);
            }
            (vals, errs)
        })
        .collect();
    let mut vals = vec![Neumaier::new(); n_max + 1];
    let mut errs = vec![Neumaier::new(); n_max + 1];
    for (v, e) in &parts {
        for m in 0..=n_max {
            vals[m].merge(&v[m]);
            errs[m].merge(&e[m]);
        }
    }
    let mut out_v = vec![1.0; n_max + 1];
    let mut out_e = vec![0.0; n_max + 1];
    for m in 1..=n_max {
        let scale = cell_vol.powi(m as i32);
        out_v[m] = vals[m].value() * scale;
        out_e[m] = errs[m].value() * scale;
    }
    (out_v, out_e)
}

/// Depth-first extension of a nondecreasing cell tuple. `weight` is the
/// multinomial factor `m!/∏ mult!`, `run` the multiplicity of the last cell.
#[allow(clippy::too_many_arguments)]
fn extend(
    coords: &[[i64; MAX_DIM]],
    table: &[PairEntry],
    index: &dyn Fn(&[i64; MAX_DIM], &[i64; MAX_DIM]) -> usize,
    n_max: usize,
    stack: &mut Vec<usize>,
    prod: f64,
    dev: f64,
    weight: f64,
    run: usize,
    vals: &mut [Neumaier],
    errs: &mut [Neumaier],
) {
    let m = stack.len();
    let last = *stack.last().unwrap();
    for next in last..coords.len() {
        let mut pr = prod;
        let mut dv = dev;
        let mut vanishes = false;
        for &i in stack.iter() {
            let e = table[index(&coords[next], &coords[i])];
            if e.value == 0.0 && e.deviation == 0.0 {
                vanishes = true;
                break;
            }
            pr *= e.value;
            dv += e.deviation;
        }
        if vanishes {
            continue;
        }
        let new_run = if next == last { run + 1 } else { 1 };
        let w = weight * (m + 1) as f64 / new_run as f64;
        vals[m + 1].add(w * pr);
        errs[m + 1].add(w * dv.min(1.0));
        if m + 1 < n_max {
            stack.push(next);
            extend(coords, table, index, n_max, stack, pr, dv, w, new_run, vals, errs);
            stack.pop();
        }
    }
}

/// `log Σ_{k=0}^{⌊L/r⌋+1} λ^k/k! · max(L - (k-1)r, 0)^k`: hard rods of length
/// `r` with centres in `[0, L]`.
pub fn tonks_gas_logz(length: f64, rod: f64, lambda: f64) -> Result<f64> {
    if !(length > 0.0 && rod > 0.0 && lambda >= 0.0) {
        return Err(Error::input("Tonks gas needs L > 0, r > 0, λ ≥ 0"));
    }
    let kmax = (length / rod).floor() as usize + 1;
    let mut acc = Neumaier::new();
    acc.add(1.0);
    let mut fact = 1.0;
    for k in 1..=kmax {
        fact *= k as f64;
        let free = (length - (k as f64 - 1.0) * rod).max(0.0);
        acc.add(lambda.powi(k as i32) * free.powi(k as i32) / fact);
    }
    Ok(acc.value().ln())
}

/// Exact `C_k/L` for hard rods on `[0, L]`, from the Taylor series of the
/// logarithm of the Tonks polynomial.
pub fn tonks_cluster_coefficients(length: f64, rod: f64, k_max: usize) -> Vec<f64> {
    let mut a = vec![0.0; k_max + 1];
    a[0] = 1.0;
    let mut fact = 1.0;
    for k in 1..=k_max {
        fact *= k as f64;
        a[k] = (length - (k as f64 - 1.0) * rod).max(0.0).powi(k as i32) / fact;
    }
    let mut b = vec![0.0; k_max + 1];
    for n in 1..=k_max {
        let mut acc = Neumaier::new();
        acc.add(a[n]);
        for j in 1..n {
            acc.add(-(j as f64) * b[j] * a[n - j] / n as f64);
        }
        b[n] = acc.value();
    }
    let mut fact = 1.0;
    (1..=k_max)
        .map(|k| {
            fact *= k as f64;
            fact * b[k] / length
        })
        .collect()
}

/// Samples per Monte Carlo stream.
const MC_CHUNK: u64 = 1 << 16;

/// Seeded estimate of `C_k/|Λ_n|` and its standard error: the mean of
/// `|Λ_n|^{k-1} Σ_{G ∈ 𝒢_k} ∏_{ij ∈ E(G)} (e^{-φ(x_i - x_j)} - 1)` over
/// uniform `x ∈ Λ_n^k`.
pub fn monte_carlo_ck(p: &Potential, domain: &BoxDomain, k: usize, samples: u64, seed: u64) -> Result<(f64, f64)> {
    if !(1..=4).contains(&k) {
        return Err(Error::input(format!("Monte Carlo oracle supports 1 ≤ k ≤ 4, got {k}")));
    }
    if domain.d != p.dimension() {
        return Err(Error::input("box and potential dimensions differ"));
    }
    if samples < 2 {
        return Err(Error::input("need at least two samples"));
    }
    if k == 1 {
        return Ok((1.0, 0.0));
    }
    let d = domain.d;
    let all = graphs::pairs(k);
    let masks: Vec<Vec<usize>> = graphs::connected_graphs(k)?
        .map(|g| g.edges().iter().map(|e| all.iter().position(|x| x == e).unwrap()).collect())
        .collect();
    let n = domain.n as f64;
    let scale = domain.volume().powi(k as i32 - 1);
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<(Neumaier, Neumaier)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut s = Neumaier::new();
            let mut s2 = Neumaier::new();
            let mut x = vec![[0.0f64; MAX_DIM]; k];
            let mut f = vec![0.0f64; all.len()];
            let mut diff = [0.0f64; MAX_DIM];
            for _ in 0..count {
                for xi in x.iter_mut() {
                    for c in xi.iter_mut().take(d) {
                        *c = -n + 2.0 * n * rng.gen::<f64>();
                    }
                }
                for (b, &(i, j)) in all.iter().enumerate() {
                    for c in 0..d {
                        diff[c] = x[i][c] - x[j][c];
                    }
                    f[b] = p.mayer_unchecked(&diff[..d]);
                }
                let mut y = 0.0;
                for g in &masks {
                    y += g.iter().map(|&b| f[b]).product::<f64>();
                }
                let y = y * scale;
                s.add(y);
                s2.add(y * y);
            }
            (s, s2)
        })
        .collect();
    let mut s = Neumaier::new();
    let mut s2 = Neumaier::new();
    for (a, b) in &parts {
        s.merge(a);
        s2.merge(b);
    }
    let m = samples as f64;
    let mean = s.value() / m;
    let var = ((s2.value() / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok((mean, (var / m).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectiveBound {
    pub k: usize,
    #[serde(with = "hexfloat::serde_f64")]
    pub estimate: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub error_bound: f64,
}

/// Chain integral
/// `V_k = ∫ ∏_{j=1}^k exp(-Σ_{i=0}^{j-2} 1{‖v_j - v_i‖ < ‖v_i - v_{i+1}‖} φ(v_j - v_i)) (1 - e^{-φ(v_j - v_{j-1})}) dv`
/// with `v_0 = 0` and euclidean norms, over increments `u_j = v_j - v_{j-1}`
/// on cells of width `quad_width` anchored at the origin.
pub fn connective_bound(p: &Potential, k: usize, quad_width: f64) -> Result<ConnectiveBound> {
    connective_bound_with_ceiling(p, k, quad_width, DEFAULT_COST_CEILING)
}

pub fn connective_bound_with_ceiling(p: &Potential, k: usize, quad_width: f64, cost_ceiling: f64) -> Result<ConnectiveBound> {
    if !(1..=3).contains(&k) {
        return Err(Error::input(format!("connective bound supports 1 ≤ k ≤ 3, got {k}")));
    }
    let range = p.shells.range;
    if !(quad_width > 0.0 && quad_width <= range / 10.0) {
        return Err(Error::input(format!("quadrature width must lie in (0, R/10] = (0, {}]", range / 10.0)));
    }
    if p.is_zero() {
        return Ok(ConnectiveBound { k, estimate: 0.0, error_bound: 0.0 });
    }
    let d = p.dimension();
    let w = quad_width;
    // Increment cells meeting the support of 1 - e^{-φ}.
    let c = cell_grid(range, w);
    let side = 2 * c;
    let (outer_norm, outer_size) = p.shells.canonical(p.shells.shell_count());
    let mut cells: Vec<[i64; MAX_DIM]> = Vec::new();
    let mut idx = vec![0i64; d];
    loop {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for a in 0..d {
            lo[a] = (idx[a] - c) as f64 * w;
            hi[a] = lo[a] + w;
        }
        if norm_range(outer_norm, &lo[..d], &hi[..d]).0 < outer_size {
            let mut cell = [0i64; MAX_DIM];
            for a in 0..d {
                cell[a] = idx[a] - c;
            }
            cells.push(cell);
        }
        if !crate::potential::odometer(&mut idx, side) {
            break;
        }
    }
    let cost = (cells.len() as f64).powi(k as i32);
    if cost > cost_ceiling {
        return Err(Error::refusal(format!(
            "V_{k} quadrature needs about {cost:.3e} cell tuples, above the ceiling {cost_ceiling:.3e}"
        )));
    }
    let ctx = ChainCtx { p, d, w, k, cells: &cells };
    let parts: Vec<(Neumaier, Neumaier)> = (0..cells.len())
        .into_par_iter()
        .map(|first| {
            let mut val = Neumaier::new();
            let mut err = Neumaier::new();
            let mut chain = vec![first];
            ctx.walk(&mut chain, &mut val, &mut err);
            (val, err)
        })
        .collect();
    let mut val = Neumaier::new();
    let mut err = Neumaier::new();
    for (a, b) in &parts {
        val.merge(a);
        err.merge(b);
    }
    let scale = w.powi((d * k) as i32);
    Ok(ConnectiveBound { k, estimate: val.value() * scale, error_bound: err.value() * scale })
}

struct ChainCtx<'a> {
    p: &'a Potential,
    d: usize,
    w: f64,
    k: usize,
    cells: &'a [[i64; MAX_DIM]],
}

/// A difference `v_j - v_i` over a product of increment cells: the centre
/// and the half-widths along each axis.
#[derive(Clone, Copy)]
struct Span {
    centre: [f64; MAX_DIM],
    half: f64,
}

impl ChainCtx<'_> {
    fn walk(&self, chain: &mut Vec<usize>, val: &mut Neumaier, err: &mut Neumaier) {
        if chain.len() == self.k {
            let (v, e) = self.integrand(chain);
            val.add(v);
            err.add(e);
            return;
        }
        for next in 0..self.cells.len() {
            chain.push(next);
            self.walk(chain, val, err);
            chain.pop();
        }
    }

    /// `v_j - v_i` for the increment cells in `chain`, `i < j`.
    fn span(&self, chain: &[usize], i: usize, j: usize) -> Span {
        let mut centre = [0.0; MAX_DIM];
        for &cell in &chain[i..j] {
            for a in 0..self.d {
                centre[a] += (self.cells[cell][a] as f64 + 0.5) * self.w;
            }
        }
        Span { centre, half: (j - i) as f64 * self.w / 2.0 }
    }

    fn bounds(&self, s: &Span) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for a in 0..self.d {
            lo[a] = s.centre[a] - s.half;
            hi[a] = s.centre[a] + s.half;
        }
        (lo, hi)
    }

    /// Midpoint value and error bound (per unit volume) for one cell tuple.
    fn integrand(&self, chain: &[usize]) -> (f64, f64) {
        let d = self.d;
        let mut value = 1.0;
        let mut dev = 0.0;
        for j in 1..=self.k {
            // v indices: chain[t] is the increment u_{t+1} = v_{t+1} - v_t.
            let step = self.span(chain, j - 1, j);
            let (lo, hi) = self.bounds(&step);
            let f = self.p.boltzmann_box(&lo[..d], &hi[..d], &step.centre[..d]);
            let mayer = 1.0 - f.value;
            if mayer == 0.0 && f.deviation == 0.0 {
                return (0.0, 0.0);
            }
            value *= mayer;
            dev += f.deviation;
            for i in 0..j.saturating_sub(1) {
                let a = self.span(chain, i, j);
                let b = self.span(chain, i, i + 1);
                let (alo, ahi) = self.bounds(&a);
                let (blo, bhi) = self.bounds(&b);
                let (amin, amax) = norm_range(Norm::Euclidean, &alo[..d], &ahi[..d]);
                let (bmin, bmax) = norm_range(Norm::Euclidean, &blo[..d], &bhi[..d]);
                let an: f64 = a.centre[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
                let bn: f64 = b.centre[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
                let g = self.p.boltzmann_box(&alo[..d], &ahi[..d], &a.centre[..d]);
                let (factor, fdev) = if amax < bmin {
                    (g.value, g.deviation)
                } else if amin >= bmax {
                    (1.0, 0.0)
                } else if g.value == 1.0 && g.deviation == 0.0 {
                    (1.0, 0.0)
                } else {
                    (if an < bn { g.value } else { 1.0 }, 1.0)
                };
                if factor == 0.0 && fdev == 0.0 {
                    return (0.0, 0.0);
                }
                value *= factor;
                dev += fdev;
            }
        }
        (value, dev.min(1.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// `e / min_k (V_k + bound)^{1/k}`.
    #[serde(with = "hexfloat::serde_f64")]
    pub lambda: f64,
    pub k_used: usize,
    #[serde(with = "hexfloat::serde_f64")]
    pub quad_width: f64,
    pub bounds: Vec<ConnectiveBound>,
}

/// An activity below which `λ < e/Δ_φ` is guaranteed, using
/// `Δ_φ ≤ V_k^{1/k}` and the upper end of each quadrature interval.
pub fn certified_lambda_threshold(p: &Potential, k_used: usize, quad_width: f64) -> Result<ThresholdResult> {
    if !(1..=3).contains(&k_used) {
        return Err(Error::input(format!("k_used must be 1, 2 or 3, got {k_used}")));
    }
    let mut bounds = Vec::with_capacity(k_used);
    let mut best = f64::INFINITY;
    for k in 1..=k_used {
        let b = connective_bound(p, k, quad_width)?;
        let upper = (b.estimate + b.error_bound).powf(1.0 / k as f64);
        best = best.min(upper);
        bounds.push(b);
    }
    let lambda = if best > 0.0 { std::f64::consts::E / best } else { f64::INFINITY };
    Ok(ThresholdResult { lambda, k_used, quad_width, bounds })
}
