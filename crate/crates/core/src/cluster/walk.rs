//! Offset-collapsed evaluation of a labelled mesh sum.
//!
//! Every condition defining `S_{σ,δ}` except box membership depends only on
//! the differences `x_i - x_j`. Fixing the lattice offsets `p_v` of all
//! vertices relative to vertex 0, the admissible root positions along axis
//! `c` number `N - (max_v p_{v,c} - min_v p_{v,c})`, where `N = 2n/δ`. The
//! walk enumerates offsets along a breadth-first spanning tree, checks the
//! remaining edges as soon as both endpoints are placed, and adds
//! `f^σ · ∏_c count_c` at each leaf.

use crate::graphs::{spanning_tree, EdgeLabelling};
use crate::potential::{Potential, ShrunkShells, MAX_DIM};
use crate::sum::Neumaier;

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Partial {
    pub sum: Neumaier,
    pub points: u128,
}

impl Partial {
    pub(crate) fn merge(&mut self, other: &Partial) {
        self.sum.merge(&other.sum);
        self.points += other.points;
    }
}

pub(crate) struct Ctx<'a> {
    pub potential: &'a Potential,
    pub shrunk: &'a ShrunkShells,
    pub delta: f64,
    /// Lattice points per axis, `2n/δ`.
    pub side: i64,
}

/// Width of the slabs of the first tree offset handed out as work items.
pub(crate) const SLAB: i64 = 64;

pub(crate) struct Walk {
    d: usize,
    k: usize,
    parent: Vec<usize>,
    label: Vec<usize>,
    back: Vec<Vec<(usize, usize)>>,
    bound: Vec<i64>,
    empty: bool,
}

impl Walk {
    pub(crate) fn new(sigma: &EdgeLabelling<'_>, potential: &Potential, shrunk: &ShrunkShells, gamma: f64, delta: f64) -> Self {
        let g = sigma.graph;
        let k = g.order();
        let d = potential.dimension();
        let tree = spanning_tree(g, None).expect("graphs from the enumerator are connected");
        let (order, parent_vertex) = tree.walk(k);
        let mut position = vec![0; k];
        for (t, &v) in order.iter().enumerate() {
            position[v] = t;
        }
        let mut parent = vec![0; k];
        let mut label = vec![0; k];
        let mut bound = vec![0; k];
        let mut back = vec![Vec::new(); k];
        let mut empty = false;
        for t in 1..k {
            let v = order[t];
            let u = parent_vertex[v];
            parent[t] = position[u];
            let j = sigma.label(u, v).expect("tree edges are graph edges");
            label[t] = j;
            let (_, size) = potential.shells.canonical(j);
            bound[t] = ((1.0 - gamma) * size / delta).floor() as i64;
        }
        for (&(a, b), &j) in g.edges().iter().zip(&sigma.labels) {
            if shrunk.is_empty(j) {
                empty = true;
            }
            if tree.edges.contains(&(a, b)) {
                continue;
            }
            let (pa, pb) = (position[a], position[b]);
            let (early, late) = if pa < pb { (pa, pb) } else { (pb, pa) };
            back[late].push((early, j));
        }
        Walk { d, k, parent, label, back, bound, empty }
    }

    /// Whether some label names an empty shrunk shell, so the sum vanishes.
    pub(crate) fn is_empty(&self) -> bool {
        self.empty
    }

    /// Slabs of the first offset coordinate of vertex 1.
    pub(crate) fn slabs(&self) -> Vec<(i64, i64)> {
        if self.k == 1 {
            return vec![(0, 0)];
        }
        let b = self.bound[1];
        let mut out = Vec::new();
        let mut lo = -b;
        while lo <= b {
            let hi = (lo + SLAB - 1).min(b);
            out.push((lo, hi));
            lo = hi + 1;
        }
        out
    }

    /// `Σ f^σ(x)` over lattice configurations whose first tree offset has its
    /// first coordinate in `[slab.0, slab.1]`.
    pub(crate) fn sum(&self, ctx: &Ctx<'_>, slab: (i64, i64)) -> Partial {
        let mut out = Partial::default();
        if self.empty {
            return out;
        }
        if self.k == 1 {
            let count = (ctx.side as u128).pow(self.d as u32);
            out.sum.add(count as f64);
            out.points = count;
            return out;
        }
        let mut st = State {
            pos: vec![[0i64; MAX_DIM]; self.k],
            lo: vec![[0i64; MAX_DIM]; self.k],
            hi: vec![[0i64; MAX_DIM]; self.k],
        };
        self.descend(ctx, 1, 1.0, slab, &mut st, &mut out);
        out
    }

    fn descend(&self, ctx: &Ctx<'_>, t: usize, weight: f64, slab: (i64, i64), st: &mut State, out: &mut Partial) {
        let d = self.d;
        let b = self.bound[t];
        if b < 0 {
            return;
        }
        let (first_lo, first_hi) = if t == 1 { (slab.0, slab.1) } else { (-b, b) };
        if first_lo > first_hi {
            return;
        }
        let par = self.parent[t];
        let label = self.label[t];
        let last = t + 1 == self.k;
        let mut m = [0i64; MAX_DIM];
        m[0] = first_lo;
        for c in m.iter_mut().take(d).skip(1) {
            *c = -b;
        }
        let mut x = [0.0f64; MAX_DIM];
        let mut q = [0i64; MAX_DIM];
        let mut l = [0i64; MAX_DIM];
        let mut h = [0i64; MAX_DIM];
        'cand: loop {
            let mut fits = true;
            for c in 0..d {
                q[c] = st.pos[par][c] + m[c];
                l[c] = st.lo[t - 1][c].min(q[c]);
                h[c] = st.hi[t - 1][c].max(q[c]);
                if h[c] - l[c] >= ctx.side {
                    fits = false;
                }
            }
            if fits {
                for c in 0..d {
                    x[c] = m[c] as f64 * ctx.delta;
                }
                let xs = &x[..d];
                if ctx.shrunk.contains(label, xs) {
                    let f = ctx.potential.mayer_unchecked(xs);
                    let mut w = weight * f;
                    if w != 0.0 {
                        for &(u, j) in &self.back[t] {
                            for c in 0..d {
                                x[c] = (st.pos[u][c] - q[c]) as f64 * ctx.delta;
                            }
                            let xs = &x[..d];
                            if !ctx.shrunk.contains(j, xs) {
                                w = 0.0;
                                break;
                            }
                            w *= ctx.potential.mayer_unchecked(xs);
                            if w == 0.0 {
                                break;
                            }
                        }
                    }
                    if w != 0.0 {
                        if last {
                            let mut count: u128 = 1;
                            for c in 0..d {
                                count *= (ctx.side - (h[c] - l[c])) as u128;
                            }
                            out.sum.add(w * count as f64);
                            out.points += count;
                        } else {
                            st.pos[t] = q;
                            st.lo[t] = l;
                            st.hi[t] = h;
                            self.descend(ctx, t + 1, w, slab, st, out);
                        }
                    }
                }
            }
            let mut c = d - 1;
            loop {
                let top = if c == 0 { first_hi } else { b };
                if m[c] < top {
                    m[c] += 1;
                    continue 'cand;
                }
                if c == 0 {
                    break 'cand;
                }
                m[c] = -b;
                c -= 1;
            }
        }
    }
}

struct State {
    pos: Vec<[i64; MAX_DIM]>,
    lo: Vec<[i64; MAX_DIM]>,
    hi: Vec<[i64; MAX_DIM]>,
}
