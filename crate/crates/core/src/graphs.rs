//! Connected labelled graphs, spanning trees and edge labellings.
//!
//! Vertices are `0..k`. An edge subset is encoded as a bit mask in which bit
//! `b` stands for the `b`-th pair of [`pairs`] (lexicographic order), and
//! graphs are produced in increasing mask order.

use std::collections::VecDeque;
use std::ops::Range;

use crate::error::{Error, Result};

/// Default ceiling on the graph order.
pub const DEFAULT_K_HARD_LIMIT: usize = 7;

/// Largest order whose edge masks fit the `u64` encoding.
const K_ENCODABLE: usize = 11;

/// All pairs `(i, j)` with `i < j < k`, lexicographically.
pub fn pairs(k: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            v.push((i, j));
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabeledGraph {
    k: usize,
    edges: Vec<(usize, usize)>,
}

impl LabeledGraph {
    /// Build from an edge list; rejects self-loops, out-of-range vertices
    /// and disconnected graphs. Edges are normalised and sorted.
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("a graph needs at least one vertex"));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b || a >= k || b >= k {
                return Err(Error::input(format!("invalid edge ({a}, {b}) for {k} vertices")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let g = LabeledGraph { k, edges: norm };
        if !is_connected_union_find(&g) {
            return Err(Error::input("graph is not connected"));
        }
        Ok(g)
    }

    fn from_mask(k: usize, all: &[(usize, usize)], mask: u64) -> Self {
        let edges = all
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        LabeledGraph { k, edges }
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.k];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

fn mask_connected(k: usize, adj: &[u64], mask_limit: u64) -> bool {
    let full = mask_limit;
    let mut seen = 1u64;
    let mut frontier = 1u64;
    while frontier != 0 {
        let mut next = 0u64;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= adj[v];
        }
        next &= !seen;
        seen |= next;
        frontier = next;
    }
    debug_assert!(k <= 64);
    seen == full
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Connectivity by union-find, independent of the enumerator's bit-mask search.
pub fn is_connected_union_find(g: &LabeledGraph) -> bool {
    let mut uf = UnionFind::new(g.k);
    let mut components = g.k;
    for &(a, b) in &g.edges {
        if uf.union(a, b) {
            components -= 1;
        }
    }
    components == 1
}

/// Stream of connected graphs on `k` vertices, in increasing mask order.
pub struct ConnectedGraphs {
    k: usize,
    all: Vec<(usize, usize)>,
    next_mask: u64,
    end: u64,
}

impl Iterator for ConnectedGraphs {
    type Item = LabeledGraph;

    fn next(&mut self) -> Option<LabeledGraph> {
        let full = (1u64 << self.k) - 1;
        while self.next_mask < self.end {
            let mask = self.next_mask;
            self.next_mask += 1;
            let mut adj = [0u64; K_ENCODABLE];
            for (b, &(i, j)) in self.all.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
            if mask_connected(self.k, &adj[..self.k], full) {
                return Some(LabeledGraph::from_mask(self.k, &self.all, mask));
            }
        }
        None
    }
}

/// Number of edge masks for graphs on `k` vertices.
pub fn mask_count(k: usize) -> u64 {
    1u64 << (k * k.saturating_sub(1) / 2)
}

pub fn connected_graphs(k: usize) -> Result<ConnectedGraphs> {
    connected_graphs_with_limit(k, DEFAULT_K_HARD_LIMIT)
}

pub fn connected_graphs_with_limit(k: usize, k_hard_limit: usize) -> Result<ConnectedGraphs> {
    connected_graphs_in_range(k, k_hard_limit, 0..u64::MAX)
}

/// Only the masks in `range`; the streams of a partition of `0..mask_count(k)`
/// concatenate to the full stream.
pub fn connected_graphs_in_range(k: usize, k_hard_limit: usize, range: Range<u64>) -> Result<ConnectedGraphs> {
    if k == 0 {
        return Err(Error::input("graph order must be at least 1"));
    }
    if k > k_hard_limit.min(K_ENCODABLE) {
        return Err(Error::refusal(format!(
            "graph order {k} exceeds the hard limit {}: the number of connected labelled graphs grows \
             superexponentially (|G_7| = 1866256, |G_8| ≈ 2.5e8)",
            k_hard_limit.min(K_ENCODABLE)
        )));
    }
    let total = mask_count(k);
    Ok(ConnectedGraphs { k, all: pairs(k), next_mask: range.start.min(total), end: range.end.min(total) })
}

/// Split `0..mask_count(k)` into `n` contiguous, nearly equal ranges.
pub fn chunk_ranges(k: usize, n: usize) -> Vec<Range<u64>> {
    let total = mask_count(k);
    let n = (n.max(1) as u64).min(total);
    (0..n).map(|i| total * i / n..total * (i + 1) / n).collect()
}

/// `|G_k|` from `c_n = 2^{C(n,2)} - Σ_{m<n} C(n-1, m-1) c_m 2^{C(n-m,2)}`,
/// which splits off the component of vertex 0.
pub fn connected_count(k: usize) -> u128 {
    assert!((1..=12).contains(&k), "connected_count supports 1 <= k <= 12");
    let total = |n: usize| 1u128 << (n * (n - 1) / 2);
    let mut binom = vec![vec![0u128; k + 1]; k + 1];
    for n in 0..=k {
        binom[n][0] = 1;
        for m in 1..=n {
            binom[n][m] = binom[n - 1][m - 1] + if m < n { binom[n - 1][m] } else { 0 };
        }
    }
    let mut c = vec![0u128; k + 1];
    for n in 1..=k {
        let mut acc = total(n);
        for m in 1..n {
            acc -= binom[n - 1][m - 1] * c[m] * total(n - m);
        }
        c[n] = acc;
    }
    c[k]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    pub edges: Vec<(usize, usize)>,
}

impl SpanningTree {
    /// Breadth-first order from vertex 0 along tree edges (ascending
    /// neighbours), with each vertex's parent (`parent[0] = 0`).
    pub fn walk(&self, k: usize) -> (Vec<usize>, Vec<usize>) {
        let mut adj = vec![Vec::new(); k];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        let mut order = Vec::with_capacity(k);
        let mut parent = vec![usize::MAX; k];
        parent[0] = 0;
        let mut q = VecDeque::from([0]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    q.push_back(v);
                }
            }
        }
        (order, parent)
    }
}

/// Breadth-first spanning tree from vertex 0, lowest neighbours first. A
/// required edge is placed in the tree before the search starts.
pub fn spanning_tree(g: &LabeledGraph, required_edge: Option<(usize, usize)>) -> Result<SpanningTree> {
    let mut uf = UnionFind::new(g.k);
    let mut edges = Vec::with_capacity(g.k.saturating_sub(1));
    if let Some((a, b)) = required_edge {
        if !g.has_edge(a, b) {
            return Err(Error::input(format!("required edge ({a}, {b}) is not an edge of the graph")));
        }
        uf.union(a, b);
        edges.push((a.min(b), a.max(b)));
    }
    let adj = g.neighbours();
    let mut seen = vec![false; g.k];
    seen[0] = true;
    let mut q = VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if uf.union(u, v) {
                edges.push((u.min(v), u.max(v)));
            }
            if !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    assert_eq!(edges.len() + 1, g.k, "spanning_tree called on a disconnected graph");
    edges.sort_unstable();
    Ok(SpanningTree { edges })
}

/// A shell label in `1..=ℓ` for every edge, in the graph's edge order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeLabelling<'g> {
    pub graph: &'g LabeledGraph,
    pub labels: Vec<usize>,
}

impl EdgeLabelling<'_> {
    pub fn label(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.graph.edges.binary_search(&key).ok().map(|i| self.labels[i])
    }
}

/// Odometer over `[1, ℓ]^{|E|}`, last edge fastest.
pub struct EdgeLabellings<'g> {
    graph: &'g LabeledGraph,
    shells: usize,
    current: Option<Vec<usize>>,
}

impl<'g> Iterator for EdgeLabellings<'g> {
    type Item = EdgeLabelling<'g>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.current.take()?;
        let mut nxt = cur.clone();
        let mut advanced = false;
        for i in (0..nxt.len()).rev() {
            if nxt[i] < self.shells {
                nxt[i] += 1;
                advanced = true;
                break;
            }
            nxt[i] = 1;
        }
        if advanced {
            self.current = Some(nxt);
        }
        Some(EdgeLabelling { graph: self.graph, labels: cur })
    }
}

pub fn edge_labellings(g: &LabeledGraph, shells: usize) -> EdgeLabellings<'_> {
    assert!(shells >= 1, "at least one shell is required");
    EdgeLabellings { graph: g, shells, current: Some(vec![1; g.edge_count()]) }
}
