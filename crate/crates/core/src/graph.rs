//! Time-varying communication graph.
//!
//! Edges are fixed at construction; afterwards they can only be pruned or
//! restored, never invented. Each edge carries a kernel weight in `[0, 1]`
//! that is meaningful only while the edge is live.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::confidence::Fold;
use crate::error::{Error, Result};

pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneRecord {
    pub a: usize,
    pub b: usize,
    pub t: u64,
    pub fold: Fold,
}

#[derive(Debug, Clone)]
pub struct DynamicGraph {
    n: usize,
    /// Endpoints with `u < v`.
    edges: Vec<(usize, usize)>,
    /// Per node, `(neighbour, edge)` sorted by neighbour, over the initial graph.
    adjacency: Vec<Vec<(usize, EdgeId)>>,
    live: Vec<bool>,
    weights: Vec<f64>,
    pruned: Vec<Option<PruneRecord>>,
    degree: Vec<usize>,
}

impl DynamicGraph {
    /// Builds a graph from an undirected edge list; rejects loops and duplicates.
    pub fn from_edges(n: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(edge_list.len());
        for (id, &(a, b)) in edge_list.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::Infeasible(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::Infeasible(format!("self-loop at {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            edges.push((u, v));
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Infeasible("duplicate edge".into()));
            }
        }
        let degree = adjacency.iter().map(Vec::len).collect();
        let m = edges.len();
        Ok(DynamicGraph {
            n,
            edges,
            adjacency,
            live: vec![true; m],
            weights: vec![1.0; m],
            pruned: vec![None; m],
            degree,
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self::from_edges(n, &edges).expect("complete graph is simple")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn live_edge_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }

    pub fn endpoints(&self, e: EdgeId) -> (usize, usize) {
        self.edges[e]
    }

    pub fn is_live(&self, e: EdgeId) -> bool {
        self.live[e]
    }

    pub fn weight(&self, e: EdgeId) -> f64 {
        if self.live[e] {
            self.weights[e]
        } else {
            0.0
        }
    }

    pub fn set_weight(&mut self, e: EdgeId, w: f64) {
        self.weights[e] = w.clamp(0.0, 1.0);
    }

    pub fn degree(&self, a: usize) -> usize {
        self.degree[a]
    }

    pub fn weighted_degree(&self, a: usize) -> f64 {
        self.live_neighbors(a).map(|(_, e)| self.weights[e]).sum()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<EdgeId> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(v, _)| v).ok().map(|i| list[i].1)
    }

    pub fn has_live_edge(&self, a: usize, b: usize) -> bool {
        self.edge_between(a, b).is_some_and(|e| self.live[e])
    }

    /// Neighbours in the initial graph, live or not.
    pub fn initial_neighbors(&self, a: usize) -> &[(usize, EdgeId)] {
        &self.adjacency[a]
    }

    pub fn live_neighbors(&self, a: usize) -> impl Iterator<Item = (usize, EdgeId)> + '_ {
        self.adjacency[a].iter().copied().filter(move |&(_, e)| self.live[e])
    }

    pub fn live_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).filter(move |&e| self.live[e])
    }

    pub fn pruned_edges(&self) -> impl Iterator<Item = (EdgeId, &PruneRecord)> + '_ {
        self.pruned.iter().enumerate().filter_map(|(e, r)| r.as_ref().map(|r| (e, r)))
    }

    pub fn prune_edge(&mut self, e: EdgeId, t: u64, fold: Fold) -> Result<PruneRecord> {
        let (a, b) = self.edges[e];
        if !self.live[e] {
            return Err(Error::NoSuchEdge(a, b));
        }
        self.live[e] = false;
        self.degree[a] -= 1;
        self.degree[b] -= 1;
        let record = PruneRecord { a, b, t, fold };
        self.pruned[e] = Some(record);
        Ok(record)
    }

    pub fn apply_prune(&mut self, a: usize, b: usize, t: u64, fold: Fold) -> Result<PruneRecord> {
        let e = self.edge_between(a, b).ok_or(Error::NoSuchEdge(a, b))?;
        self.prune_edge(e, t, fold)
    }

    /// Restores every pruned edge whose endpoints satisfy `predicate`.
    pub fn apply_reconnect<F: FnMut(usize, usize) -> bool>(&mut self, mut predicate: F) -> Vec<EdgeId> {
        let mut restored = Vec::new();
        for e in 0..self.edges.len() {
            if self.live[e] {
                continue;
            }
            let (a, b) = self.edges[e];
            if predicate(a, b) {
                self.live[e] = true;
                self.pruned[e] = None;
                self.weights[e] = 1.0;
                self.degree[a] += 1;
                self.degree[b] += 1;
                restored.push(e);
            }
        }
        restored
    }

    /// Live inter-class edges over inter-class edges of the initial graph.
    pub fn wrong_link_fraction(&self, class_of: &[usize]) -> f64 {
        let (mut live, mut initial) = (0usize, 0usize);
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if class_of[a] != class_of[b] {
                initial += 1;
                if self.live[e] {
                    live += 1;
                }
            }
        }
        if initial == 0 {
            0.0
        } else {
            live as f64 / initial as f64
        }
    }

    /// Live edges as `a,b,weight` rows.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "weight"])?;
        for e in self.live_edges() {
            let (a, b) = self.edges[e];
            w.write_record([a.to_string(), b.to_string(), self.weights[e].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Connected components of the live graph, as a label per node.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for (v, _) in self.live_neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Restarts allowed before regular-graph generation gives up.
pub const MAX_REGULAR_RESTARTS: usize = 1000;

/// Uniform-ish random `r`-regular simple graph on `n` nodes.
///
/// Stubs are paired one random pair at a time, rejecting pairs that would
/// create a loop or a multi-edge; a dead end (no admissible pair left)
/// restarts the whole pairing.
pub fn generate_random_regular(n: usize, r: usize, seed: u64) -> Result<DynamicGraph> {
    if r >= n && !(n == 0 && r == 0) {
        return Err(Error::Infeasible(format!("degree r={r} must be below n={n}")));
    }
    if (n * r) % 2 == 1 {
        return Err(Error::Infeasible(format!("n*r = {} must be even", n * r)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REGULAR_RESTARTS {
        if let Some(edges) = try_pairing(n, r, &mut rng) {
            return DynamicGraph::from_edges(n, &edges);
        }
    }
    Err(Error::RetryExhausted(MAX_REGULAR_RESTARTS))
}

fn try_pairing<R: Rng>(n: usize, r: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, r)).collect();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::with_capacity(r); n];
    let mut edges = Vec::with_capacity(n * r / 2);
    let admissible = |u: usize, v: usize, nb: &[Vec<usize>]| u != v && !nb[u].contains(&v);
    while !stubs.is_empty() {
        let len = stubs.len();
        let mut found = None;
        for _ in 0..(4 * len).max(64) {
            let i = rng.random_range(0..len);
            let j = rng.random_range(0..len);
            if i != j && admissible(stubs[i], stubs[j], &neighbors) {
                found = Some((i, j));
                break;
            }
        }
        if found.is_none() {
            let pairs: Vec<(usize, usize)> = (0..len)
                .flat_map(|i| (i + 1..len).map(move |j| (i, j)))
                .filter(|&(i, j)| admissible(stubs[i], stubs[j], &neighbors))
                .collect();
            if pairs.is_empty() {
                return None;
            }
            found = Some(pairs[rng.random_range(0..pairs.len())]);
        }
        let (i, j) = found.unwrap();
        let (u, v) = (stubs[i], stubs[j]);
        neighbors[u].push(v);
        neighbors[v].push(u);
        edges.push((u, v));
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        stubs.swap_remove(hi);
        stubs.swap_remove(lo);
    }
    Some(edges)
}

/// Symmetric doubly stochastic mixing matrix supported on the live graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub diag: Vec<f64>,
    /// Off-diagonal entry per edge id (zero for dead edges).
    pub off: Vec<f64>,
}

impl MixingMatrix {
    /// `W_ij = 1/(max(D_i, D_j) + 1)` on live edges, diagonal completes rows.
    pub fn metropolis(graph: &DynamicGraph) -> Self {
        Self::build(graph, |_| 1.0, |a| graph.degree(a) as f64)
    }

    /// Metropolis rule over kernel weights: `AW_ij / (max(Dw_i, Dw_j) + 1)`.
    pub fn weighted_metropolis(graph: &DynamicGraph) -> Self {
        let wdeg: Vec<f64> = (0..graph.n()).map(|a| graph.weighted_degree(a)).collect();
        Self::build(graph, |e| graph.weights[e], |a| wdeg[a])
    }

    fn build(graph: &DynamicGraph, weight: impl Fn(EdgeId) -> f64, degree: impl Fn(usize) -> f64) -> Self {
        let mut off = vec![0.0; graph.edge_count()];
        let mut row = vec![0.0; graph.n()];
        for e in graph.live_edges() {
            let (a, b) = graph.endpoints(e);
            let w = weight(e) / (degree(a).max(degree(b)) + 1.0);
            off[e] = w;
            row[a] += w;
            row[b] += w;
        }
        let diag = row.iter().map(|s| 1.0 - s).collect();
        MixingMatrix { diag, off }
    }

    pub fn apply(&self, graph: &DynamicGraph, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for e in graph.live_edges() {
            let (a, b) = graph.endpoints(e);
            out[a] += self.off[e] * v[b];
            out[b] += self.off[e] * v[a];
        }
        out
    }

    pub fn to_dense(&self, graph: &DynamicGraph) -> Vec<Vec<f64>> {
        let n = graph.n();
        let mut m = vec![vec![0.0; n]; n];
        for (i, d) in self.diag.iter().enumerate() {
            m[i][i] = *d;
        }
        for e in graph.live_edges() {
            let (a, b) = graph.endpoints(e);
            m[a][b] = self.off[e];
            m[b][a] = self.off[e];
        }
        m
    }
}

pub fn metropolis_weights(graph: &DynamicGraph) -> MixingMatrix {
    MixingMatrix::metropolis(graph)
}
