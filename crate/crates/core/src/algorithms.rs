//! Collaboration protocols: round-robin colME, message-passing B-colME,
//! consensus C-colME, and the oracle baseline.
//!
//! Every protocol reads an immutable per-step snapshot of agent statistics
//! ([`AgentView`]) and updates only its own state, so agent order within a
//! step never matters.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::{decide, AgentStats, Decision, FoldSet};
use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, MixingMatrix, PruneRecord};

/// What one agent publishes at the end of a sampling phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub stats: AgentStats,
    /// Half-width used for the mean and σ folds.
    pub half_width: f64,
    /// Samples seen so far.
    pub t: u64,
    /// Running sum of samples.
    pub sum: f64,
}

impl AgentView {
    pub fn local_mean(&self) -> f64 {
        self.stats.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "colme")]
    Colme,
    #[serde(rename = "b-colme")]
    BColme,
    #[serde(rename = "c-colme")]
    CColme,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Colme => "colme",
            Protocol::BColme => "b-colme",
            Protocol::CColme => "c-colme",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "colme" => Ok(Protocol::Colme),
            "b-colme" => Ok(Protocol::BColme),
            "c-colme" => Ok(Protocol::CColme),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// colME
// ---------------------------------------------------------------------------

/// Restricted round-robin over a candidate list: one query per agent per step.
#[derive(Debug, Clone)]
pub struct Colme {
    n: usize,
    lists: Vec<VecDeque<usize>>,
    /// `records[a * n + b]` = last `(sum, count)` that `a` accepted from `b`.
    records: Vec<(f64, f64)>,
    /// Per agent, the running totals over its records.
    totals: Vec<(f64, f64)>,
}

impl Colme {
    /// Agent `a` starts with the list `a+1, a+2, ..., a-1` (mod n).
    pub fn new(n: usize) -> Self {
        let lists = (0..n).map(|a| (1..n).map(|k| (a + k) % n).collect()).collect();
        Colme { n, lists, records: vec![(0.0, 0.0); n * n], totals: vec![(0.0, 0.0); n] }
    }

    pub fn candidates(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.lists[a].iter().copied()
    }

    pub fn list_len(&self, a: usize) -> usize {
        self.lists[a].len()
    }

    /// Candidate entries joining different classes, over the initial count.
    pub fn wrong_link_fraction(&self, class_of: &[usize]) -> f64 {
        let initial: usize = (0..self.n).map(|a| (0..self.n).filter(|&b| class_of[b] != class_of[a]).count()).sum();
        if initial == 0 {
            return 0.0;
        }
        let live: usize =
            (0..self.n).map(|a| self.lists[a].iter().filter(|&&b| class_of[b] != class_of[a]).count()).sum();
        live as f64 / initial as f64
    }

    /// One step in agent-index order. `prev` is the snapshot queried peers
    /// expose, `cur` the querying agents' own fresh statistics.
    pub fn step(
        &mut self,
        prev: &[AgentView],
        cur: &[AgentView],
        folds: FoldSet,
        kurtosis_width: Option<f64>,
        t: u64,
    ) -> Vec<PruneRecord> {
        let order: Vec<usize> = (0..self.n).collect();
        self.step_with_order(prev, cur, folds, kurtosis_width, t, &order)
    }

    /// As [`Colme::step`] but visiting agents in `order`; events come back
    /// sorted by agent so the result does not depend on the order.
    pub fn step_with_order(
        &mut self,
        prev: &[AgentView],
        cur: &[AgentView],
        folds: FoldSet,
        kurtosis_width: Option<f64>,
        t: u64,
        order: &[usize],
    ) -> Vec<PruneRecord> {
        let mut events = Vec::new();
        for &a in order {
            let Some(&b) = self.lists[a].front() else {
                continue;
            };
            let peer = &prev[b];
            if peer.t == 0 {
                continue;
            }
            let me = &cur[a];
            let old = self.records[a * self.n + b];
            match decide(&me.stats, me.half_width, &peer.stats, peer.half_width, folds, kurtosis_width) {
                Decision::Keep => {
                    let new = (peer.sum, peer.t as f64);
                    self.records[a * self.n + b] = new;
                    self.totals[a].0 += new.0 - old.0;
                    self.totals[a].1 += new.1 - old.1;
                    self.lists[a].rotate_left(1);
                }
                Decision::Prune(fold) => {
                    self.lists[a].pop_front();
                    self.records[a * self.n + b] = (0.0, 0.0);
                    self.totals[a].0 -= old.0;
                    self.totals[a].1 -= old.1;
                    events.push(PruneRecord { a, b, t, fold });
                }
            }
        }
        events.sort_by_key(|e| e.a);
        events
    }

    /// `Σ n x̄ / Σ n` over self and accepted records.
    pub fn estimate(&self, a: usize, me: &AgentView) -> f64 {
        let (s, c) = self.totals[a];
        let count = me.t as f64 + c;
        if count > 0.0 {
            (me.sum + s) / count
        } else {
            me.local_mean()
        }
    }
}

// ---------------------------------------------------------------------------
// B-colME
// ---------------------------------------------------------------------------

/// Depth-indexed `(sum, count)` rows for every directed live edge.
#[derive(Debug, Clone)]
pub struct Bcolme {
    depth: usize,
    weighted: bool,
    /// Messages delivered this step, `[slot * depth + k]`.
    msgs: Vec<[f64; 2]>,
    scratch: Vec<[f64; 2]>,
    /// Per-agent weighted sum of incoming rows, `[agent * depth + k]`.
    inbox: Vec<[f64; 2]>,
}

impl Bcolme {
    pub fn new(graph: &DynamicGraph, depth: usize, weighted: bool) -> Self {
        let len = 2 * graph.edge_count() * depth;
        Bcolme {
            depth,
            weighted,
            msgs: vec![[0.0; 2]; len],
            scratch: vec![[0.0; 2]; len],
            inbox: vec![[0.0; 2]; graph.n() * depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn slot(graph: &DynamicGraph, e: usize, from: usize) -> usize {
        let (u, _) = graph.endpoints(e);
        2 * e + usize::from(from != u)
    }

    fn edge_factor(&self, graph: &DynamicGraph, e: usize) -> f64 {
        if self.weighted {
            graph.weight(e)
        } else if graph.is_live(e) {
            1.0
        } else {
            0.0
        }
    }

    /// Rows of the message `from` most recently sent to `to`.
    pub fn message(&self, graph: &DynamicGraph, from: usize, to: usize) -> Option<&[[f64; 2]]> {
        let e = graph.edge_between(from, to)?;
        let s = Self::slot(graph, e, from) * self.depth;
        Some(&self.msgs[s..s + self.depth])
    }

    /// Builds step-`t` messages: row 1 is the sender's own `(sum, t)`, row
    /// `k` forwards row `k-1` of what the sender's other neighbours sent it
    /// at `t-1`.
    pub fn exchange(&mut self, graph: &DynamicGraph, sums: &[f64], t: u64) {
        let d = self.depth;
        if d == 0 {
            return;
        }
        self.scratch.iter_mut().for_each(|r| *r = [0.0; 2]);
        self.inbox.iter_mut().for_each(|r| *r = [0.0; 2]);
        for a in 0..graph.n() {
            for (w, e) in graph.live_neighbors(a) {
                let f = self.edge_factor(graph, e);
                let inc = Self::slot(graph, e, w) * d;
                for k in 0..d - 1 {
                    let row = self.msgs[inc + k];
                    self.inbox[a * d + k][0] += f * row[0];
                    self.inbox[a * d + k][1] += f * row[1];
                }
            }
        }
        // Message s -> r is everything s heard minus what r itself sent.
        for e in graph.live_edges() {
            let (u, v) = graph.endpoints(e);
            let f = self.edge_factor(graph, e);
            for (s, r) in [(u, v), (v, u)] {
                let base = Self::slot(graph, e, s) * d;
                let back = Self::slot(graph, e, r) * d;
                self.scratch[base] = [sums[s], t as f64];
                for k in 1..d {
                    let total = self.inbox[s * d + k - 1];
                    let own = self.msgs[back + k - 1];
                    self.scratch[base + k] = [total[0] - f * own[0], total[1] - f * own[1]];
                }
            }
        }
        std::mem::swap(&mut self.msgs, &mut self.scratch);
    }

    /// Incoming `(Σ sum, Σ count)` over live neighbours and all rows.
    pub fn aggregate(&self, graph: &DynamicGraph, a: usize) -> (f64, f64) {
        let d = self.depth;
        let (mut s, mut c) = (0.0, 0.0);
        for (b, e) in graph.live_neighbors(a) {
            let f = self.edge_factor(graph, e);
            let base = Self::slot(graph, e, b) * d;
            for row in &self.msgs[base..base + d] {
                s += f * row[0];
                c += f * row[1];
            }
        }
        (s, c)
    }

    /// `(m_a + Σ sums) / (t + Σ counts)`, or the local mean if nothing is known.
    pub fn estimate(&self, graph: &DynamicGraph, a: usize, me: &AgentView) -> f64 {
        let (s, c) = self.aggregate(graph, a);
        let count = me.t as f64 + c;
        if count > 0.0 {
            (me.sum + s) / count
        } else {
            me.local_mean()
        }
    }
}

/// Agents within `d` hops of a node in an `r`-regular tree, itself included.
pub fn bcolme_reach(r: usize, d: usize) -> f64 {
    let r = r as f64;
    match r {
        _ if r < 1.0 || d == 0 => 1.0,
        _ if r == 1.0 => 2.0,
        _ if r == 2.0 => 1.0 + 2.0 * d as f64,
        _ => 1.0 + r * ((r - 1.0).powi(d as i32) - 1.0) / (r - 2.0),
    }
}

/// Reference MSE `σ² / (n_d t)` for B-colME at depth `d` on an `r`-regular
/// same-class neighbourhood.
pub fn bcolme_reference_mse(sigma2: f64, r: usize, d: usize, t: f64) -> f64 {
    sigma2 / (bcolme_reach(r, d) * t)
}

// ---------------------------------------------------------------------------
// C-colME
// ---------------------------------------------------------------------------

/// `0` up to `t_s`, then `(t - t_s) / (t - t_s + k)`.
pub fn alpha_schedule(t: u64, t_s: u64, k: f64) -> f64 {
    if t <= t_s {
        0.0
    } else {
        let s = (t - t_s) as f64;
        s / (s + k)
    }
}

/// `(1-α) x + α W μ`.
pub fn ccolme_step(x: &[f64], mu: &[f64], w: &MixingMatrix, graph: &DynamicGraph, alpha: f64) -> Result<Vec<f64>> {
    let n = graph.n();
    for len in [x.len(), mu.len(), w.diag.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mixed = w.apply(graph, mu);
    Ok(x.iter().zip(mixed).map(|(xi, mi)| (1.0 - alpha) * xi + alpha * mi).collect())
}

#[derive(Debug, Clone)]
pub struct Ccolme {
    mu: Vec<f64>,
    t_s: u64,
    k: f64,
    weighted: bool,
}

impl Ccolme {
    pub fn new(t_s: u64, k: f64, weighted: bool) -> Self {
        Ccolme { mu: Vec::new(), t_s, k, weighted }
    }

    pub fn estimates(&self) -> &[f64] {
        &self.mu
    }

    /// Mixes the current local means `x` into the consensus vector.
    pub fn step(&mut self, graph: &DynamicGraph, x: &[f64], t: u64) -> Result<&[f64]> {
        let alpha = alpha_schedule(t, self.t_s, self.k);
        if self.mu.is_empty() || alpha == 0.0 {
            self.mu = x.to_vec();
        } else {
            let w =
                if self.weighted { MixingMatrix::weighted_metropolis(graph) } else { MixingMatrix::metropolis(graph) };
            self.mu = ccolme_step(x, &self.mu, &w, graph, alpha)?;
        }
        Ok(&self.mu)
    }
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// Per agent, the average local mean over its true class.
pub fn oracle_estimate(local_means: &[f64], class_of: &[usize]) -> Vec<f64> {
    let n_classes = class_of.iter().max().map_or(0, |m| m + 1);
    let mut sum = vec![0.0; n_classes];
    let mut count = vec![0usize; n_classes];
    for (&x, &c) in local_means.iter().zip(class_of) {
        sum[c] += x;
        count[c] += 1;
    }
    class_of.iter().map(|&c| sum[c] / count[c] as f64).collect()
}
