use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algorithms::{oracle_estimate, AgentView, Bcolme, Ccolme, Colme, Protocol};
use crate::confidence::{active_kurtosis_width, decide, weight, AgentStats, BoundConfig, Decision, Fold};
use crate::distributions::{agent_rng, stream_seed, ClassSpec, GRAPH_STREAM};
use crate::error::Result;
use crate::graph::{generate_random_regular, DynamicGraph};
use crate::moments::{pooled_sigma, MomentAccumulator, SIGMA_SENTINEL};

use super::config::{ScenarioConfig, SigmaMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneEvent {
    pub realization: usize,
    pub t: u64,
    pub a: usize,
    pub b: usize,
    pub class_a: usize,
    pub class_b: usize,
    pub fold: Fold,
}

impl PruneEvent {
    pub fn cross_class(&self) -> bool {
        self.class_a != self.class_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    pub t: u64,
    pub mse_local: f64,
    pub mse_collab: f64,
    pub mse_oracle: f64,
    pub wrong_link_fraction: f64,
}

enum State {
    Colme(Colme),
    B(Bcolme),
    C(Ccolme),
}

/// One realization of a scenario, advanced a step at a time.
pub struct Engine {
    realization: usize,
    bounds: BoundConfig,
    sigma_mode: SigmaMode,
    t_s: u64,
    reconnection: bool,
    weighting: bool,
    classes: Vec<ClassSpec>,
    class_of: Vec<usize>,
    rngs: Vec<ChaCha8Rng>,
    accs: Vec<MomentAccumulator>,
    graph: Option<DynamicGraph>,
    state: State,
    views: Vec<AgentView>,
    frozen_sigma: Option<Vec<f64>>,
    estimates: Vec<f64>,
    events: Vec<PruneEvent>,
    t: u64,
}

impl Engine {
    pub fn new(cfg: &ScenarioConfig, realization: usize) -> Result<Self> {
        let n = cfg.n_agents;
        let class_of = cfg.class_assignment();
        let classes = cfg.class_specs();
        let rngs = (0..n).map(|a| agent_rng(cfg.master_seed, realization as u64, a)).collect();
        let accs = vec![MomentAccumulator::new(cfg.difference_mode); n];
        let (graph, state) = match cfg.protocol {
            Protocol::Colme => (None, State::Colme(Colme::new(n))),
            p => {
                let seed = stream_seed(cfg.master_seed, realization as u64, GRAPH_STREAM);
                let g = generate_random_regular(n, cfg.r, seed)?;
                let state = if p == Protocol::BColme {
                    State::B(Bcolme::new(&g, cfg.depth, cfg.weighting))
                } else {
                    State::C(Ccolme::new(cfg.t_s, cfg.alpha_k, cfg.weighting))
                };
                (Some(g), state)
            }
        };
        let empty = AgentView {
            stats: AgentStats { mean: 0.0, sigma: SIGMA_SENTINEL, kappa: None },
            half_width: f64::INFINITY,
            t: 0,
            sum: 0.0,
        };
        Ok(Engine {
            realization,
            bounds: cfg.bound_config(),
            sigma_mode: cfg.sigma_mode,
            t_s: cfg.t_s,
            reconnection: cfg.reconnection,
            weighting: cfg.weighting,
            classes,
            class_of,
            rngs,
            accs,
            graph,
            state,
            views: vec![empty; n],
            frozen_sigma: None,
            estimates: vec![0.0; n],
            events: Vec::new(),
            t: 0,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn graph(&self) -> Option<&DynamicGraph> {
        self.graph.as_ref()
    }

    pub fn views(&self) -> &[AgentView] {
        &self.views
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn accumulators(&self) -> &[MomentAccumulator] {
        &self.accs
    }

    pub fn events(&self) -> &[PruneEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<PruneEvent> {
        std::mem::take(&mut self.events)
    }

    /// Local σ̂ of every agent, `NaN` where undefined.
    pub fn sigma_local(&self) -> Vec<f64> {
        self.accs.iter().map(|a| a.sigma_local().unwrap_or(f64::NAN)).collect()
    }

    /// Local κ̂ of every agent, `NaN` where undefined.
    pub fn kurtosis_local(&self) -> Vec<f64> {
        self.accs.iter().map(|a| a.kurtosis_local().unwrap_or(f64::NAN)).collect()
    }

    pub fn wrong_link_fraction(&self) -> f64 {
        match (&self.state, &self.graph) {
            (State::Colme(c), _) => c.wrong_link_fraction(&self.class_of),
            (_, Some(g)) => g.wrong_link_fraction(&self.class_of),
            _ => 0.0,
        }
    }

    fn sigma_for_widths(&mut self, t: u64) -> Vec<f64> {
        let n = self.accs.len();
        match self.sigma_mode {
            SigmaMode::Known => self.class_of.iter().map(|&c| self.classes[c].sigma).collect(),
            _ if t <= self.t_s => vec![SIGMA_SENTINEL; n],
            SigmaMode::Local => self.accs.iter().map(|a| a.sigma_local().unwrap_or(SIGMA_SENTINEL)).collect(),
            SigmaMode::Collaborative => {
                if self.frozen_sigma.is_none() {
                    let frozen = (0..n)
                        .map(|a| {
                            let pool: Vec<usize> = match &self.graph {
                                Some(g) => {
                                    std::iter::once(a).chain(g.initial_neighbors(a).iter().map(|&(b, _)| b)).collect()
                                }
                                None => (0..n).collect(),
                            };
                            let s2: f64 = pool.iter().map(|&b| self.accs[b].sum_d2).sum();
                            let nd: u64 = pool.iter().map(|&b| self.accs[b].n_diff).sum();
                            pooled_sigma(s2, nd).unwrap_or(SIGMA_SENTINEL)
                        })
                        .collect();
                    self.frozen_sigma = Some(frozen);
                }
                self.frozen_sigma.clone().unwrap_or_default()
            }
        }
    }

    /// Samples, refreshes statistics, runs the protocol, and reports errors.
    pub fn step(&mut self) -> Result<StepMetrics> {
        self.t += 1;
        let t = self.t;
        for (a, acc) in self.accs.iter_mut().enumerate() {
            let x = self.classes[self.class_of[a]].sample(&mut self.rngs[a]);
            acc.push(x);
        }
        let sigmas = self.sigma_for_widths(t);
        let need_kappa =
            self.bounds.folds.kurtosis || self.bounds.bound_kind == crate::confidence::BoundKind::FourthMoment;
        let prev = std::mem::take(&mut self.views);
        let mut views = Vec::with_capacity(self.accs.len());
        for (acc, &sigma) in self.accs.iter().zip(&sigmas) {
            let kappa = if need_kappa { acc.kurtosis_local().ok() } else { None };
            views.push(AgentView {
                stats: AgentStats { mean: acc.local_mean(), sigma, kappa },
                half_width: self.bounds.mean_half_width(sigma, kappa, t)?,
                t,
                sum: acc.local_sum(),
            });
        }
        self.views = views;
        let kw = active_kurtosis_width(&self.bounds, t);
        let folds = self.bounds.folds;

        match &mut self.state {
            State::Colme(c) => {
                for e in c.step(&prev, &self.views, folds, kw, t) {
                    self.events.push(PruneEvent {
                        realization: self.realization,
                        t,
                        a: e.a,
                        b: e.b,
                        class_a: self.class_of[e.a],
                        class_b: self.class_of[e.b],
                        fold: e.fold,
                    });
                }
                for a in 0..self.views.len() {
                    self.estimates[a] = c.estimate(a, &self.views[a]);
                }
            }
            State::B(_) | State::C(_) => {
                let g = self.graph.as_mut().expect("graph protocols own a graph");
                let views = &self.views;
                let live: Vec<usize> = g.live_edges().collect();
                for e in live {
                    let (a, b) = g.endpoints(e);
                    let (va, vb) = (&views[a], &views[b]);
                    if let Decision::Prune(fold) = decide(&va.stats, va.half_width, &vb.stats, vb.half_width, folds, kw)
                    {
                        g.prune_edge(e, t, fold)?;
                        self.events.push(PruneEvent {
                            realization: self.realization,
                            t,
                            a,
                            b,
                            class_a: self.class_of[a],
                            class_b: self.class_of[b],
                            fold,
                        });
                    }
                }
                if self.reconnection {
                    g.apply_reconnect(|a, b| {
                        let (va, vb) = (&views[a], &views[b]);
                        decide(&va.stats, va.half_width, &vb.stats, vb.half_width, folds, kw).is_keep()
                    });
                }
                if self.weighting {
                    let live: Vec<usize> = g.live_edges().collect();
                    for e in live {
                        let (a, b) = g.endpoints(e);
                        let (va, vb) = (&views[a], &views[b]);
                        g.set_weight(e, weight(&va.stats, va.half_width, &vb.stats, vb.half_width, folds, kw));
                    }
                }
                match &mut self.state {
                    State::B(b) => {
                        let sums: Vec<f64> = views.iter().map(|v| v.sum).collect();
                        b.exchange(g, &sums, t);
                        for (a, (est, view)) in self.estimates.iter_mut().zip(views.iter()).enumerate() {
                            *est = b.estimate(g, a, view);
                        }
                    }
                    State::C(c) => {
                        let x: Vec<f64> = views.iter().map(AgentView::local_mean).collect();
                        self.estimates.copy_from_slice(c.step(g, &x, t)?);
                    }
                    State::Colme(_) => unreachable!(),
                }
            }
        }
        Ok(self.metrics())
    }

    fn metrics(&self) -> StepMetrics {
        let local: Vec<f64> = self.views.iter().map(AgentView::local_mean).collect();
        let oracle = oracle_estimate(&local, &self.class_of);
        let n = local.len() as f64;
        let mse = |v: &[f64]| -> f64 {
            v.iter().zip(&self.class_of).map(|(x, &c)| (x - self.classes[c].mean).powi(2)).sum::<f64>() / n
        };
        StepMetrics {
            t: self.t,
            mse_local: mse(&local),
            mse_collab: mse(&self.estimates),
            mse_oracle: mse(&oracle),
            wrong_link_fraction: self.wrong_link_fraction(),
        }
    }
}
