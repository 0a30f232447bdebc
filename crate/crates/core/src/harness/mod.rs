//! Scenario execution: many independent realizations, aggregated into
//! per-step metrics, bootstrap bands, histograms, and on-disk artifacts.

mod config;
mod engine;
mod output;
pub mod stats;

use std::collections::BTreeMap;

use serde::Serialize;

pub use config::{BoundsSection, ClassEntry, ScenarioConfig, SigmaMode};
pub use engine::{Engine, PruneEvent, StepMetrics};
pub use output::write_outputs;

use crate::confidence::Fold;
use crate::distributions::{stream_seed, BOOTSTRAP_STREAM};
use crate::error::Result;
use crate::separation::{separation_table, SeparationTable};

/// σ̂ and κ̂ of every agent at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: u64,
    pub sigma: Vec<f64>,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSnapshot {
    pub t: u64,
    /// Live edges as `(a, b, weight)`.
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    pub metrics: Vec<StepMetrics>,
    pub events: Vec<PruneEvent>,
    pub snapshots: Vec<Snapshot>,
    pub graphs: Vec<GraphSnapshot>,
}

/// Runs realization `r` of `cfg` to the horizon.
pub fn run_realization(cfg: &ScenarioConfig, r: usize) -> Result<RealizationOutput> {
    let mut engine = Engine::new(cfg, r)?;
    let mut metrics = Vec::with_capacity(cfg.horizon as usize);
    let mut snapshots = Vec::new();
    let mut graphs = Vec::new();
    for _ in 0..cfg.horizon {
        let m = engine.step()?;
        metrics.push(m);
        if cfg.checkpoints.contains(&m.t) {
            snapshots.push(Snapshot { t: m.t, sigma: engine.sigma_local(), kappa: engine.kurtosis_local() });
            if let Some(g) = engine.graph() {
                let edges = g
                    .live_edges()
                    .map(|e| {
                        let (a, b) = g.endpoints(e);
                        (a, b, g.weight(e))
                    })
                    .collect();
                graphs.push(GraphSnapshot { t: m.t, edges });
            }
        }
    }
    Ok(RealizationOutput { metrics, events: engine.take_events(), snapshots, graphs })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for realizations; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// Per-step metrics averaged over agents and realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSeries {
    pub t: Vec<u64>,
    pub mse_local: Vec<f64>,
    pub mse_collab: Vec<f64>,
    pub mse_oracle: Vec<f64>,
    pub wrong_link_fraction: Vec<f64>,
    pub band_collab: Option<(Vec<f64>, Vec<f64>)>,
    pub band_oracle: Option<(Vec<f64>, Vec<f64>)>,
    pub band_local: Option<(Vec<f64>, Vec<f64>)>,
}

impl MetricsSeries {
    /// First `t` from which `mse_collab <= ratio * mse_oracle` holds through
    /// the horizon.
    pub fn oracle_region_entry(&self, ratio: f64) -> Option<u64> {
        let mut entry = None;
        for i in (0..self.t.len()).rev() {
            if self.mse_collab[i] <= ratio * self.mse_oracle[i] {
                entry = Some(self.t[i]);
            } else {
                break;
            }
        }
        entry
    }

    pub fn at(&self, t: u64) -> Option<usize> {
        self.t.iter().position(|&x| x == t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub warnings: Vec<String>,
    pub series: MetricsSeries,
    pub realizations: Vec<RealizationOutput>,
    pub separation: Option<SeparationTable>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    run_scenario_with(cfg, RunOptions::default())
}

#[cfg(feature = "parallel")]
fn run_all(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<RealizationOutput>> {
    use rayon::prelude::*;
    let job = || (0..cfg.realizations).into_par_iter().map(|r| run_realization(cfg, r)).collect();
    match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| crate::error::Error::Config(e.to_string()))?
            .install(job),
        None => job(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_all(cfg: &ScenarioConfig, _opts: RunOptions) -> Result<Vec<RealizationOutput>> {
    (0..cfg.realizations).map(|r| run_realization(cfg, r)).collect()
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: RunOptions) -> Result<ScenarioResult> {
    let warnings = cfg.validate()?;
    for w in &warnings {
        log::warn!("{}: {w}", cfg.name);
    }
    log::info!("{}: {} realizations of {} steps", cfg.name, cfg.realizations, cfg.horizon);
    let realizations = run_all(cfg, opts)?;
    let series = aggregate(cfg, &realizations)?;
    let separation =
        if cfg.classes.len() >= 2 { Some(separation_table(&cfg.class_specs(), &cfg.bound_config())?) } else { None };
    Ok(ScenarioResult { config: cfg.clone(), warnings, series, realizations, separation })
}

fn aggregate(cfg: &ScenarioConfig, runs: &[RealizationOutput]) -> Result<MetricsSeries> {
    let steps = runs.first().map_or(0, |r| r.metrics.len());
    let field = |f: fn(&StepMetrics) -> f64| -> Vec<Vec<f64>> {
        runs.iter().map(|r| r.metrics.iter().map(f).collect()).collect()
    };
    let mean = |rows: &[Vec<f64>]| -> Vec<f64> {
        (0..steps).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64).collect()
    };
    let local = field(|m| m.mse_local);
    let collab = field(|m| m.mse_collab);
    let oracle = field(|m| m.mse_oracle);
    let wrong = field(|m| m.wrong_link_fraction);
    let seed = stream_seed(cfg.master_seed, 0, BOOTSTRAP_STREAM);
    let band = |rows: &[Vec<f64>]| -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        if rows.len() < 2 {
            return Ok(None);
        }
        stats::bootstrap_band(rows, cfg.bootstrap_resamples.max(1), cfg.bootstrap_level, seed).map(Some)
    };
    Ok(MetricsSeries {
        t: (1..=steps as u64).collect(),
        mse_local: mean(&local),
        mse_collab: mean(&collab),
        mse_oracle: mean(&oracle),
        wrong_link_fraction: mean(&wrong),
        band_collab: band(&collab)?,
        band_oracle: band(&oracle)?,
        band_local: band(&local)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldStats {
    pub count: usize,
    pub cross_class: usize,
    /// Mean step of the cross-class prunes.
    pub mean_cross_class_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFoldStats {
    pub class_a: String,
    pub class_b: String,
    pub fold: Fold,
    pub count: usize,
    pub mean_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub protocol: String,
    pub realizations: usize,
    pub horizon: u64,
    pub final_mse_local: f64,
    pub final_mse_collab: f64,
    pub final_mse_oracle: f64,
    pub final_wrong_link_fraction: f64,
    /// First step from which the collaborative MSE stays within 2x oracle.
    pub oracle_region_entry: Option<u64>,
    pub prune_events: usize,
    pub folds: BTreeMap<String, FoldStats>,
    pub class_pairs: Vec<PairFoldStats>,
    pub separation: Option<SeparationTable>,
    pub warnings: Vec<String>,
    pub config: ScenarioConfig,
}

impl ScenarioResult {
    pub fn events(&self) -> impl Iterator<Item = &PruneEvent> {
        self.realizations.iter().flat_map(|r| r.events.iter())
    }

    /// Share of prune events (all realizations) attributed to `fold`.
    pub fn fold_share(&self, fold: Fold) -> f64 {
        let (mut hit, mut all) = (0usize, 0usize);
        for e in self.events() {
            all += 1;
            hit += usize::from(e.fold == fold);
        }
        if all == 0 {
            0.0
        } else {
            hit as f64 / all as f64
        }
    }

    pub fn summary(&self) -> Summary {
        let s = &self.series;
        let last = s.t.len().saturating_sub(1);
        let pick = |v: &[f64]| v.get(last).copied().unwrap_or(f64::NAN);
        let mut folds = BTreeMap::new();
        for fold in Fold::ALL {
            let evs: Vec<&PruneEvent> = self.events().filter(|e| e.fold == fold).collect();
            let cross: Vec<f64> = evs.iter().filter(|e| e.cross_class()).map(|e| e.t as f64).collect();
            folds.insert(
                fold.to_string(),
                FoldStats {
                    count: evs.len(),
                    cross_class: cross.len(),
                    mean_cross_class_t: (!cross.is_empty()).then(|| cross.iter().sum::<f64>() / cross.len() as f64),
                },
            );
        }
        let mut pairs: BTreeMap<(usize, usize, Fold), (usize, f64)> = BTreeMap::new();
        for e in self.events().filter(|e| e.cross_class()) {
            let key = (e.class_a.min(e.class_b), e.class_a.max(e.class_b), e.fold);
            let entry = pairs.entry(key).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += e.t as f64;
        }
        let labels: Vec<&str> = self.config.classes.iter().map(|c| c.label.as_str()).collect();
        let class_pairs = pairs
            .into_iter()
            .map(|((a, b, fold), (count, total))| PairFoldStats {
                class_a: labels[a].to_string(),
                class_b: labels[b].to_string(),
                fold,
                count,
                mean_t: total / count as f64,
            })
            .collect();
        Summary {
            name: self.config.name.clone(),
            protocol: self.config.protocol.to_string(),
            realizations: self.config.realizations,
            horizon: self.config.horizon,
            final_mse_local: pick(&s.mse_local),
            final_mse_collab: pick(&s.mse_collab),
            final_mse_oracle: pick(&s.mse_oracle),
            final_wrong_link_fraction: pick(&s.wrong_link_fraction),
            oracle_region_entry: s.oracle_region_entry(2.0),
            prune_events: self.events().count(),
            folds,
            class_pairs,
            separation: self.separation.clone(),
            warnings: self.warnings.clone(),
            config: self.config.clone(),
        }
    }
}
