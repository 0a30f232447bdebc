//! Browser bindings. Each export takes plain values and returns JSON, so the
//! page needs no glue beyond `JSON.parse`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use colme::confidence::{gaussian_bound, kurtosis_bound, laplace_bound};
use colme::harness::{run_realization, ScenarioConfig};
use colme::presets::preset;
use colme::separation::separation_table;
use colme::{BoundConfig, ClassSpec, Fold};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
struct TableRequest {
    classes: Vec<ClassSpec>,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default = "default_z")]
    z_delta: f64,
}

fn default_delta() -> f64 {
    0.01
}

fn default_z() -> f64 {
    colme::confidence::DEFAULT_Z_KURTOSIS
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Pairwise separation table for classes given as
/// `{"classes": [{label, mean, sigma, family}], "delta", "z_delta"}`.
pub fn separation_table_json(request: &str) -> Result<String, String> {
    let req: TableRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    for c in &req.classes {
        c.validate().map_err(|e| e.to_string())?;
    }
    let cfg = BoundConfig { delta: req.delta, z_delta_kurtosis: req.z_delta, ..Default::default() };
    let table = separation_table(&req.classes, &cfg).map_err(|e| e.to_string())?;
    to_json(&table)
}

#[derive(Serialize)]
struct Curves {
    t: Vec<f64>,
    laplace: Vec<f64>,
    gaussian: Vec<f64>,
    kurtosis: Vec<f64>,
}

/// Half-widths on a log-spaced grid of `points` steps in `[2, t_max]`.
pub fn bound_curves_json(sigma: f64, delta: f64, z_delta: f64, t_max: f64, points: usize) -> Result<String, String> {
    if !(t_max > 2.0) || points < 2 {
        return Err("need t_max > 2 and at least 2 points".into());
    }
    let ratio = (t_max / 2.0).ln() / (points - 1) as f64;
    let t: Vec<f64> = (0..points).map(|i| (2.0 * (ratio * i as f64).exp()).round()).collect();
    let err = |e: colme::Error| e.to_string();
    to_json(&Curves {
        laplace: t.iter().map(|&x| laplace_bound(sigma, x, delta)).collect::<Result<_, _>>().map_err(err)?,
        gaussian: t.iter().map(|&x| gaussian_bound(sigma, x, delta)).collect::<Result<_, _>>().map_err(err)?,
        kurtosis: t.iter().map(|&x| kurtosis_bound(x, z_delta)).collect(),
        t,
    })
}

#[derive(Serialize)]
struct Simulation {
    t: Vec<u64>,
    mse_local: Vec<f64>,
    mse_collab: Vec<f64>,
    mse_oracle: Vec<f64>,
    wrong_link_fraction: Vec<f64>,
    prunes: Vec<(Fold, usize)>,
    separation: Option<colme::separation::SeparationTable>,
}

/// One realization of a bundled preset, thinned to at most 500 points.
pub fn simulate_json(preset_name: &str, seed: u64, n_agents: usize, horizon: u64) -> Result<String, String> {
    let base = preset(preset_name).map_err(|e| e.to_string())?;
    let cfg = ScenarioConfig { master_seed: seed, n_agents, horizon, realizations: 1, checkpoints: Vec::new(), ..base };
    cfg.validate().map_err(|e| e.to_string())?;
    let out = run_realization(&cfg, 0).map_err(|e| e.to_string())?;
    let stride = out.metrics.len().div_ceil(500).max(1);
    let kept: Vec<_> = out.metrics.iter().skip(stride - 1).step_by(stride).collect();
    let separation = separation_table(&cfg.class_specs(), &cfg.bound_config()).ok();
    to_json(&Simulation {
        t: kept.iter().map(|m| m.t).collect(),
        mse_local: kept.iter().map(|m| m.mse_local).collect(),
        mse_collab: kept.iter().map(|m| m.mse_collab).collect(),
        mse_oracle: kept.iter().map(|m| m.mse_oracle).collect(),
        wrong_link_fraction: kept.iter().map(|m| m.wrong_link_fraction).collect(),
        prunes: Fold::ALL.iter().map(|&f| (f, out.events.iter().filter(|e| e.fold == f).count())).collect(),
        separation,
    })
}

#[wasm_bindgen(js_name = separationTable)]
pub fn separation_table_js(request: &str) -> Result<String, JsError> {
    separation_table_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = boundCurves)]
pub fn bound_curves_js(sigma: f64, delta: f64, z_delta: f64, t_max: f64, points: u32) -> Result<String, JsError> {
    bound_curves_json(sigma, delta, z_delta, t_max, points as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(preset_name: &str, seed: u32, n_agents: u32, horizon: u32) -> Result<String, JsError> {
    simulate_json(preset_name, seed.into(), n_agents as usize, horizon.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = presetNames)]
pub fn preset_names() -> Vec<String> {
    colme::presets::names()
}
