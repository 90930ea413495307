//! WebAssembly bindings for the browser demo in `www/`. Every function takes
//! and returns JSON strings so the page needs no generated type glue; errors
//! come back as plain messages.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pando::gridsim::{make_grid, GridScenario, OscillatoryMode};
use pando::lti::PerfWeights;
use pando::optimizer::{compare_baseline, optimize, BaselineReport, OptimizerConfig, Problem, Status};
use pando::plotdata::{bode_table, step_bundle, traces_bundle, Table};
use pando::services::{baseline_alpha, AlphaParams, Droops, LimitSet};

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn scenario(h: f64, zeta: f64, oscillatory: bool) -> GridScenario {
    GridScenario {
        h,
        mode: oscillatory.then_some(OscillatoryMode {
            zeta,
            ..OscillatoryMode::default()
        }),
        ..GridScenario::default()
    }
}

/// Baseline parameters under the default limits.
#[wasm_bindgen]
pub fn default_alpha() -> Result<String, String> {
    json(&baseline_alpha(&LimitSet::default()))
}

/// Exact capability curves next to the step responses of their rational
/// approximations. `alpha_json` is a parameter set as returned by
/// [`default_alpha`].
#[wasm_bindgen]
pub fn step_curves(alpha_json: &str, pade_order: usize) -> Result<String, String> {
    let alpha: AlphaParams = serde_json::from_str(alpha_json).map_err(|e| e.to_string())?;
    alpha.validate().map_err(|e| e.to_string())?;
    json(&step_bundle(&alpha, &Droops::default(), pade_order).map_err(|e| e.to_string())?)
}

/// Frequency response of the synthetic grid from 0.01 to 10 Hz.
#[wasm_bindgen]
pub fn grid_bode(h: f64, zeta: f64, oscillatory: bool) -> Result<String, String> {
    let g = make_grid(&scenario(h, zeta, oscillatory)).map_err(|e| e.to_string())?;
    json(&bode_table(&[("grid", &g)], (0.01, 10.0), 300).map_err(|e| e.to_string())?)
}

#[derive(Debug, Serialize)]
pub struct Tuning {
    pub status: Status,
    pub alpha0: AlphaParams,
    pub alpha_star: AlphaParams,
    /// `J` of every accepted iterate.
    pub history: Vec<f64>,
    pub report: BaselineReport,
    pub traces: Table,
}

/// Tunes the default unit against the synthetic grid and compares the
/// result with the baseline.
pub fn tune_native(h: f64, zeta: f64, oscillatory: bool, max_iters: usize) -> pando::Result<Tuning> {
    let g = make_grid(&scenario(h, zeta, oscillatory))?;
    let limits = LimitSet::default();
    let a0 = baseline_alpha(&limits);
    let cfg = OptimizerConfig {
        max_iters,
        ..OptimizerConfig::default()
    };
    let p = Problem::new(
        &g,
        Droops::default(),
        limits,
        &PerfWeights::default(),
        a0,
        cfg.pade_order,
        cfg.stability_margin,
    )?;
    let run = optimize(&p, &a0, &cfg)?;
    Ok(Tuning {
        status: run.status,
        alpha0: a0,
        alpha_star: run.alpha_star,
        history: run.history.iter().map(|it| it.j).collect(),
        report: compare_baseline(&p, &g, &a0, &run.alpha_star)?,
        traces: traces_bundle(&p, &a0, &run.alpha_star)?,
    })
}

#[wasm_bindgen]
pub fn tune(h: f64, zeta: f64, oscillatory: bool, max_iters: usize) -> Result<String, String> {
    json(&tune_native(h, zeta, oscillatory, max_iters).map_err(|e| e.to_string())?)
}
