use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridsim::effective_grid;
use crate::lti::PerfWeights;
use crate::optimizer::{optimize, OptRun, OptimizerConfig, Problem};
use crate::pwl_tf::StateSpace;
use crate::services::{build_tdes, AlphaParams, Droops, LimitSet};

/// One reserve unit in a multi-unit plant.
#[derive(Debug, Clone)]
pub struct Unit {
    pub droops: Droops,
    pub limits: LimitSet,
    /// Starting parameters; disabled products stay disabled.
    pub alpha0: AlphaParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cycle {
    pub cycle: usize,
    pub runs: Vec<OptRun>,
    /// Local `J` of every unit with all other units closed in, after the cycle.
    #[serde(rename = "J_units")]
    pub j_units: Vec<f64>,
    /// Sum of the local values.
    #[serde(rename = "J_total")]
    pub j_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequentialRun {
    /// Local values before any optimization.
    #[serde(rename = "J_initial")]
    pub j_initial: Vec<f64>,
    pub cycles: Vec<Cycle>,
    pub alphas: Vec<AlphaParams>,
}

fn unit_problem(
    plant: &StateSpace,
    units: &[Unit],
    alphas: &[AlphaParams],
    i: usize,
    weights: &PerfWeights,
    cfg: &OptimizerConfig,
) -> Result<Problem> {
    let closers = alphas
        .iter()
        .zip(units)
        .enumerate()
        .map(|(j, (a, u))| {
            if j == i {
                Ok(None)
            } else {
                build_tdes(a, &u.droops, cfg.pade_order).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let g = effective_grid(plant, i, &closers)?;
    Problem::new(
        &g,
        units[i].droops,
        units[i].limits,
        weights,
        alphas[i],
        cfg.pade_order,
        cfg.stability_margin,
    )
}

fn local_costs(
    plant: &StateSpace,
    units: &[Unit],
    alphas: &[AlphaParams],
    weights: &PerfWeights,
    cfg: &OptimizerConfig,
) -> Result<Vec<f64>> {
    (0..units.len())
        .map(|i| Ok(unit_problem(plant, units, alphas, i, weights, cfg)?.cost(&alphas[i].to_vec())))
        .collect()
}

/// Perceive-and-optimize one unit after another while the others stay
/// connected with their current parameters, for `cycles` full passes. Each
/// unit sees the plant with every other unit's response closed in
/// analytically.
pub fn sequential_po(
    plant: &StateSpace,
    units: &[Unit],
    weights: &PerfWeights,
    cfg: &OptimizerConfig,
    cycles: usize,
) -> Result<SequentialRun> {
    if units.is_empty() {
        return Err(Error::Invalid("sequential optimization needs at least one unit".into()));
    }
    if plant.n_inputs() != 2 * units.len() {
        return Err(Error::Dimension(format!(
            "plant has {} inputs for {} units",
            plant.n_inputs(),
            units.len()
        )));
    }
    let mut alphas: Vec<AlphaParams> = units.iter().map(|u| u.alpha0).collect();
    let j_initial = local_costs(plant, units, &alphas, weights, cfg)?;
    let mut out = Vec::new();
    for c in 1..=cycles {
        let mut runs = Vec::new();
        for i in 0..units.len() {
            let problem = unit_problem(plant, units, &alphas, i, weights, cfg)?;
            let run = optimize(&problem, &alphas[i], cfg)
                .map_err(|e| Error::Unstable(format!("cycle {c}, unit {}: {e}", i + 1)))?;
            alphas[i] = run.alpha_star;
            runs.push(run);
        }
        let j_units = local_costs(plant, units, &alphas, weights, cfg)?;
        if let Some(k) = j_units.iter().position(|j| !j.is_finite()) {
            return Err(Error::Unstable(format!("cycle {c}: loop seen by unit {} is unstable", k + 1)));
        }
        out.push(Cycle {
            cycle: c,
            runs,
            j_total: j_units.iter().sum(),
            j_units,
        });
    }
    Ok(SequentialRun {
        j_initial,
        cycles: out,
        alphas,
    })
}
