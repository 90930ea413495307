//! Tables of curves for external plotting: capability curves against their
//! rational approximations, Bode data and disturbance responses.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::lti::simulate_disturbance;
use crate::optimizer::{Problem, COMPARE_DISTURBANCE, COMPARE_DT, COMPARE_HORIZON};
use crate::pwl_tf::{pwl_step_tf, step_response, PwlCurve, StateSpace};
use crate::services::{aux_ss, fcr_curve, ffr_curve, vq_curve, AlphaParams, Droops};
use crate::sysid::logspace;

/// Step of the plot time grids (s).
pub const PLOT_DT: f64 = 0.01;

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(first: &str, values: Vec<f64>) -> Self {
        Self {
            header: vec![first.to_string()],
            columns: vec![values],
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.header.push(name.into());
        self.columns.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for k in 0..self.columns[0].len() {
            wr.write_record(self.columns.iter().map(|c| format!("{:?}", c[k])))?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn time_grid(horizon: f64) -> Vec<f64> {
    let n = (horizon / PLOT_DT).round() as usize;
    (0..=n).map(|k| k as f64 * PLOT_DT).collect()
}

/// Exact capability curve and the step response of its rational
/// approximation, per enabled product, plus the resonator's step response.
/// Columns `t, <product>_exact, <product>_approx, ..., aux`.
pub fn step_bundle(alpha: &AlphaParams, droops: &Droops, pade_order: usize) -> Result<Table> {
    let mut curves: Vec<(&str, PwlCurve)> = Vec::new();
    if let Some(p) = &alpha.fcr {
        curves.push(("fcr", fcr_curve(p, droops.d_p)?));
    }
    if let Some(p) = &alpha.ffr {
        curves.push(("ffr", ffr_curve(p, droops.k_p)?));
    }
    curves.push(("vq", vq_curve(&alpha.vq, droops.d_q)?));
    let last = curves
        .iter()
        .map(|(_, c)| c.points()[c.points().len() - 1].0)
        .fold(0.0, f64::max);
    let horizon = (1.25 * last).max(1.0);
    let t = time_grid(horizon);
    let mut table = Table::new("t", t.clone());
    for (name, c) in &curves {
        table.push(format!("{name}_exact"), t.iter().map(|&x| c.value_at(x)).collect());
        let sys = pwl_step_tf(c, 1.0, pade_order)?;
        let y = step_response(&sys, 0, PLOT_DT, horizon)?;
        table.push(format!("{name}_approx"), y.columns[0].clone());
    }
    if let Some(p) = &alpha.aux {
        let y = step_response(&aux_ss(p)?, 0, PLOT_DT, horizon)?;
        table.push("aux", y.columns[0].clone());
    }
    Ok(table)
}

fn unwrap_deg(phase: &mut [f64]) {
    for k in 1..phase.len() {
        let d = phase[k] - phase[k - 1];
        phase[k] -= 360.0 * (d / 360.0).round();
    }
}

fn add_bode(table: &mut Table, prefix: &str, sys: &StateSpace, omegas: &[f64]) -> Result<()> {
    let g = sys.freq_response(omegas)?;
    for i in 0..sys.n_outputs() {
        for j in 0..sys.n_inputs() {
            let mag = g.iter().map(|m| 20.0 * m[(i, j)].norm().max(1e-300).log10()).collect();
            let mut ph: Vec<f64> = g.iter().map(|m| m[(i, j)].arg().to_degrees()).collect();
            unwrap_deg(&mut ph);
            table.push(format!("{prefix}_mag_db_{}{}", i + 1, j + 1), mag);
            table.push(format!("{prefix}_phase_deg_{}{}", i + 1, j + 1), ph);
        }
    }
    Ok(())
}

/// Magnitude (dB) and unwrapped phase (degrees) per channel at `points`
/// log-spaced frequencies over `band_hz`. Columns `f_hz, omega`, then
/// `<name>_mag_db_<ij>, <name>_phase_deg_<ij>` for every system.
pub fn bode_table(systems: &[(&str, &StateSpace)], band_hz: (f64, f64), points: usize) -> Result<Table> {
    let f = logspace(band_hz.0, band_hz.1, points);
    let w: Vec<f64> = f.iter().map(|x| 2.0 * std::f64::consts::PI * x).collect();
    let mut table = Table::new("f_hz", f);
    table.push("omega", w.clone());
    for (name, sys) in systems {
        add_bode(&mut table, name, sys, &w)?;
    }
    Ok(table)
}

/// Disturbance responses of both parameter sets side by side. Columns
/// `t, baseline_<signal>, ..., optimized_<signal>, ...` with signals
/// `df, dfdot, dv, dp, dq`.
pub fn traces_bundle(problem: &Problem, a0: &AlphaParams, a1: &AlphaParams) -> Result<Table> {
    let s0 = simulate_disturbance(&problem.closed_loop(&a0.to_vec())?, COMPARE_DISTURBANCE, COMPARE_DT, COMPARE_HORIZON)?;
    let s1 = simulate_disturbance(&problem.closed_loop(&a1.to_vec())?, COMPARE_DISTURBANCE, COMPARE_DT, COMPARE_HORIZON)?;
    let mut table = Table::new("t", s0.traces.t.clone());
    for (prefix, s) in [("baseline", &s0), ("optimized", &s1)] {
        for (name, col) in s.traces.names.iter().zip(&s.traces.columns) {
            table.push(format!("{prefix}_{name}"), col.clone());
        }
    }
    Ok(table)
}
