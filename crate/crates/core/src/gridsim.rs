//! Synthetic linearized grids seen from a reserve unit's terminal.
//!
//! Inputs are the unit's injections `[Δp, Δq]`, outputs the local
//! `[Δf, Δv]`. A positive active injection raises frequency and a positive
//! reactive injection raises voltage.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lti::stability::is_hurwitz;
use crate::pwl_tf::StateSpace;
use crate::sysid::{rbs, Dataset, IdentConfig};

/// Lightly damped electromechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatoryMode {
    pub freq_hz: f64,
    pub zeta: f64,
    /// Gain `k` of `k ω₀ s / (s² + 2ζω₀ s + ω₀²)` from `Δp` to `Δf`.
    pub gain: f64,
    /// Fraction of the mode output that also appears in `Δv`.
    pub v_share: f64,
}

impl Default for OscillatoryMode {
    fn default() -> Self {
        Self {
            freq_hz: 1.0,
            zeta: 0.03,
            gain: 0.012,
            v_share: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridScenario {
    /// Inertia constant `H` (s); the swing equation uses `2H`.
    pub h: f64,
    pub d_load: f64,
    pub gov_gain: f64,
    pub gov_time: f64,
    pub k_v: f64,
    pub tau_v: f64,
    /// `Δp → Δv` coupling.
    pub k_pv: f64,
    /// `Δq → Δf` coupling.
    pub k_qf: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<OscillatoryMode>,
}

impl Default for GridScenario {
    fn default() -> Self {
        Self {
            h: 5.0,
            d_load: 1.0,
            gov_gain: 20.0,
            gov_time: 0.5,
            k_v: 0.05,
            tau_v: 0.2,
            k_pv: 0.02,
            k_qf: 0.02,
            mode: None,
        }
    }
}

impl GridScenario {
    pub fn oscillatory() -> Self {
        Self {
            mode: Some(OscillatoryMode::default()),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !(self.tau_v > 0.0) || !(self.gov_time > 0.0) {
            return invalid("scenario needs h > 0, tau_v > 0 and gov_time > 0");
        }
        let all = [self.d_load, self.gov_gain, self.k_v, self.k_pv, self.k_qf];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("scenario parameters must be finite");
        }
        Ok(())
    }
}

fn check_plant(sys: StateSpace) -> Result<StateSpace> {
    if !is_hurwitz(&sys.a, 0.0) {
        return Err(Error::Unstable("grid parameterization is not stable".into()));
    }
    Ok(sys)
}

/// Swing equation with governor, first-order voltage channel and weak cross
/// couplings. States `[Δf, p_m, Δv]`.
pub fn make_nominal_grid(sc: &GridScenario) -> Result<StateSpace> {
    sc.validate()?;
    let m = 2.0 * sc.h;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(3, 3, &[
        -sc.d_load / m, 1.0 / m, 0.0,
        -sc.gov_gain / sc.gov_time, -1.0 / sc.gov_time, 0.0,
        0.0, 0.0, -1.0 / sc.tau_v,
    ]);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(3, 2, &[
        1.0 / m, sc.k_qf / m,
        0.0, 0.0,
        sc.k_pv / sc.tau_v, sc.k_v / sc.tau_v,
    ]);
    #[rustfmt::skip]
    let c = DMatrix::from_row_slice(2, 3, &[
        1.0, 0.0, 0.0,
        0.0, 0.0, 1.0,
    ]);
    check_plant(StateSpace::new(a, b, c)?)
}

/// Nominal grid plus a resonant mode driven by `Δp` and seen in both
/// outputs. States `[Δf, p_m, Δv, z₁, z₂]`.
pub fn make_oscillatory_grid(sc: &GridScenario) -> Result<StateSpace> {
    let Some(mode) = sc.mode else {
        return invalid("oscillatory grid needs a mode");
    };
    if !(mode.zeta > 0.0) || !(mode.freq_hz > 0.0) {
        return invalid("mode needs zeta > 0 and freq_hz > 0");
    }
    let base = make_nominal_grid(sc)?;
    let w0 = 2.0 * std::f64::consts::PI * mode.freq_hz;
    let m_sys = StateSpace::new(
        DMatrix::from_row_slice(2, 2, &[0.0, w0, -w0, -2.0 * mode.zeta * w0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, mode.gain * w0, 0.0, mode.v_share * mode.gain * w0]),
    )?;
    check_plant(base.parallel(&m_sys)?)
}

/// One-state grid `Δḟ = (-d Δf + Δp)/(2H)` with no voltage dynamics: the
/// `Δv` output and the `Δq` input are structurally zero.
pub fn make_toy_grid(h: f64, d: f64) -> Result<StateSpace> {
    if !(h > 0.0 && d > 0.0) {
        return invalid("toy grid needs h > 0 and d > 0");
    }
    let m = 2.0 * h;
    check_plant(StateSpace::new(
        DMatrix::from_element(1, 1, -d / m),
        DMatrix::from_row_slice(1, 2, &[1.0 / m, 0.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
    )?)
}

/// Grid for a scenario: oscillatory when a mode is configured.
pub fn make_grid(sc: &GridScenario) -> Result<StateSpace> {
    if sc.mode.is_some() {
        make_oscillatory_grid(sc)
    } else {
        make_nominal_grid(sc)
    }
}

/// Two reserve units on one grid: inputs `[Δp₁, Δq₁, Δp₂, Δq₂]`, outputs
/// `[Δf₁, Δv₁, Δf₂, Δv₂]`. Both share the swing dynamics; the mode swings
/// the two terminals against each other. States `[Δf, p_m, z₁, z₂, Δv₁, Δv₂]`.
///
/// Inertia, load damping and governor gain are twice the single-unit values,
/// so that each unit faces a grid of the same strength per unit of its own
/// rating.
pub fn make_two_unit_grid(sc: &GridScenario) -> Result<StateSpace> {
    sc.validate()?;
    let mode = sc.mode.unwrap_or(OscillatoryMode {
        gain: 0.0,
        ..OscillatoryMode::default()
    });
    if !(mode.zeta > 0.0) {
        return invalid("mode needs zeta > 0");
    }
    let units = 2.0;
    let m = 2.0 * sc.h * units;
    let d_load = sc.d_load * units;
    let gov_gain = sc.gov_gain * units;
    let w0 = 2.0 * std::f64::consts::PI * mode.freq_hz;
    let kt = 1.0 / sc.tau_v;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 6, &[
        -d_load / m, 1.0 / m, 0.0, 0.0, 0.0, 0.0,
        -gov_gain / sc.gov_time, -1.0 / sc.gov_time, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, w0, 0.0, 0.0,
        0.0, 0.0, -w0, -2.0 * mode.zeta * w0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, -kt, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, -kt,
    ]);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(6, 4, &[
        1.0 / m, sc.k_qf / m, 1.0 / m, sc.k_qf / m,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, -1.0, 0.0,
        sc.k_pv * kt, sc.k_v * kt, 0.0, 0.0,
        0.0, 0.0, sc.k_pv * kt, sc.k_v * kt,
    ]);
    let g = mode.gain * w0;
    let gv = mode.v_share * g;
    #[rustfmt::skip]
    let c = DMatrix::from_row_slice(4, 6, &[
        1.0, 0.0, 0.0, g, 0.0, 0.0,
        0.0, 0.0, 0.0, gv, 1.0, 0.0,
        1.0, 0.0, 0.0, -g, 0.0, 0.0,
        0.0, 0.0, 0.0, -gv, 0.0, 1.0,
    ]);
    check_plant(StateSpace::new(a, b, c)?)
}

/// Equivalent 2×2 grid seen by `unit` when every other unit `j` closes its
/// terminal with `others[j]` (entries for `unit` itself are ignored).
pub fn effective_grid(plant: &StateSpace, unit: usize, others: &[Option<StateSpace>]) -> Result<StateSpace> {
    let units = plant.n_inputs() / 2;
    if plant.n_inputs() != 2 * units || plant.n_outputs() != 2 * units || unit >= units {
        return Err(Error::Dimension(format!("unit {unit} not in a {units}-unit plant")));
    }
    let np = plant.n_states();
    let closers: Vec<(usize, &StateSpace)> = others
        .iter()
        .enumerate()
        .filter(|(j, t)| *j != unit && t.is_some())
        .map(|(j, t)| (j, t.as_ref().unwrap()))
        .collect();
    let nt: usize = closers.iter().map(|(_, t)| t.n_states()).sum();
    let n = np + nt;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(&plant.a);
    let mut off = np;
    for (j, t) in &closers {
        if t.n_inputs() != 2 || t.n_outputs() != 2 {
            return Err(Error::Dimension("each unit's response must be 2x2".into()));
        }
        let nj = t.n_states();
        let bj = plant.b.columns(2 * j, 2);
        let cj = plant.c.rows(2 * j, 2);
        a.view_mut((0, off), (np, nj)).copy_from(&(bj * &t.c));
        a.view_mut((off, 0), (nj, np)).copy_from(&(&t.b * cj));
        a.view_mut((off, off), (nj, nj)).copy_from(&t.a);
        off += nj;
    }
    let mut b = DMatrix::zeros(n, 2);
    b.view_mut((0, 0), (np, 2)).copy_from(&plant.b.columns(2 * unit, 2));
    let mut c = DMatrix::zeros(2, n);
    c.view_mut((0, 0), (2, np)).copy_from(&plant.c.rows(2 * unit, 2));
    StateSpace::new(a, b, c)
}

/// Simulates `g` under `excitation` (samples × 2) and adds white measurement
/// noise at `snr_db` per output channel (`None` for noiseless data).
pub fn generate_dataset(
    g: &StateSpace,
    excitation: &DMatrix<f64>,
    snr_db: Option<f64>,
    dt: f64,
    seed: u64,
) -> Result<Dataset> {
    if excitation.ncols() != g.n_inputs() {
        return Err(Error::Dimension(format!(
            "excitation has {} channels, plant has {} inputs",
            excitation.ncols(),
            g.n_inputs()
        )));
    }
    let mut y = g.discretize(dt)?.simulate(excitation)?;
    if let Some(snr) = snr_db {
        if !snr.is_finite() {
            return invalid("SNR must be finite (omit it for noiseless data)");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 0..y.ncols() {
            let col = y.column(j);
            let power = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
            // A silent channel still gets noise, at a floor level.
            let sigma = (power.max(1e-30) / 10f64.powf(snr / 10.0)).sqrt();
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Invalid(e.to_string()))?;
            for v in y.column_mut(j).iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Dataset::new(dt, excitation.clone(), y)
}

/// Identification record for `g`: independent random binary sequences on
/// both inputs (seeds `seed` and `seed + 1`) and output noise seeded with
/// `seed + 2`, all as set in `cfg`.
pub fn excitation_dataset(g: &StateSpace, cfg: &IdentConfig, seed: u64) -> Result<Dataset> {
    if !(cfg.dt > 0.0 && cfg.duration >= 100.0 * cfg.dt) {
        return invalid("identification needs dt > 0 and at least 100 samples");
    }
    let n = (cfg.duration / cfg.dt).round() as usize;
    let mut u = DMatrix::zeros(n, g.n_inputs());
    for j in 0..g.n_inputs() {
        let s = rbs(n, cfg.rbs_amplitude, cfg.rbs_switch_prob, seed.wrapping_add(j as u64))?;
        u.column_mut(j).copy_from_slice(&s);
    }
    generate_dataset(g, &u, cfg.snr_db, cfg.dt, seed.wrapping_add(2))
}
