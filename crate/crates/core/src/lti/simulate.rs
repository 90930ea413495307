use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lti::closed_loop::ClosedLoop;
use crate::lti::h2::h2_norm_sq;
use crate::lti::stability::{is_hurwitz, DEFAULT_MARGIN};
use crate::pwl_tf::{StateSpace, TimeSeries};

/// Summary of a disturbance response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Largest `|Δf[k+1] - Δf[k]| / dt`.
    pub rocof_max: f64,
    /// Minimum of `Δf`.
    pub nadir: f64,
    /// Largest `|Δv|`.
    pub v_peak: f64,
    /// Squared H2 norm of the loop.
    #[serde(rename = "J")]
    pub j: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Columns `df, dfdot, dv, dp, dq`.
    pub traces: TimeSeries,
    pub metrics: Metrics,
}

/// Step disturbance `w = [p_d, q_d]` applied at `t = 0` to a loop at rest.
pub fn simulate_disturbance(cl: &ClosedLoop, w: [f64; 2], dt: f64, horizon: f64) -> Result<Simulation> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return invalid("need dt > 0 and horizon >= dt");
    }
    if !is_hurwitz(&cl.a, DEFAULT_MARGIN) {
        return Err(Error::Unstable("closed loop is not stable".into()));
    }
    let mut out = DMatrix::zeros(4, cl.n_states());
    out.rows_mut(0, 2).copy_from(&cl.c_meas);
    out.rows_mut(2, 2).copy_from(&cl.c_ctrl);
    let sys = StateSpace::new(cl.a.clone(), cl.b.clone(), out)?;
    let samples = (horizon / dt).round() as usize + 1;
    let mut u = DMatrix::zeros(samples, 2);
    u.column_mut(0).fill(w[0]);
    u.column_mut(1).fill(w[1]);
    let y = sys.discretize(dt)?.simulate(&u)?;

    let df: Vec<f64> = y.column(0).iter().copied().collect();
    let mut dfdot = vec![0.0; samples];
    for k in 0..samples - 1 {
        dfdot[k] = (df[k + 1] - df[k]) / dt;
    }
    dfdot[samples - 1] = dfdot[samples.saturating_sub(2)];
    let dv: Vec<f64> = y.column(1).iter().copied().collect();
    let metrics = Metrics {
        rocof_max: dfdot.iter().fold(0.0, |m, v| m.max(v.abs())),
        nadir: df.iter().copied().fold(0.0, f64::min),
        v_peak: dv.iter().fold(0.0, |m, v| m.max(v.abs())),
        j: h2_norm_sq(cl),
    };
    let traces = TimeSeries {
        t: (0..samples).map(|k| k as f64 * dt).collect(),
        names: ["df", "dfdot", "dv", "dp", "dq"].map(String::from).to_vec(),
        columns: vec![
            df,
            dfdot,
            dv,
            y.column(2).iter().copied().collect(),
            y.column(3).iter().copied().collect(),
        ],
    };
    Ok(Simulation { traces, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::closed_loop::{augment_grid, close_loop, PerfWeights};

    fn loop_() -> ClosedLoop {
        let g = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let t = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, -5.0]),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, -1.0]),
        )
        .unwrap();
        close_loop(&augment_grid(&g, &PerfWeights::default()).unwrap(), &t).unwrap()
    }

    #[test]
    fn zero_disturbance() {
        let s = simulate_disturbance(&loop_(), [0.0, 0.0], 0.01, 2.0).unwrap();
        assert!(s.traces.columns.iter().all(|c| c.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn steady_state_matches_dc_gain() {
        let cl = loop_();
        let s = simulate_disturbance(&cl, [-0.1, 0.0], 0.01, 40.0).unwrap();
        let sys = StateSpace::new(cl.a.clone(), cl.b.clone(), cl.c_meas.clone()).unwrap();
        let dc = sys.dc_gain().unwrap()[(0, 0)] * -0.1;
        let last = *s.traces.column("df").unwrap().last().unwrap();
        assert!((last - dc).abs() < 1e-9);
        // loop: Δf(s) = w/(s+1) closed with -3/(s+4) → DC 4/(4+3)
        assert!((dc + 0.1 * 4.0 / 7.0).abs() < 1e-12);
        assert!(s.metrics.nadir <= last);
    }
}
