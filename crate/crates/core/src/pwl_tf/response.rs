use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::pwl_tf::StateSpace;

/// Uniformly sampled multi-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub names: Vec<String>,
    /// One vector per channel, each `t.len()` long.
    pub columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn from_matrix(dt: f64, names: Vec<String>, m: &DMatrix<f64>) -> Self {
        let t = (0..m.nrows()).map(|k| k as f64 * dt).collect();
        let columns = (0..m.ncols())
            .map(|j| m.column(j).iter().copied().collect())
            .collect();
        Self { t, names, columns }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// CSV with header `t,<names>`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().cloned());
        wr.write_record(&header)?;
        for k in 0..self.t.len() {
            let mut rec = vec![fmt(self.t[k])];
            rec.extend(self.columns.iter().map(|c| fmt(c[k])));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(Error::Io)?;
        Ok(())
    }
}

/// Shortest round-trip representation.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Unit-step response on input `channel`, sampled every `dt` up to
/// `horizon`, using the exact zero-order-hold discretization.
pub fn step_response(sys: &StateSpace, channel: usize, dt: f64, horizon: f64) -> Result<TimeSeries> {
    if channel >= sys.n_inputs() {
        return Err(Error::Dimension(format!(
            "input channel {channel} out of range ({} inputs)",
            sys.n_inputs()
        )));
    }
    if !(dt > 0.0) || !(horizon >= dt) {
        return invalid(format!("need dt > 0 and horizon >= dt (dt={dt}, horizon={horizon})"));
    }
    let samples = (horizon / dt).round() as usize + 1;
    let mut u = DMatrix::zeros(samples, sys.n_inputs());
    u.column_mut(channel).fill(1.0);
    let y = sys.discretize(dt)?.simulate(&u)?;
    let names = (0..sys.n_outputs()).map(|i| format!("y{i}")).collect();
    Ok(TimeSeries::from_matrix(dt, names, &y))
}
