use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::pwl_tf::response::fmt;

/// Uniformly sampled input/output record: `u = [Δp, Δq]`, `y = [Δf, Δv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dt: f64,
    /// samples × inputs
    pub u: DMatrix<f64>,
    /// samples × outputs
    pub y: DMatrix<f64>,
}

pub const MIN_SAMPLES: usize = 100;

impl Dataset {
    pub fn new(dt: f64, u: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dataset dt={dt} must be positive"));
        }
        if u.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "input has {} samples, output {}",
                u.nrows(),
                y.nrows()
            )));
        }
        if u.nrows() < MIN_SAMPLES {
            return invalid(format!("dataset needs at least {MIN_SAMPLES} samples"));
        }
        if u.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return invalid("dataset contains non-finite samples");
        }
        Ok(Self { dt, u, y })
    }

    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.u.nrows() == 0
    }

    /// Samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        if start >= end || end > self.len() {
            return invalid(format!("bad slice {start}..{end} of {}", self.len()));
        }
        Dataset::new(
            self.dt,
            self.u.rows(start, end - start).into_owned(),
            self.y.rows(start, end - start).into_owned(),
        )
    }

    /// The same record restricted to output channel `i`.
    pub fn output(&self, i: usize) -> Result<Dataset> {
        if i >= self.y.ncols() {
            return Err(Error::Dimension(format!("no output channel {i}")));
        }
        Dataset::new(self.dt, self.u.clone(), self.y.columns(i, 1).into_owned())
    }

    /// Splits at `fraction` of the record into training and validation parts.
    pub fn split(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        let k = (self.len() as f64 * fraction).round() as usize;
        Ok((self.slice(0, k)?, self.slice(k, self.len())?))
    }

    /// CSV with header `t,dp,dq,df,dv` (2×2 records only).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        if self.u.ncols() != 2 || self.y.ncols() != 2 {
            return Err(Error::Dimension("CSV export needs a 2-input 2-output dataset".into()));
        }
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "dp", "dq", "df", "dv"])?;
        for k in 0..self.len() {
            wr.write_record([
                fmt(k as f64 * self.dt),
                fmt(self.u[(k, 0)]),
                fmt(self.u[(k, 1)]),
                fmt(self.y[(k, 0)]),
                fmt(self.y[(k, 1)]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `t,dp,dq,df,dv`; the time column must be uniform to 1e-9 s.
    pub fn read_csv<R: Read>(r: R) -> Result<Dataset> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header != ["t", "dp", "dq", "df", "dv"] {
            return invalid(format!("dataset header must be t,dp,dq,df,dv, got {}", header.join(",")));
        }
        let mut rows: Vec<[f64; 5]> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let mut row = [0.0; 5];
            for (i, v) in row.iter_mut().enumerate() {
                let s = rec.get(i).unwrap_or("").trim();
                *v = s
                    .parse()
                    .map_err(|_| Error::Invalid(format!("line {}: bad number {s:?}", rows.len() + 2)))?;
            }
            rows.push(row);
        }
        if rows.len() < 2 {
            return invalid("dataset has fewer than two rows");
        }
        let dt = rows[1][0] - rows[0][0];
        for (k, r) in rows.iter().enumerate() {
            if (r[0] - rows[0][0] - k as f64 * dt).abs() > 1e-9 {
                return invalid(format!("non-uniform sampling at row {}", k + 2));
            }
        }
        let n = rows.len();
        let u = DMatrix::from_fn(n, 2, |k, j| rows[k][1 + j]);
        let y = DMatrix::from_fn(n, 2, |k, j| rows[k][3 + j]);
        Dataset::new(dt, u, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let n = 120;
        Dataset::new(
            0.001,
            DMatrix::from_fn(n, 2, |k, j| (k * (j + 1)) as f64 * 0.1),
            DMatrix::from_fn(n, 2, |k, j| (k as f64).sin() + j as f64),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,dp,dq,df,dv\n"));
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.u, d.u);
        assert_eq!(back.y, d.y);
        assert!((back.dt - d.dt).abs() < 1e-15);
    }

    #[test]
    fn rejects_irregular_time() {
        let text = "t,dp,dq,df,dv\n0,0,0,0,0\n0.1,0,0,0,0\n0.25,0,0,0,0\n";
        assert!(Dataset::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn short_records_rejected() {
        assert!(Dataset::new(0.1, DMatrix::zeros(10, 2), DMatrix::zeros(10, 2)).is_err());
    }
}
