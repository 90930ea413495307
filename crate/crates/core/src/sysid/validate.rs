use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pwl_tf::StateSpace;
use crate::sysid::Dataset;

/// `1 - ‖y - ŷ‖ / ‖y - ȳ‖` per column, in percent-free fraction form.
pub fn nrmse_fit(y: &DMatrix<f64>, yhat: &DMatrix<f64>) -> Result<Vec<f64>> {
    if y.shape() != yhat.shape() {
        return Err(Error::Dimension("fit needs equally shaped signals".into()));
    }
    Ok((0..y.ncols())
        .map(|j| {
            let col = y.column(j);
            let mean = col.mean();
            let err = (col - yhat.column(j)).norm();
            let spread = col.map(|v| v - mean).norm();
            if spread == 0.0 {
                if err == 0.0 {
                    1.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                1.0 - err / spread
            }
        })
        .collect())
}

/// Log-spaced points between `lo` and `hi` (inclusive).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodeError {
    pub band_hz: (f64, f64),
    /// Largest `| |G| - |G₀| | / |G₀|` over the band and the channels
    /// where the reference is not negligible.
    pub max_mag_rel: f64,
    /// Largest phase difference in degrees over the same points.
    pub max_phase_deg: f64,
}

/// Compares `model` to `truth` on channels whose reference magnitude
/// exceeds `1e-6` of the largest one (structurally zero entries are skipped).
pub fn bode_error(model: &StateSpace, truth: &StateSpace, band_hz: (f64, f64), points: usize) -> Result<BodeError> {
    let freqs = logspace(band_hz.0, band_hz.1, points);
    let omegas: Vec<f64> = freqs.iter().map(|f| 2.0 * std::f64::consts::PI * f).collect();
    let gm = model.freq_response(&omegas)?;
    let gt = truth.freq_response(&omegas)?;
    let floor = gt.iter().flat_map(|m| m.iter().map(|v| v.norm())).fold(0.0, f64::max) * 1e-6;
    let mut max_mag: f64 = 0.0;
    let mut max_phase: f64 = 0.0;
    for (a, b) in gm.iter().zip(&gt) {
        for (x, y) in a.iter().zip(b.iter()) {
            if y.norm() <= floor {
                continue;
            }
            max_mag = max_mag.max((x.norm() - y.norm()).abs() / y.norm());
            max_phase = max_phase.max((x / y).arg().abs().to_degrees());
        }
    }
    Ok(BodeError {
        band_hz,
        max_mag_rel: max_mag,
        max_phase_deg: max_phase,
    })
}

/// Frequency (Hz) of the largest `|G_ij|` inside `band_hz`, refined by
/// golden-section search around the best grid point.
pub fn peak_frequency(sys: &StateSpace, out: usize, inp: usize, band_hz: (f64, f64)) -> Result<f64> {
    let mag = |f: f64| -> Result<f64> {
        let w = 2.0 * std::f64::consts::PI * f;
        Ok(sys.freq_response(&[w])?[0][(out, inp)].norm())
    };
    let grid = logspace(band_hz.0, band_hz.1, 400);
    let mut best = (grid[0], mag(grid[0])?);
    for &f in &grid[1..] {
        let m = mag(f)?;
        if m > best.1 {
            best = (f, m);
        }
    }
    let ratio = grid[1] / grid[0];
    let (mut lo, mut hi) = ((best.0 / ratio).max(band_hz.0), (best.0 * ratio).min(band_hz.1));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if mag(a)? > mag(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    /// Simulated-output fit per output channel (1.0 is a perfect match).
    pub fit: Vec<f64>,
    pub mean_fit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bode: Option<BodeError>,
}

/// Simulates `model` (from rest, ZOH inputs) against `data`, optionally
/// comparing its frequency response with a known `truth` over `band_hz`.
pub fn validate(
    model: &StateSpace,
    data: &Dataset,
    truth: Option<(&StateSpace, (f64, f64))>,
) -> Result<FitReport> {
    validate_from(model, data, 0, truth)
}

/// Like [`validate`], but only samples from `start` on are scored. The
/// simulation still runs over the whole record, so the earlier samples bring
/// the model state up to date instead of starting it from rest.
pub fn validate_from(
    model: &StateSpace,
    data: &Dataset,
    start: usize,
    truth: Option<(&StateSpace, (f64, f64))>,
) -> Result<FitReport> {
    if model.n_inputs() != data.u.ncols() || model.n_outputs() != data.y.ncols() {
        return Err(Error::Dimension("model and dataset channel counts differ".into()));
    }
    if start + 2 > data.len() {
        return Err(Error::Invalid(format!("scoring start {start} leaves nothing to score")));
    }
    let yhat = model.discretize(data.dt)?.simulate(&data.u)?;
    let rows = data.len() - start;
    let fit = nrmse_fit(&data.y.rows(start, rows).into_owned(), &yhat.rows(start, rows).into_owned())?;
    let mean_fit = fit.iter().sum::<f64>() / fit.len() as f64;
    let bode = match truth {
        Some((t, band)) => Some(bode_error(model, t, band, 200)?),
        None => None,
    };
    Ok(FitReport { fit, mean_fit, bode })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> StateSpace {
        StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 6.0, -6.0, -0.6]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        )
        .unwrap()
    }

    fn data() -> Dataset {
        let u = DMatrix::from_fn(500, 1, |k, _| if (k / 17) % 2 == 0 { 1.0 } else { -1.0 });
        let y = plant().discretize(0.01).unwrap().simulate(&u).unwrap();
        Dataset::new(0.01, u, y).unwrap()
    }

    #[test]
    fn exact_model_fits_perfectly() {
        let r = validate(&plant(), &data(), Some((&plant(), (0.01, 10.0)))).unwrap();
        assert!((r.mean_fit - 1.0).abs() < 1e-12);
        assert!(r.bode.unwrap().max_mag_rel < 1e-12);
    }

    #[test]
    fn zero_model_fit() {
        let d = data();
        let zero = StateSpace::zero(1, 1);
        let r = validate(&zero, &d, None).unwrap();
        let mean = d.y.column(0).mean();
        let expected = 1.0 - d.y.column(0).norm() / d.y.column(0).map(|v| v - mean).norm();
        assert!((r.fit[0] - expected).abs() < 1e-12);
        assert!(r.fit[0] <= 0.0 + 1e-3);
    }

    #[test]
    fn resonance_location() {
        let f = peak_frequency(&plant(), 0, 0, (0.1, 10.0)).unwrap();
        assert!((f - 6.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-3);
    }
}
