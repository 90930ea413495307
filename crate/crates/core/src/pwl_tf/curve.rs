use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Piecewise-linear time-domain capability curve.
///
/// Linear between consecutive breakpoints, constant after the last one and
/// zero before `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlCurve {
    points: Vec<(f64, f64)>,
}

/// One slope change of a curve: the Laplace-domain step response is
/// `coefficient · e^{-delay·s} / s²` summed over all terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTerm {
    pub delay: f64,
    pub coefficient: f64,
}

impl PwlCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return invalid("curve needs at least 2 breakpoints");
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return invalid("curve breakpoints must be finite");
        }
        if points[0] != (0.0, 0.0) {
            return invalid(format!(
                "curve must start at (0, 0), got ({}, {})",
                points[0].0, points[0].1
            ));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[1].0 > w[0].0)) {
            return invalid(format!(
                "breakpoint times must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn final_value(&self) -> f64 {
        self.points[self.points.len() - 1].1
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.points[self.points.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let k = self.points.partition_point(|p| p.0 <= t);
        let (t0, v0) = self.points[k - 1];
        let (t1, v1) = self.points[k];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Slope change at every breakpoint, including zero changes. One entry
    /// per breakpoint, in order.
    pub fn slope_changes(&self) -> Vec<DelayTerm> {
        let n = self.points.len();
        let slope = |j: usize| -> f64 {
            // slope of the segment starting at breakpoint j; zero after the last
            if j + 1 >= n {
                0.0
            } else {
                let (t0, v0) = self.points[j];
                let (t1, v1) = self.points[j + 1];
                (v1 - v0) / (t1 - t0)
            }
        };
        (0..n)
            .map(|k| {
                let before = if k == 0 { 0.0 } else { slope(k - 1) };
                DelayTerm {
                    delay: self.points[k].0,
                    coefficient: slope(k) - before,
                }
            })
            .collect()
    }
}

/// Slope-change terms of a curve, omitting zero changes.
pub fn pwl_to_delay_terms(curve: &PwlCurve) -> Vec<DelayTerm> {
    curve
        .slope_changes()
        .into_iter()
        .filter(|d| d.coefficient != 0.0)
        .collect()
}

/// Evaluates `Σ c_k · max(t - t_k, 0)`, the double integral of the slope
/// impulse train.
pub fn reconstruct(terms: &[DelayTerm], t: f64) -> f64 {
    terms
        .iter()
        .map(|d| d.coefficient * (t - d.delay).max(0.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fcr_terms() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (2.0, 0.0), (30.0, 1.0)]).unwrap();
        let terms = pwl_to_delay_terms(&c);
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].delay, 2.0);
        assert!(close(terms[0].coefficient, 1.0 / 28.0, 1e-15));
        assert_eq!(terms[1].delay, 30.0);
        assert!(close(terms[1].coefficient, -1.0 / 28.0, 1e-15));
        assert!(close(reconstruct(&terms, 30.0), 1.0, 1e-14));
    }

    #[test]
    fn flat_curve_has_no_terms() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(pwl_to_delay_terms(&c).is_empty());
    }

    #[test]
    fn ffr_terms() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (2.0, 1.0), (10.0, 1.0), (20.0, 0.0)]).unwrap();
        let terms = pwl_to_delay_terms(&c);
        let expect = [(0.0, 0.5), (2.0, -0.5), (10.0, -0.1), (20.0, 0.1)];
        assert_eq!(terms.len(), expect.len());
        for (t, (d, c)) in terms.iter().zip(expect) {
            assert_eq!(t.delay, d);
            assert!(close(t.coefficient, c, 1e-15));
        }
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(PwlCurve::new(vec![(0.0, 0.0)]).is_err());
        assert!(PwlCurve::new(vec![(0.0, 0.0), (2.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(PwlCurve::new(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(PwlCurve::new(vec![(0.0, 0.0), (1.0, f64::NAN)]).is_err());
        assert!(PwlCurve::new(vec![(0.5, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn interpolation() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (2.0, 0.0), (30.0, -20.0)]).unwrap();
        assert_eq!(c.value_at(-1.0), 0.0);
        assert_eq!(c.value_at(1.0), 0.0);
        assert!(close(c.value_at(16.0), -10.0, 1e-12));
        assert_eq!(c.value_at(100.0), -20.0);
    }
}
