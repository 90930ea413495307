use crate::error::Result;
use crate::lti::balance::balanced_truncation;
use crate::pwl_tf::StateSpace;

#[derive(Debug, Clone)]
pub struct Reduced {
    pub system: StateSpace,
    /// H∞ bound `2 Σ` of the discarded Hankel singular values.
    pub error_bound: f64,
    pub hankel: Vec<f64>,
}

/// Balanced truncation to `order` states; the system is returned unchanged
/// when it is already small enough.
pub fn reduce(sys: &StateSpace, order: usize) -> Result<Reduced> {
    if order >= sys.n_states() {
        if !sys.is_stable() {
            return Err(crate::Error::Unstable("reduction needs a stable model".into()));
        }
        return Ok(Reduced {
            system: sys.clone(),
            error_bound: 0.0,
            hankel: Vec::new(),
        });
    }
    let b = balanced_truncation(sys, order)?;
    Ok(Reduced {
        system: b.system,
        error_bound: b.error_bound,
        hankel: b.hankel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    #[test]
    fn keeps_dominant_slow_mode() {
        let sys = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[-1000.0, 0.0, 0.0, -1.0]),
            DMatrix::from_row_slice(2, 1, &[0.01, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.01, 1.0]),
        )
        .unwrap();
        let r = reduce(&sys, 1).unwrap();
        assert!((r.system.a[(0, 0)] + 1.0).abs() < 1e-3);
        assert!(r.error_bound < 1e-6);
    }

    #[test]
    fn full_order_is_identity() {
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, -2.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 3.0),
        )
        .unwrap();
        let r = reduce(&sys, 4).unwrap();
        let s = Complex64::new(0.0, 1.0);
        assert_eq!(r.system.eval(s).unwrap(), sys.eval(s).unwrap());
        assert_eq!(r.error_bound, 0.0);
    }

    #[test]
    fn unstable_rejected() {
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!(reduce(&sys, 1).is_err());
    }
}
