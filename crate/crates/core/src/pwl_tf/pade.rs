use std::sync::OnceLock;

use crate::error::{invalid, Result};
use crate::lti::balance::balanced_truncation;
use crate::pwl_tf::{tf_to_ss, RationalTf, StateSpace};

pub const MAX_PADE_ORDER: usize = 12;
pub const DEFAULT_PADE_ORDER: usize = 4;

/// Coefficients `a_k = (2n-k)! n! / ((2n)! k! (n-k)!)` of the diagonal
/// Padé approximant, `k = 0..=n`.
fn pade_coefficients(order: usize) -> Vec<f64> {
    let n = order as f64;
    let mut a = vec![1.0; order + 1];
    for k in 0..order {
        let kf = k as f64;
        a[k + 1] = a[k] * (n - kf) / ((2.0 * n - kf) * (kf + 1.0));
    }
    a
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_PADE_ORDER {
        return invalid(format!(
            "Padé order {order} outside 1..={MAX_PADE_ORDER}"
        ));
    }
    Ok(())
}

/// Diagonal `(order, order)` Padé approximant of `e^{-delay·s}`.
pub fn pade_delay(delay: f64, order: usize) -> Result<RationalTf> {
    check_order(order)?;
    if !(delay >= 0.0) || !delay.is_finite() {
        return invalid(format!("delay {delay} must be finite and non-negative"));
    }
    if delay == 0.0 {
        return Ok(RationalTf::constant(1.0));
    }
    let a = pade_coefficients(order);
    let mut pow = 1.0;
    let mut num = Vec::with_capacity(order + 1);
    let mut den = Vec::with_capacity(order + 1);
    for (k, ak) in a.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        num.push(sign * ak * pow);
        den.push(ak * pow);
        pow *= delay;
    }
    RationalTf::new(num, den)
}

/// `(P(σ) - 1) / σ` for the unit-delay Padé approximant `P`.
///
/// Strictly proper, stable, with value `-1` at `σ = 0`. A delay `T` is
/// obtained by scaling the state matrix by `1/T`.
fn unit_delay_ramp_tf(order: usize) -> RationalTf {
    let a = pade_coefficients(order);
    let num: Vec<f64> = (1..=order)
        .map(|k| if k % 2 == 1 { -2.0 * a[k] } else { 0.0 })
        .collect();
    RationalTf::new(num, a).expect("Padé ramp prototype is strictly proper")
}

static PROTOTYPES: [OnceLock<StateSpace>; MAX_PADE_ORDER + 1] =
    [const { OnceLock::new() }; MAX_PADE_ORDER + 1];

/// Balanced realization of [`unit_delay_ramp_tf`], cached per order.
pub(crate) fn unit_delay_ramp(order: usize) -> Result<&'static StateSpace> {
    check_order(order)?;
    Ok(PROTOTYPES[order].get_or_init(|| {
        let canonical = tf_to_ss(&unit_delay_ramp_tf(order)).expect("strictly proper");
        match balanced_truncation(&canonical, order) {
            Ok(b) if b.system.n_states() == order => b.system,
            _ => canonical,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn first_order() {
        let p = pade_delay(1.0, 1).unwrap();
        assert_eq!(p.num(), &[1.0, -0.5]);
        assert_eq!(p.den(), &[1.0, 0.5]);
    }

    #[test]
    fn zero_delay_is_identity() {
        for n in 1..=MAX_PADE_ORDER {
            let p = pade_delay(0.0, n).unwrap();
            assert_eq!(p.num(), &[1.0]);
            assert_eq!(p.den(), &[1.0]);
        }
    }

    #[test]
    fn all_pass() {
        let p = pade_delay(2.0, 4).unwrap();
        for w in [0.1, 1.0, 10.0] {
            assert!((p.eval(Complex64::new(0.0, w)).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn order_guard() {
        assert!(pade_delay(1.0, 0).is_err());
        assert!(pade_delay(1.0, 13).is_err());
        assert!(pade_delay(-1.0, 2).is_err());
    }

    #[test]
    fn prototype_matches_rational_form() {
        for n in [1, 4, 8, 12] {
            let ss = unit_delay_ramp(n).unwrap();
            let tf = unit_delay_ramp_tf(n);
            for w in [0.05, 0.9, 7.0] {
                let s = Complex64::new(0.0, w);
                let d = ss.eval(s).unwrap()[(0, 0)] - tf.eval(s);
                assert!(d.norm() < 1e-9 * tf.eval(s).norm().max(1.0), "order {n} w {w}");
            }
            assert!((ss.dc_gain().unwrap()[(0, 0)] + 1.0).abs() < 1e-10);
        }
    }
}
