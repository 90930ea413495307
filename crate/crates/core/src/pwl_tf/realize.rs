use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::pwl_tf::pade::unit_delay_ramp;
use crate::pwl_tf::{PwlCurve, RationalTf, StateSpace};

/// Controllable canonical realization of a strictly proper SISO transfer
/// function.
pub fn tf_to_ss(tf: &RationalTf) -> Result<StateSpace> {
    if !tf.is_strictly_proper() {
        return invalid("tf_to_ss needs a strictly proper transfer function");
    }
    let den = tf.den();
    let n = den.len() - 1;
    let lead = den[n];
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -den[j] / lead;
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let mut c = DMatrix::zeros(1, n);
    for (j, v) in tf.num().iter().enumerate() {
        c[(0, j)] = v / lead;
    }
    StateSpace::new(a, b, c)
}

/// Realizes the step-normalized transfer function of a capability curve.
///
/// For the slope-change terms `c_k` at delays `t_k`,
/// `T(s) = (1/input_step) Σ c_k (P_k(s) - 1)/s` where `P_k` is the Padé
/// approximant of `e^{-t_k s}`. Because `Σ c_k = 0` this equals
/// `(1/input_step) Σ c_k P_k(s)/s` without carrying integrator states, so the
/// realization is stable. Every breakpoint after `t = 0` contributes one
/// block of `pade_order` states, even when its slope change is zero, which
/// keeps the state dimension independent of the curve parameters.
pub fn pwl_step_tf(curve: &PwlCurve, input_step: f64, pade_order: usize) -> Result<StateSpace> {
    if input_step == 0.0 || !input_step.is_finite() {
        return invalid("input step must be finite and nonzero");
    }
    let proto = unit_delay_ramp(pade_order)?;
    let mut sys = StateSpace::zero(1, 1);
    for term in curve.slope_changes().into_iter().filter(|t| t.delay > 0.0) {
        let block = StateSpace::new(
            &proto.a / term.delay,
            proto.b.clone(),
            &proto.c * (term.coefficient / input_step),
        )?;
        sys = sys.parallel(&block)?;
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::stability::eigenvalues;
    use crate::pwl_tf::response::step_response;
    use num_complex::Complex64;

    #[test]
    fn first_order_canonical() {
        let tf = RationalTf::new(vec![1.0], vec![2.0, 1.0]).unwrap();
        let ss = tf_to_ss(&tf).unwrap();
        assert_eq!(ss.a[(0, 0)], -2.0);
        assert_eq!(ss.b[(0, 0)], 1.0);
        assert_eq!(ss.c[(0, 0)], 1.0);
    }

    #[test]
    fn second_order_poles() {
        let tf = RationalTf::new(vec![0.0, 1.0], vec![2.0, 3.0, 1.0]).unwrap();
        let ss = tf_to_ss(&tf).unwrap();
        assert_eq!(ss.n_states(), 2);
        let mut re: Vec<f64> = eigenvalues(&ss.a).iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
        let s = Complex64::new(0.3, 1.7);
        assert!((ss.eval(s).unwrap()[(0, 0)] - tf.eval(s)).norm() < 1e-12);
    }

    #[test]
    fn improper_rejected() {
        let tf = RationalTf::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(tf_to_ss(&tf).is_err());
    }

    #[test]
    fn fcr_dc_gain_with_droop_input() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (10.0, 1.0)]).unwrap();
        let ss = pwl_step_tf(&c, -0.05, 4).unwrap();
        assert!((ss.dc_gain().unwrap()[(0, 0)] + 20.0).abs() < 1e-9);
    }

    #[test]
    fn returning_curve_has_zero_dc_gain() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (2.0, 1.0), (10.0, 1.0), (20.0, 0.0)]).unwrap();
        let ss = pwl_step_tf(&c, 1.0, 6).unwrap();
        assert!(ss.dc_gain().unwrap()[(0, 0)].abs() < 1e-9);
        assert!(ss.is_stable());
    }

    #[test]
    fn half_capacity_at_ramp_midpoint() {
        // exact delayed ramp: (t - 2)/28 for 2 <= t <= 30, divided by the step
        let c = PwlCurve::new(vec![(0.0, 0.0), (2.0, 0.0), (30.0, 1.0)]).unwrap();
        let ss = pwl_step_tf(&c, -0.05, 4).unwrap();
        let exact: f64 = (16.0 - 2.0) / 28.0 / -0.05;
        assert!((exact + 10.0).abs() < 1e-12);
        let y = step_response(&ss, 0, 0.01, 20.0).unwrap();
        let k = (16.0f64 / 0.01).round() as usize;
        assert!((y.columns[0][k] - exact).abs() <= 0.02 * 20.0);
    }

    #[test]
    fn zero_input_step_rejected() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(pwl_step_tf(&c, 0.0, 4).is_err());
    }
}
