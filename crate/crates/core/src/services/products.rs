use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::pwl_tf::{pwl_step_tf, PwlCurve, RationalTf, StateSpace};
use crate::services::{AlphaParams, AuxParams, Droops, FcrParams, FfrParams, LimitSet, VqParams};

/// FCR capability curve per unit of frequency-step input.
pub fn fcr_curve(p: &FcrParams, d_p: f64) -> Result<PwlCurve> {
    if !(p.t_i >= 0.0) || !(p.t_a > p.t_i) {
        return invalid(format!("FCR needs 0 <= t_i < t_a (t_i={}, t_a={})", p.t_i, p.t_a));
    }
    let mut pts = vec![(0.0, 0.0)];
    if p.t_i > 0.0 {
        pts.push((p.t_i, 0.0));
    }
    pts.push((p.t_a, 1.0 / d_p));
    PwlCurve::new(pts)
}

/// FFR curve: rise to the overdelivery peak at `t_a`, decline to capacity
/// at `t_d`, return to zero at `t_r`.
pub fn ffr_curve(p: &FfrParams, k_p: f64) -> Result<PwlCurve> {
    if !(p.t_a > 0.0 && p.t_d > p.t_a && p.t_r > p.t_d) {
        return invalid(format!(
            "FFR needs 0 < t_a < t_d < t_r (t_a={}, t_d={}, t_r={})",
            p.t_a, p.t_d, p.t_r
        ));
    }
    if !(p.x > 0.0) {
        return invalid(format!("FFR overdelivery x={} must be positive", p.x));
    }
    PwlCurve::new(vec![
        (0.0, 0.0),
        (p.t_a, p.x / k_p),
        (p.t_d, 1.0 / k_p),
        (p.t_r, 0.0),
    ])
}

/// Reactive-power curve reaching 90% of capacity at `t90` and 100% at `t100`.
pub fn vq_curve(p: &VqParams, d_q: f64) -> Result<PwlCurve> {
    if !(p.t90 > 0.0 && p.t100 > p.t90) {
        return invalid(format!("VQ needs 0 < t90 < t100 (t90={}, t100={})", p.t90, p.t100));
    }
    PwlCurve::new(vec![(0.0, 0.0), (p.t90, 0.9 / d_q), (p.t100, 1.0 / d_q)])
}

fn check_aux(p: &AuxParams) -> Result<()> {
    if !(p.omega_l > 0.0 && p.omega_l < p.omega_h && p.m.is_finite()) {
        return invalid(format!(
            "resonator needs 0 < omega_l < omega_h (omega_l={}, omega_h={})",
            p.omega_l, p.omega_h
        ));
    }
    Ok(())
}

/// `m·bw·s / (s² + bw·s + ω_l ω_h)` with `bw = ω_h - ω_l`.
pub fn aux_tf(p: &AuxParams) -> Result<RationalTf> {
    check_aux(p)?;
    let bw = p.omega_h - p.omega_l;
    RationalTf::new(vec![0.0, p.m * bw], vec![p.omega_l * p.omega_h, bw, 1.0])
}

/// Two-state realization of [`aux_tf`]. The states are kept when `m = 0` so
/// that the loop dimension does not depend on the gain.
pub fn aux_ss(p: &AuxParams) -> Result<StateSpace> {
    check_aux(p)?;
    let bw = p.omega_h - p.omega_l;
    // Scaled so both states carry comparable magnitude near resonance.
    let w0 = (p.omega_l * p.omega_h).sqrt();
    StateSpace::new(
        DMatrix::from_row_slice(2, 2, &[0.0, w0, -w0, -bw]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[0.0, p.m * bw]),
    )
}

/// Active-power channel (frequency in, power out).
pub fn build_tdes_p(alpha: &AlphaParams, droops: &Droops, pade_order: usize) -> Result<StateSpace> {
    let mut sys = StateSpace::zero(1, 1);
    if let Some(p) = &alpha.fcr {
        sys = sys.parallel(&pwl_step_tf(&fcr_curve(p, droops.d_p)?, 1.0, pade_order)?)?;
    }
    if let Some(p) = &alpha.ffr {
        sys = sys.parallel(&pwl_step_tf(&ffr_curve(p, droops.k_p)?, 1.0, pade_order)?)?;
    }
    if let Some(p) = &alpha.aux {
        sys = sys.parallel(&aux_ss(p)?)?;
    }
    Ok(sys)
}

/// Reactive-power channel (voltage in, power out).
pub fn build_tdes_q(alpha: &AlphaParams, droops: &Droops, pade_order: usize) -> Result<StateSpace> {
    pwl_step_tf(&vq_curve(&alpha.vq, droops.d_q)?, 1.0, pade_order)
}

/// Desired response `T_des`: inputs `[Δf, Δv]`, outputs `[Δp, Δq]`,
/// block-diagonal.
pub fn build_tdes(alpha: &AlphaParams, droops: &Droops, pade_order: usize) -> Result<StateSpace> {
    droops.validate()?;
    alpha.validate()?;
    let p = build_tdes_p(alpha, droops, pade_order)?;
    let q = build_tdes_q(alpha, droops, pade_order)?;
    Ok(p.append(&q))
}

/// Cheapest feasible parameters: every product at its slowest admissible
/// setting, no resonator gain.
pub fn baseline_alpha(limits: &LimitSet) -> AlphaParams {
    let g = &limits.grid_code;
    let t_a_ffr = g.t_a_max_ffr;
    let t_d = t_a_ffr + g.t_d_min_offset_ffr;
    AlphaParams {
        fcr: Some(FcrParams {
            t_i: g.t_i_max_fcr,
            t_a: g.t_a_max_fcr,
        }),
        ffr: Some(FfrParams {
            t_a: t_a_ffr,
            t_d,
            t_r: t_d + g.t_r_min_offset_ffr,
            x: 1.0,
        }),
        aux: Some(AuxParams {
            omega_l: g.omega_min,
            omega_h: g.omega_max,
            m: 0.0,
        }),
        vq: VqParams {
            t90: g.t90_max_vq,
            t100: g.t100_max_vq,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn fcr_final_value() {
        let c = fcr_curve(&FcrParams { t_i: 2.0, t_a: 30.0 }, -0.05).unwrap();
        assert!((c.final_value() + 20.0).abs() < 1e-12);
        assert!((c.value_at(16.0) + 10.0).abs() < 1e-12);
        let r = fcr_curve(&FcrParams { t_i: 0.0, t_a: 1.0 }, 1.0).unwrap();
        assert!((r.value_at(0.25) - 0.25).abs() < 1e-12);
        assert!(fcr_curve(&FcrParams { t_i: 2.0, t_a: 2.0 }, -0.05).is_err());
    }

    #[test]
    fn ffr_baseline_points() {
        let c = ffr_curve(&FfrParams { t_a: 2.0, t_d: 10.0, t_r: 20.0, x: 1.0 }, -0.04).unwrap();
        assert_eq!(c.points(), &[(0.0, 0.0), (2.0, -25.0), (10.0, -25.0), (20.0, 0.0)]);
        assert!(ffr_curve(&FfrParams { t_a: 2.0, t_d: 1.0, t_r: 20.0, x: 1.0 }, -0.04).is_err());
    }

    #[test]
    fn vq_points() {
        let c = vq_curve(&VqParams { t90: 5.0, t100: 60.0 }, -0.04).unwrap();
        assert!((c.value_at(5.0) + 22.5).abs() < 1e-12);
        assert!((c.final_value() + 25.0).abs() < 1e-12);
        assert!(vq_curve(&VqParams { t90: 0.29, t100: 0.30 }, -0.04).is_ok());
    }

    #[test]
    fn resonator_peak_and_zero_gain() {
        let p = AuxParams { omega_l: 1.0, omega_h: 4.0, m: 2.0 };
        let tf = aux_tf(&p).unwrap();
        assert!((tf.eval(Complex64::new(0.0, 2.0)).norm() - 2.0).abs() < 1e-12);
        let ss = aux_ss(&p).unwrap();
        assert!((ss.eval(Complex64::new(0.0, 2.0)).unwrap()[(0, 0)].norm() - 2.0).abs() < 1e-12);
        let z = aux_ss(&AuxParams { m: 0.0, ..p }).unwrap();
        assert_eq!(z.n_states(), 2);
        assert!(z.dc_gain().unwrap()[(0, 0)] == 0.0);
        assert!(aux_tf(&AuxParams { omega_l: 4.0, omega_h: 1.0, m: 1.0 }).is_err());
    }

    #[test]
    fn baseline_values() {
        let a = baseline_alpha(&LimitSet::default());
        assert_eq!(a.to_vec()[..6], [2.0, 30.0, 2.0, 10.0, 20.0, 1.0]);
        assert_eq!(a.aux.unwrap().m, 0.0);
        assert_eq!((a.vq.t90, a.vq.t100), (5.0, 60.0));
    }

    #[test]
    fn tdes_dc_gains() {
        let a = baseline_alpha(&LimitSet::default());
        let t = build_tdes(&a, &Droops::default(), 4).unwrap();
        let g = t.dc_gain().unwrap();
        assert!((g[(0, 0)] + 20.0).abs() < 1e-9);
        assert!((g[(1, 1)] + 25.0).abs() < 1e-9);
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(1, 0)], 0.0);
        assert_eq!(t.n_states(), 2 * 4 + 3 * 4 + 2 + 2 * 4);

        let mut no_fcr = a;
        no_fcr.fcr = None;
        let t2 = build_tdes(&no_fcr, &Droops::default(), 4).unwrap();
        assert!(t2.dc_gain().unwrap()[(0, 0)].abs() < 1e-9);
    }
}
