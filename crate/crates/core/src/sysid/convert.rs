use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwl_tf::StateSpace;
use crate::sysid::{ArxModel, DeltaModel};

/// Feedthrough left by the bilinear map that may be dropped silently.
pub const FEEDTHROUGH_TOL: f64 = 1e-3;

/// Bilinear (Tustin) map of a discrete model in delta form.
///
/// With `K = (2I + dt·A)⁻¹` (equivalently `(I + Φ)⁻¹` up to a factor):
/// `A_c = 2KA`, `B_c = 4KB`, `C_c = CK`, `D_c = D - dt·CKB`. The feedthrough
/// is discarded when small, otherwise the model is rejected.
pub fn delta_to_ct(m: &DeltaModel) -> Result<StateSpace> {
    let n = m.a.nrows();
    let s = DMatrix::identity(n, n) * 2.0 + &m.a * m.dt;
    let k = s
        .try_inverse()
        .ok_or_else(|| Error::Singular("discrete pole at z = -1 has no bilinear image".into()))?;
    let a = &k * &m.a * 2.0;
    let b = &k * &m.b * 4.0;
    let c = &m.c * &k;
    let d = &m.d - &c * &m.b * m.dt;
    if d.norm() >= FEEDTHROUGH_TOL {
        return Err(Error::Invalid(format!(
            "continuous model would need feedthrough of norm {:.3e}",
            d.norm()
        )));
    }
    StateSpace::new(a, b, c)
}

/// Bilinear map of a shift-form model `x[k+1] = Φx + Γu`, `y = Cx + Du`.
pub fn tustin_d2c(
    phi: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    dt: f64,
) -> Result<StateSpace> {
    let n = phi.nrows();
    let m = DeltaModel {
        a: (phi - DMatrix::identity(n, n)) / dt,
        b: gamma / dt,
        c: c.clone(),
        d: d.clone(),
        dt,
    };
    delta_to_ct(&m)
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let mut y = x.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse();
        let zi = z.clone().try_inverse();
        let (Some(yi), Some(zi)) = (yi, zi) else {
            break;
        };
        let next = (&y + zi) * 0.5;
        z = (&z + yi) * 0.5;
        let step = (&next - &y).norm();
        y = next;
        if step <= 1e-14 * y.norm() {
            return Ok(y);
        }
    }
    Err(Error::Singular("matrix square root did not converge".into()))
}

/// `log(I + e)`, scaling by square roots until the series converges fast.
fn logm_shifted(e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = e.nrows();
    let mut e = e.clone();
    let mut scale = 1.0;
    while e.norm() > 0.25 {
        if scale > 1e9 {
            return Err(Error::Singular("matrix logarithm scaling failed".into()));
        }
        e = sqrtm(&(DMatrix::identity(n, n) + &e))? - DMatrix::identity(n, n);
        scale *= 2.0;
    }
    let mut sum = DMatrix::zeros(n, n);
    let mut pow = e.clone();
    for k in 1..200 {
        let term = &pow / k as f64;
        if k % 2 == 1 {
            sum += &term;
        } else {
            sum -= &term;
        }
        if term.norm() <= 1e-17 * sum.norm().max(f64::MIN_POSITIVE) {
            break;
        }
        pow = &pow * &e;
    }
    Ok(sum * scale)
}

/// Exact inverse of zero-order-hold sampling for a model in delta form:
/// `[[A_c, B_c], [0, 0]] = log(I + dt·[[A, B], [0, 0]]) / dt`.
///
/// Recovers the generating continuous system exactly when the data came from
/// piecewise-constant inputs. Discrete poles on the closed negative real
/// axis have no real continuous counterpart and are rejected. A nonzero
/// feedthrough carries over unchanged and is dropped when small.
pub fn delta_to_ct_zoh(m: &DeltaModel) -> Result<StateSpace> {
    let n = m.a.nrows();
    let k = m.b.ncols();
    if m.poles().iter().any(|z| z.re <= 0.0 && z.im.abs() <= 1e-12) {
        return Err(Error::Singular(
            "discrete pole on the negative real axis has no continuous equivalent".into(),
        ));
    }
    let mut e = DMatrix::zeros(n + k, n + k);
    e.view_mut((0, 0), (n, n)).copy_from(&(&m.a * m.dt));
    e.view_mut((0, n), (n, k)).copy_from(&(&m.b * m.dt));
    let l = logm_shifted(&e)? / m.dt;
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("matrix logarithm is not finite".into()));
    }
    if m.d.norm() >= FEEDTHROUGH_TOL {
        return Err(Error::Invalid(format!(
            "continuous model would need feedthrough of norm {:.3e}",
            m.d.norm()
        )));
    }
    StateSpace::new(
        l.view((0, 0), (n, n)).into_owned(),
        l.view((0, n), (n, k)).into_owned(),
        m.c.clone(),
    )
}

/// Discrete-to-continuous conversion rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum D2c {
    /// Bilinear map; carries a half-sample mismatch for ZOH data.
    Tustin,
    /// Exact inverse of zero-order-hold sampling.
    #[default]
    Zoh,
}

/// Continuous-time equivalent of an identified ARX model under `method`.
pub fn arx_to_ct_with(model: &ArxModel, method: D2c) -> Result<StateSpace> {
    let m = model.to_delta_ss();
    match method {
        D2c::Tustin => delta_to_ct(&m),
        D2c::Zoh => delta_to_ct_zoh(&m),
    }
}

/// Continuous-time equivalent of an identified ARX model (bilinear map).
pub fn arx_to_ct(model: &ArxModel) -> Result<StateSpace> {
    delta_to_ct(&model.to_delta_ss())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::stability::eigenvalues;

    #[test]
    fn first_order_pole_map() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let ct = tustin_d2c(&one(0.995), &one(5e-4), &one(1.0), &one(0.0), 1e-3).unwrap();
        // s = (2/T)(z-1)/(z+1)
        assert!((ct.a[(0, 0)] + 2000.0 * 0.005 / 1.995).abs() < 1e-9);
        // DC gain 5e-4/(1-0.995) = 0.1, less the dropped feedthrough -T·CKB
        let dropped = 1e-3 * 5e-4 / 1e-3 / (2.0 - 0.005);
        assert!((ct.dc_gain().unwrap()[(0, 0)] - 0.1 - dropped).abs() < 1e-9);
    }

    #[test]
    fn coarse_sampling_needs_feedthrough() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        assert!(tustin_d2c(&one(0.5), &one(1.0), &one(1.0), &one(0.0), 0.1).is_err());
    }

    #[test]
    fn bilinear_pole_map() {
        // y[k] = 0.5 y[k-1] + u[k-1] at dt = 0.1: s = (2/dt)(z-1)/(z+1) = -20/3.
        // The map itself is fine; the model is then rejected for the
        // feedthrough it would need.
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let m = DeltaModel {
            a: one(-5.0),
            b: one(10.0),
            c: one(1.0),
            d: one(0.0),
            dt: 0.1,
        };
        let k = 1.0 / (2.0 + m.dt * m.a[(0, 0)]);
        assert!((2.0 * k * m.a[(0, 0)] + 20.0 / 3.0).abs() < 1e-12);
        assert!(delta_to_ct(&m).is_err());
    }

    #[test]
    fn zoh_inverse_is_exact() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.1, 1.0, 0.0, -40.0, -0.4, 0.0, 0.0, 0.0, -5.0]);
        let b = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, 0.0, 1.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        let sys = StateSpace::new(a.clone(), b.clone(), c.clone()).unwrap();
        for dt in [1e-3, 0.05, 0.3] {
            let dsys = sys.discretize(dt).unwrap();
            let m = DeltaModel {
                a: (&dsys.phi - DMatrix::identity(3, 3)) / dt,
                b: &dsys.gamma / dt,
                c: c.clone(),
                d: DMatrix::zeros(1, 2),
                dt,
            };
            let ct = delta_to_ct_zoh(&m).unwrap();
            assert!((&ct.a - &a).amax() < 1e-8 * a.amax(), "dt {dt}");
            assert!((&ct.b - &b).amax() < 1e-8 * b.amax(), "dt {dt}");
        }
    }

    #[test]
    fn negative_real_pole_rejected_by_zoh() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        // z = -0.5
        let m = DeltaModel {
            a: one(-15.0),
            b: one(1.0),
            c: one(1.0),
            d: one(0.0),
            dt: 0.1,
        };
        assert!(matches!(delta_to_ct_zoh(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn static_gain_rejected() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        assert!(tustin_d2c(&one(0.0), &one(0.0), &one(0.0), &one(2.0), 0.1).is_err());
    }

    #[test]
    fn pole_at_minus_one_rejected() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let e = tustin_d2c(&one(-1.0), &one(1.0), &one(1.0), &one(0.0), 0.1).unwrap_err();
        assert!(matches!(e, Error::Singular(_)));
    }

    #[test]
    fn stable_maps_to_stable() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.2, 0.9]);
        let gamma = DMatrix::from_row_slice(2, 1, &[0.0, 1e-3]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let ct = tustin_d2c(&phi, &gamma, &c, &DMatrix::zeros(1, 1), 0.01).unwrap();
        assert!(eigenvalues(&ct.a).iter().all(|l| l.re < 0.0));
    }
}
