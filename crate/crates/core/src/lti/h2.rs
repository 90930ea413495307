use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lti::closed_loop::ClosedLoop;
use crate::lti::lyap::lyap_solve;
use crate::lti::stability::{is_hurwitz, DEFAULT_MARGIN};

/// Relative disagreement between the primal and dual traces above which the
/// solve is reported as numerically unreliable.
const DUALITY_LIMIT: f64 = 1e-6;

/// Squared H2 norm with the Gramians that produced it.
#[derive(Debug, Clone)]
pub struct H2Solution {
    pub j: f64,
    /// Controllability Gramian, `AP + PAᵀ + BBᵀ = 0`.
    pub p: DMatrix<f64>,
    /// Observability Gramian, `AᵀQ + QA + CᵀC = 0`.
    pub q: DMatrix<f64>,
    /// `|tr(CPCᵀ) - tr(BᵀQB)| / tr(CPCᵀ)`.
    pub duality_gap: f64,
}

/// Diagonal scaling `d` (powers of two) such that `D⁻¹AD` has rows and
/// columns of comparable norm, by the Parlett–Reinsch iteration. Exact in
/// floating point, so it only changes how well later solves are conditioned.
pub fn balance_scaling(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = vec![1.0; n];
    for _ in 0..100 {
        let mut done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let total = c + r;
            let mut f = 1.0;
            let mut cs = c;
            let mut rs = r;
            while cs < rs / 2.0 {
                f *= 2.0;
                cs *= 2.0;
                rs /= 2.0;
            }
            while cs >= rs * 2.0 {
                f /= 2.0;
                cs /= 2.0;
                rs *= 2.0;
            }
            if cs + rs < 0.95 * total {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    d
}

/// Solves both Lyapunov equations of `(a, b, c)`. The solves run on a
/// balanced copy of the realization, which leaves `J` unchanged; the
/// Gramians are mapped back to the original coordinates.
pub fn h2_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<H2Solution> {
    let n = a.nrows();
    let d = balance_scaling(a);
    let ab = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * d[j] / d[i]);
    let bb = DMatrix::from_fn(n, b.ncols(), |i, j| b[(i, j)] / d[i]);
    let cb = DMatrix::from_fn(c.nrows(), n, |i, j| c[(i, j)] * d[j]);
    let pb = lyap_solve(&ab, &(&bb * bb.transpose()))?;
    let qb = lyap_solve(&ab.transpose(), &(cb.transpose() * &cb))?;
    let primal = (&cb * &pb * cb.transpose()).trace();
    let dual = (bb.transpose() * &qb * &bb).trace();
    let duality_gap = if primal.abs() > 0.0 {
        (primal - dual).abs() / primal.abs()
    } else {
        dual.abs()
    };
    if duality_gap > DUALITY_LIMIT {
        return Err(Error::Singular(format!(
            "Gramian traces disagree (relative gap {duality_gap:.2e})"
        )));
    }
    Ok(H2Solution {
        j: primal,
        p: DMatrix::from_fn(n, n, |i, j| pb[(i, j)] * d[i] * d[j]),
        q: DMatrix::from_fn(n, n, |i, j| qb[(i, j)] / (d[i] * d[j])),
        duality_gap,
    })
}

pub fn h2_closed_loop(cl: &ClosedLoop) -> Result<H2Solution> {
    h2_solve(&cl.a, &cl.b, &cl.c)
}

/// `J = tr(C P Cᵀ)`, or `+∞` when the loop is not stable.
pub fn h2_norm_sq(cl: &ClosedLoop) -> f64 {
    if !is_hurwitz(&cl.a, DEFAULT_MARGIN) {
        return f64::INFINITY;
    }
    h2_closed_loop(cl).map_or(f64::INFINITY, |s| s.j)
}

/// Gradient of `J` and the magnitude of the input/output sensitivity terms.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub j: f64,
    pub grad: Vec<f64>,
    /// Largest `|tr(∂(BBᵀ) Q)|` or `|tr(∂(CᵀC) P)|` over the parameters.
    pub io_terms: f64,
}

fn sensitivity<F>(builder: &F, alpha: &[f64], i: usize, h: f64) -> Result<(ClosedLoop, ClosedLoop)>
where
    F: Fn(&[f64]) -> Result<ClosedLoop>,
{
    let mut up = alpha.to_vec();
    let mut dn = alpha.to_vec();
    up[i] += h;
    dn[i] -= h;
    let p = builder(&up)?;
    let m = builder(&dn)?;
    if p.a.shape() != m.a.shape() {
        return Err(Error::Dimension("realization size changed under perturbation".into()));
    }
    if !is_hurwitz(&p.a, 0.0) || !is_hurwitz(&m.a, 0.0) {
        return Err(Error::Unstable(format!("loop unstable at perturbed parameter {i}")));
    }
    Ok((p, m))
}

/// Gradient of the squared H2 norm by the trace formula
/// `∂J/∂α_i = 2 tr(∂A P Q) + tr(∂(BBᵀ) Q) + tr(∂(CᵀC) P)`, reusing one
/// Gramian pair. The matrix sensitivities come from central differences of
/// the realization map.
pub fn h2_gradient<F>(builder: F, alpha: &[f64]) -> Result<Gradient>
where
    F: Fn(&[f64]) -> Result<ClosedLoop>,
{
    let cl = builder(alpha)?;
    if !is_hurwitz(&cl.a, DEFAULT_MARGIN) {
        return Err(Error::Unstable("closed loop is not stable at the gradient point".into()));
    }
    let sol = h2_closed_loop(&cl)?;
    let pq = &sol.p * &sol.q;
    let mut grad = Vec::with_capacity(alpha.len());
    let mut io_terms: f64 = 0.0;
    for i in 0..alpha.len() {
        let mut h = 1e-6 * alpha[i].abs().max(1.0);
        let (up, dn) = match sensitivity(&builder, alpha, i, h) {
            Ok(pair) => pair,
            Err(_) => {
                h *= 0.1;
                sensitivity(&builder, alpha, i, h)?
            }
        };
        let da = (&up.a - &dn.a) / (2.0 * h);
        let dbb = (&up.b * up.b.transpose() - &dn.b * dn.b.transpose()) / (2.0 * h);
        let dcc = (up.c.transpose() * &up.c - dn.c.transpose() * &dn.c) / (2.0 * h);
        let tb = (dbb * &sol.q).trace();
        let tc = (dcc * &sol.p).trace();
        io_terms = io_terms.max(tb.abs()).max(tc.abs());
        grad.push(2.0 * (da * &pq).trace() + tb + tc);
    }
    Ok(Gradient {
        j: sol.j,
        grad,
        io_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64) -> ClosedLoop {
        let m = |v: f64| DMatrix::from_element(1, 1, v);
        ClosedLoop {
            a: m(-a),
            b: m(1.0),
            c: m(1.0),
            c_meas: m(1.0),
            c_ctrl: m(0.0),
            n_grid: 1,
        }
    }

    #[test]
    fn first_order_norms() {
        assert!((h2_norm_sq(&scalar(1.0)) - 0.5).abs() < 1e-14);
        assert!((h2_norm_sq(&scalar(5.0)) - 0.1).abs() < 1e-14);
        assert_eq!(h2_norm_sq(&scalar(-1.0)), f64::INFINITY);
    }

    #[test]
    fn scalar_gradient() {
        let g = h2_gradient(|v: &[f64]| Ok(scalar(v[0])), &[1.0]).unwrap();
        assert!((g.grad[0] + 0.5).abs() < 1e-6);
        assert_eq!(g.io_terms, 0.0);
    }

    #[test]
    fn balancing_keeps_the_norm() {
        // Badly scaled realization of 1/((s+1)(s+1000)).
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1e6, 0.0, -1000.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1e-6]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let d = balance_scaling(&a);
        assert!(d.iter().all(|v| v.log2().fract() == 0.0));
        let s = h2_solve(&a, &b, &c).unwrap();
        // ∫ h² for h = (e^{-t} - e^{-1000t})/999.
        let exact = (0.5 - 2.0 / 1001.0 + 1.0 / 2000.0) / (999.0f64 * 999.0);
        assert!((s.j - exact).abs() < 1e-12 * exact);
        let p_res = &a * &s.p + &s.p * a.transpose() + &b * b.transpose();
        assert!(p_res.amax() < 1e-12 * s.p.amax() * a.amax());
    }

    #[test]
    fn parameter_without_effect() {
        let g = h2_gradient(|v: &[f64]| Ok(scalar(v[0])), &[2.0, 7.0]).unwrap();
        assert_eq!(g.grad[1], 0.0);
    }
}
