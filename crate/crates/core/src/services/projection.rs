//! Exact Euclidean projection onto the linear constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::services::constraints::linear_constraints;
use crate::services::{AlphaParams, Droops, LimitSet};

/// Solves `min ½‖x − y‖²  s.t.  G x ≤ h` with the Goldfarb–Idnani dual
/// active-set method (identity Hessian, so the unconstrained start is `y`).
pub fn project_polytope(y: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    let n = y.len();
    if g.ncols() != n || g.nrows() != h.len() {
        return Err(Error::Dimension(format!(
            "projection: G is {}x{}, y has {n}, h has {}",
            g.nrows(),
            g.ncols(),
            h.len()
        )));
    }
    let m = g.nrows();
    // Constraint i reads n_iᵀx ≥ b_i with n_i = -G_i, b_i = -h_i.
    let normal = |i: usize| -> DVector<f64> { -g.row(i).transpose() };
    let norms: Vec<f64> = (0..m).map(|i| g.row(i).norm().max(f64::MIN_POSITIVE)).collect();
    let tol = 1e-13 * (1.0 + y.amax() + h.amax());

    let mut x = y.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();

    for _ in 0..(50 * (m + n) + 100) {
        // Most violated constraint, measured as a distance.
        let mut pick: Option<(usize, f64)> = None;
        for i in (0..m).filter(|i| !active.contains(i)) {
            let s = (h[i] - g.row(i).dot(&x.transpose())) / norms[i];
            if s < -tol && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((i, s));
            }
        }
        let Some((p, _)) = pick else {
            return Ok(x);
        };
        let np = normal(p);
        let mut u_plus = u.clone();
        u_plus.push(0.0);

        loop {
            let q = active.len();
            let (r, z) = if q == 0 {
                (DVector::zeros(0), np.clone())
            } else {
                let nmat = DMatrix::from_fn(n, q, |row, k| -g[(active[k], row)]);
                let gram = nmat.transpose() * &nmat;
                let r = gram
                    .lu()
                    .solve(&(nmat.transpose() * &np))
                    .ok_or_else(|| Error::Singular("dependent active constraints".into()))?;
                let z = &np - &nmat * &r;
                (r, z)
            };

            let mut t1 = f64::INFINITY;
            let mut drop: Option<usize> = None;
            for j in 0..q {
                if r[j] > 1e-14 {
                    let ratio = u_plus[j] / r[j];
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            let zz = z.dot(&np);
            let t2 = if z.norm() > 1e-12 * np.norm() {
                (-h[p] - np.dot(&x)) / zz
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::Infeasible("constraint set is empty".into()));
            }
            for j in 0..q {
                u_plus[j] -= t * r[j];
            }
            u_plus[q] += t;
            if t2.is_finite() {
                x += &z * t;
            }
            if t2 <= t1 {
                active.push(p);
                u = u_plus;
                break;
            }
            let k = drop.expect("partial step has a blocking constraint");
            active.remove(k);
            u_plus.remove(k);
        }
    }
    Err(Error::Singular("projection active-set iteration did not terminate".into()))
}

/// Assembles `G α ≤ h` over the enabled parameters of `alpha`.
pub fn constraint_matrix(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> (DMatrix<f64>, DVector<f64>) {
    let ids = alpha.ids();
    let rows = linear_constraints(alpha, droops, limits);
    let mut g = DMatrix::zeros(rows.len(), ids.len());
    let mut h = DVector::zeros(rows.len());
    for (i, c) in rows.iter().enumerate() {
        for (id, v) in &c.coeffs {
            let j = ids.iter().position(|x| x == id).expect("constraint on an enabled parameter");
            g[(i, j)] += v;
        }
        h[i] = c.rhs;
    }
    (g, h)
}

/// Euclidean projection of `alpha` onto the linear constraints.
pub fn project(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> Result<AlphaParams> {
    let ones = vec![1.0; alpha.ids().len()];
    project_scaled(alpha, droops, limits, &ones)
}

/// Projection in the metric `Σ ((α_i − y_i)/scale_i)²`.
pub fn project_scaled(
    alpha: &AlphaParams,
    droops: &Droops,
    limits: &LimitSet,
    scale: &[f64],
) -> Result<AlphaParams> {
    project_scaled_with(alpha, droops, limits, scale, &[])
}

/// [`project_scaled`] with additional half-spaces `a·α ≤ b` over the
/// enabled parameters.
pub fn project_scaled_with(
    alpha: &AlphaParams,
    droops: &Droops,
    limits: &LimitSet,
    scale: &[f64],
    extra: &[(Vec<f64>, f64)],
) -> Result<AlphaParams> {
    let (g0, h0) = constraint_matrix(alpha, droops, limits);
    let y = alpha.to_vec();
    if scale.len() != y.len() || scale.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Dimension("projection scale must be positive per parameter".into()));
    }
    if extra.iter().any(|(a, _)| a.len() != y.len()) {
        return Err(Error::Dimension("extra constraint has the wrong width".into()));
    }
    let rows = g0.nrows() + extra.len();
    let mut g = DMatrix::zeros(rows, y.len());
    let mut h = DVector::zeros(rows);
    g.rows_mut(0, g0.nrows()).copy_from(&g0);
    h.rows_mut(0, g0.nrows()).copy_from(&h0);
    for (k, (a, b)) in extra.iter().enumerate() {
        for (j, v) in a.iter().enumerate() {
            g[(g0.nrows() + k, j)] = *v;
        }
        h[g0.nrows() + k] = *b;
    }
    let v = DVector::from_iterator(y.len(), y.iter().zip(scale).map(|(a, s)| a / s));
    let gs = DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * scale[j]);
    let pv = project_polytope(&v, &gs, &h)?;
    let z: Vec<f64> = pv.iter().zip(scale).map(|(a, s)| a * s).collect();
    alpha.with_vec(&z)
}
