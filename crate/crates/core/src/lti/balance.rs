//! Square-root balanced realization and truncation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lti::lyap::lyap_solve;
use crate::pwl_tf::StateSpace;

/// Balanced (possibly truncated) realization with its Hankel singular values.
#[derive(Debug, Clone)]
pub struct Balanced {
    pub system: StateSpace,
    /// All Hankel singular values of the input system, descending.
    pub hankel: Vec<f64>,
    /// `2 Σ` of the discarded Hankel singular values.
    pub error_bound: f64,
}

/// Controllability and observability Gramians of a stable system.
pub fn gramians(sys: &StateSpace) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = lyap_solve(&sys.a, &(&sys.b * sys.b.transpose()))?;
    let q = lyap_solve(&sys.a.transpose(), &(sys.c.transpose() * &sys.c))?;
    Ok((p, q))
}

/// Factor `S` with `S Sᵀ = M` for symmetric PSD `M` (negative eigenvalues
/// from round-off are clipped).
fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// Balances `sys` and keeps the `order` states with the largest Hankel
/// singular values (all states when `order >= n`).
pub fn balanced_truncation(sys: &StateSpace, order: usize) -> Result<Balanced> {
    let n = sys.n_states();
    if n == 0 {
        return Ok(Balanced {
            system: sys.clone(),
            hankel: Vec::new(),
            error_bound: 0.0,
        });
    }
    if !sys.is_stable() {
        return Err(Error::Unstable("balanced truncation needs a stable system".into()));
    }
    let (p, q) = gramians(sys)?;
    let sc = psd_factor(&p);
    let so = psd_factor(&q);
    let svd = (so.transpose() * &sc).svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sigma = svd.singular_values;

    let mut idx: Vec<usize> = (0..sigma.len()).collect();
    idx.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let hankel: Vec<f64> = idx.iter().map(|&i| sigma[i]).collect();

    let positive = hankel.iter().take_while(|&&s| s > hankel[0] * 1e-15).count();
    let r = order.min(n).min(positive);
    if r == 0 {
        return Err(Error::Singular("no positive Hankel singular values".into()));
    }
    let keep = &idx[..r];
    let inv_sqrt = DVector::from_iterator(r, keep.iter().map(|&i| 1.0 / sigma[i].sqrt()));
    let u_r = DMatrix::from_fn(u.nrows(), r, |row, k| u[(row, keep[k])]);
    let v_r = DMatrix::from_fn(vt.ncols(), r, |row, k| vt[(keep[k], row)]);

    let t = &sc * v_r * DMatrix::from_diagonal(&inv_sqrt);
    let tinv = DMatrix::from_diagonal(&inv_sqrt) * u_r.transpose() * so.transpose();
    let system = StateSpace::new(&tinv * &sys.a * &t, &tinv * &sys.b, &sys.c * &t)?;
    let error_bound = 2.0 * hankel[r..].iter().sum::<f64>();
    Ok(Balanced {
        system,
        hankel,
        error_bound,
    })
}
