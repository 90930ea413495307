//! Continuous Lyapunov equation `A P + P Aᵀ + Q = 0`.

use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::lti::stability::max_real_eig;

/// Eigenvalues with real part at or above `-STABILITY_EPS` make the solve fail.
pub const STABILITY_EPS: f64 = 1e-9;

/// Solves `A P + P Aᵀ + Q = 0` for Hurwitz `A` and symmetric `Q`.
///
/// Uses a real Schur factorization followed by block back-substitution
/// (Bartels–Stewart). The result is symmetrized before returning. If the
/// Schur route leaves a residual above the acceptance bound and `n <= 30`,
/// the dense Kronecker solve is used instead.
pub fn lyap_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "lyapunov: A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let growth = max_real_eig(a);
    if !(growth < -STABILITY_EPS) {
        return Err(Error::Unstable(format!(
            "lyapunov: max real eigenvalue {growth:e}"
        )));
    }

    let p = bartels_stewart(a, q)?;
    if n <= 30 && residual_ratio(a, &p, q) > 1e-8 {
        return lyap_kron(a, q);
    }
    Ok(p)
}

/// Scaled residual `‖A P + P Aᵀ + Q‖_F / (‖A‖_F ‖P‖_F + ‖Q‖_F)`.
pub fn residual_ratio(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let r = a * p + p * a.transpose() + q;
    let scale = a.norm() * p.norm() + q.norm();
    if scale == 0.0 {
        return r.norm();
    }
    r.norm() / scale
}

/// Dense solve of the vectorized equation `(I ⊗ A + A ⊗ I) vec(P) = -vec(Q)`.
///
/// O(n⁶); meant for small systems and as an independent cross-check.
pub fn lyap_kron(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = kron_sum(a, a);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("kronecker lyapunov system".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok(symmetrize(&p))
}

/// `I ⊗ A + B ⊗ I` for column-major vectorization of `A X + X Bᵀ`.
fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(na * nb, na * nb);
    for j in 0..nb {
        for i in 0..na {
            for k in 0..na {
                m[(j * na + i, j * na + k)] += a[(i, k)];
            }
        }
    }
    for j in 0..nb {
        for l in 0..nb {
            let bjl = b[(j, l)];
            if bjl == 0.0 {
                continue;
            }
            for i in 0..na {
                m[(j * na + i, l * na + i)] += bjl;
            }
        }
    }
    m
}

pub(crate) fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Diagonal block boundaries of a quasi-upper-triangular matrix.
fn schur_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 0..n {
        let closes = i + 1 == n || t[(i + 1, i)] == 0.0;
        if closes {
            blocks.push((start, i + 1));
            start = i + 1;
        }
    }
    blocks
}

fn bartels_stewart(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let (u, t) = Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Singular("real Schur decomposition did not converge".into()))?
        .unpack();
    let qt = u.transpose() * q * &u;
    let blocks = schur_blocks(&t);
    let mut y = DMatrix::<f64>::zeros(n, n);

    // T Y + Y Tᵀ = -Q̃, solved from the bottom-right block upwards.
    for (bj, &(j0, j1)) in blocks.iter().enumerate().rev() {
        for (bi, &(i0, i1)) in blocks.iter().enumerate().rev() {
            let (ri, rj) = (i1 - i0, j1 - j0);
            let mut rhs = -qt.view((i0, j0), (ri, rj)).into_owned();
            if bi + 1 < blocks.len() {
                let k0 = blocks[bi + 1].0;
                rhs -= t.view((i0, k0), (ri, n - k0)) * y.view((k0, j0), (n - k0, rj));
            }
            if bj + 1 < blocks.len() {
                let l0 = blocks[bj + 1].0;
                rhs -= y.view((i0, l0), (ri, n - l0)) * t.view((j0, l0), (rj, n - l0)).transpose();
            }
            let tii = t.view((i0, i0), (ri, ri)).into_owned();
            let tjj = t.view((j0, j0), (rj, rj)).into_owned();
            let block = small_sylvester(&tii, &tjj, &rhs)?;
            y.view_mut((i0, j0), (ri, rj)).copy_from(&block);
        }
    }
    Ok(symmetrize(&(&u * y * u.transpose())))
}

/// Solves `T11 X + X T22ᵀ = R` for blocks of size at most a few rows.
fn small_sylvester(t11: &DMatrix<f64>, t22: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, k) = (t11.nrows(), t22.nrows());
    if m == 1 && k == 1 {
        let d = t11[(0, 0)] + t22[(0, 0)];
        if d == 0.0 {
            return Err(Error::Singular("lyapunov diagonal block".into()));
        }
        return Ok(DMatrix::from_element(1, 1, r[(0, 0)] / d));
    }
    let op = kron_sum(t11, t22);
    let rhs = DVector::from_column_slice(r.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("lyapunov block".into()))?;
    Ok(DMatrix::from_column_slice(m, k, sol.as_slice()))
}
