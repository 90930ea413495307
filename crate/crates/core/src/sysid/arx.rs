//! MISO ARX estimation per output channel.
//!
//! The regression is posed in the delta operator `δ = (q - 1)/dt`: the model
//! `A(q⁻¹) y = B(q⁻¹) u` spans the same space as
//! `Aδ(δ) y[t] = Bδ(δ) u[t + lo]`, and the monic normalizations coincide, so
//! the least-squares estimate is the same as the shift-form one. The delta
//! basis keeps the regressor well conditioned when every pole sits close to
//! `z = 1`, which is the normal case at 1 kHz.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lti::stability::eigenvalues;
use crate::sysid::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ArxOrders {
    pub na: usize,
    pub nb: usize,
    pub nk: usize,
}

impl ArxOrders {
    pub fn new(na: usize, nb: usize, nk: usize) -> Self {
        Self { na, nb, nk }
    }

    fn lo(&self) -> isize {
        self.na as isize - self.nk as isize - self.nb as isize + 1
    }
}

/// Identified ARX model, stored in delta-operator form. Each output has its
/// own orders because the MISO regressions are independent.
#[derive(Debug, Clone, PartialEq)]
pub struct ArxModel {
    /// Per output.
    pub orders: Vec<ArxOrders>,
    pub dt: f64,
    /// Per output: `α_0 … α_{na-1}` of the monic `Aδ(δ) = δ^na + Σ α_k δ^k`.
    alpha: Vec<Vec<f64>>,
    /// Per output and input: `β_0 … β_{nb-1}` multiplying `δ^k u[t + lo]`.
    beta: Vec<Vec<Vec<f64>>>,
    /// Equation-error variance per output (delta scaling).
    pub residual_var: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(1 + dt·δ)^m` as ascending coefficients.
fn shift_poly(m: usize, dt: f64) -> Vec<f64> {
    (0..=m).map(|k| binomial(m, k) * dt.powi(k as i32)).collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Forward differences `Δ^k x[t] / dt^k` for `k = 0..=order`.
fn differences(x: &[f64], order: usize, dt: f64) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec()];
    for k in 1..=order {
        let prev = &out[k - 1];
        let next: Vec<f64> = prev.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        out.push(next);
    }
    out
}

impl ArxModel {
    pub fn n_outputs(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.beta.first().map_or(0, |b| b.len())
    }

    /// Denominator and numerators of output `i` in the delta domain with a
    /// monic denominator, lags folded in.
    fn delta_tf(&self, i: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let lo = self.orders[i].lo();
        let mut den = self.alpha[i].clone();
        den.push(1.0);
        let extra_den = (-lo).max(0) as usize;
        let extra_num = lo.max(0) as usize;
        let scale = self.dt.powi(extra_den as i32);
        let den = poly_mul(&den, &shift_poly(extra_den, self.dt))
            .into_iter()
            .map(|v| v / scale)
            .collect();
        let nums = self.beta[i]
            .iter()
            .map(|b| {
                poly_mul(b, &shift_poly(extra_num, self.dt))
                    .into_iter()
                    .map(|v| v / scale)
                    .collect()
            })
            .collect();
        (den, nums)
    }

    /// Shift-form `A_i(q⁻¹)`, coefficients of `q^0 … q^{-na}` (leading 1).
    pub fn a_poly(&self, i: usize) -> Vec<f64> {
        let na = self.orders[i].na;
        let mut alpha = self.alpha[i].clone();
        alpha.push(1.0);
        // T^na Σ α_k δ^k = Σ α_k T^{na-k} (q - 1)^k
        let mut fwd = vec![0.0; na + 1]; // ascending powers of q
        for (k, ak) in alpha.iter().enumerate() {
            let c = ak * self.dt.powi((na - k) as i32);
            for (m, f) in fwd.iter_mut().enumerate().take(k + 1) {
                let sign = if (k - m) % 2 == 0 { 1.0 } else { -1.0 };
                *f += c * binomial(k, m) * sign;
            }
        }
        fwd.reverse();
        fwd
    }

    /// Shift-form `B_ij(q⁻¹)`, coefficients of `q^{-nk} … q^{-(nk+nb-1)}`.
    pub fn b_poly(&self, i: usize, j: usize) -> Vec<f64> {
        let nb = self.orders[i].nb;
        let na = self.orders[i].na;
        // Σ β_k δ^k q^lo u, δ^k = (q-1)^k / T^k, scaled by T^na
        let mut fwd = vec![0.0; nb];
        for (k, bk) in self.beta[i][j].iter().enumerate() {
            let c = bk * self.dt.powi(na as i32 - k as i32);
            for (m, f) in fwd.iter_mut().enumerate().take(k + 1) {
                let sign = if (k - m) % 2 == 0 { 1.0 } else { -1.0 };
                *f += c * binomial(k, m) * sign;
            }
        }
        // fwd[m] multiplies q^{m + lo}, i.e. lag na - m - lo = nk + nb - 1 - m
        fwd.reverse();
        fwd
    }

    /// Delta-domain state-space realization of the whole model.
    pub fn to_delta_ss(&self) -> DeltaModel {
        let p = self.n_outputs();
        let m = self.n_inputs();
        let parts: Vec<_> = (0..p).map(|i| self.delta_tf(i)).collect();
        let n: usize = parts.iter().map(|(d, _)| d.len() - 1).sum();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, m);
        let mut c = DMatrix::zeros(p, n);
        let mut d = DMatrix::zeros(p, m);
        let mut off = 0;
        for (i, (den, nums)) in parts.iter().enumerate() {
            let nd = den.len() - 1;
            // Observer canonical form.
            for r in 0..nd {
                a[(off + r, off)] = -den[nd - 1 - r];
                if r + 1 < nd {
                    a[(off + r, off + r + 1)] = 1.0;
                }
            }
            c[(i, off)] = 1.0;
            for (j, num) in nums.iter().enumerate() {
                let mut num = num.clone();
                num.resize(nd + 1, 0.0);
                let lead = num[nd];
                d[(i, j)] = lead;
                for r in 0..nd {
                    let k = nd - 1 - r;
                    b[(off + r, j)] = num[k] - lead * den[k];
                }
            }
            off += nd;
        }
        DeltaModel {
            a,
            b,
            c,
            d,
            dt: self.dt,
        }
    }

    pub fn simulate(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.to_delta_ss().simulate(u)
    }
}

/// Discrete-time model `x[k+1] = x[k] + dt (A x[k] + B u[k])`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub dt: f64,
}

impl DeltaModel {
    /// Eigenvalues of the shift-form transition matrix `I + dt A`.
    pub fn poles(&self) -> Vec<Complex64> {
        eigenvalues(&self.a)
            .into_iter()
            .map(|l| Complex64::new(1.0, 0.0) + l * self.dt)
            .collect()
    }

    pub fn is_stable(&self) -> bool {
        self.a
            .iter()
            .all(|v| v.is_finite())
            && self.poles().iter().all(|z| z.norm() < 1.0 - 1e-12)
    }

    pub fn simulate(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if u.ncols() != self.b.ncols() {
            return Err(Error::Dimension(format!(
                "input has {} channels, model expects {}",
                u.ncols(),
                self.b.ncols()
            )));
        }
        let n = self.a.nrows();
        let phi = DMatrix::identity(n, n) + &self.a * self.dt;
        let gamma = &self.b * self.dt;
        let mut x = DVector::zeros(n);
        let mut y = DMatrix::zeros(u.nrows(), self.c.nrows());
        for k in 0..u.nrows() {
            let uk = u.row(k).transpose();
            let yk = &self.c * &x + &self.d * &uk;
            y.row_mut(k).copy_from(&yk.transpose());
            x = &phi * x + &gamma * uk;
        }
        Ok(y)
    }

    /// Response at `z = e^{jω dt}` for each `ω` (rad/s).
    pub fn freq_response(&self, omegas: &[f64]) -> Result<Vec<DMatrix<Complex64>>> {
        let n = self.a.nrows();
        let ac = self.a.map(|v| Complex64::new(v, 0.0));
        let bc = self.b.map(|v| Complex64::new(v, 0.0));
        let cc = self.c.map(|v| Complex64::new(v, 0.0));
        let dc = self.d.map(|v| Complex64::new(v, 0.0));
        omegas
            .iter()
            .map(|w| {
                let z = Complex64::new(0.0, w * self.dt).exp();
                let delta = (z - 1.0) / self.dt;
                let m = DMatrix::from_diagonal_element(n, n, delta) - &ac;
                let x = m
                    .lu()
                    .solve(&bc)
                    .ok_or_else(|| Error::Singular(format!("model pole on the unit circle at ω={w}")))?;
                Ok(&cc * x + &dc)
            })
            .collect()
    }
}

/// Options for [`fit_arx_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Upper bound on Steiglitz–McBride refinement passes (prefiltering by
    /// `1/Â`), which move the estimate from equation error toward output
    /// error. Iteration stops early once the denominator settles.
    pub sm_iterations: usize,
    /// When set, order selection passes over candidates that this rule
    /// cannot take to continuous time (for the exact ZOH inverse: discrete
    /// poles on the negative real axis, which noise tends to produce at high
    /// orders).
    pub require_d2c: Option<crate::sysid::D2c>,
}

/// Filters `x` by `1/Aδ(δ)` (monic `den`, ascending, last entry 1).
fn inverse_filter(den: &[f64], dt: f64, x: &[f64]) -> Vec<f64> {
    let n = den.len() - 1;
    // Controllable canonical: x_{r}' = x_{r+1}, x_n' = -Σ den_k x_k + u, y = x_1
    let mut s = vec![0.0; n];
    let mut out = Vec::with_capacity(x.len());
    for &u in x {
        out.push(s[0]);
        let mut top = u;
        for k in 0..n {
            top -= den[k] * s[k];
        }
        let mut next = s.clone();
        for r in 0..n - 1 {
            next[r] += dt * s[r + 1];
        }
        next[n - 1] += dt * top;
        s = next;
    }
    out
}

struct Regression {
    alpha: Vec<f64>,
    beta: Vec<Vec<f64>>,
    residual_var: f64,
}

fn solve_channel(y: &[f64], us: &[Vec<f64>], orders: ArxOrders, dt: f64, channel: usize) -> Result<Regression> {
    let ArxOrders { na, nb, .. } = orders;
    let lo = orders.lo();
    let n = y.len();
    let t0 = (-lo).max(0) as usize;
    // last usable t: t + na <= n-1 and t + lo + nb - 1 <= n-1
    let t_end_y = n - 1 - na;
    let t_end_u = (n as isize - 1 - lo - nb as isize + 1) as usize;
    let t1 = t_end_y.min(t_end_u);
    if t1 < t0 + na + nb * us.len() {
        return invalid("too few samples for the requested orders");
    }
    let rows = t1 - t0 + 1;
    let yd = differences(y, na, dt);
    let ud: Vec<Vec<Vec<f64>>> = us.iter().map(|u| differences(u, nb.saturating_sub(1), dt)).collect();
    let p = na + nb * us.len();
    let mut x = DMatrix::zeros(rows, p + 1);
    for r in 0..rows {
        let t = t0 + r;
        for k in 0..na {
            x[(r, k)] = yd[k][t];
        }
        for (j, d) in ud.iter().enumerate() {
            let tu = (t as isize + lo) as usize;
            for k in 0..nb {
                x[(r, na + j * nb + k)] = d[k][tu];
            }
        }
        x[(r, p)] = yd[na][t];
    }
    // Unit-norm columns so that the rank test is scale-free.
    let mut scales = vec![1.0; p];
    for (k, s) in scales.iter_mut().enumerate() {
        let norm = x.column(k).norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient { channel });
        }
        *s = norm;
        x.column_mut(k).unscale_mut(norm);
    }
    let r = x.qr().r();
    let rx = r.view((0, 0), (p, p)).into_owned();
    let rb = r.view((0, p), (p, 1)).into_owned();
    let diag_max = (0..p).map(|i| rx[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| rx[(i, i)].abs() <= 1e-10 * diag_max) {
        return Err(Error::RankDeficient { channel });
    }
    let theta = rx
        .solve_upper_triangular(&rb)
        .ok_or(Error::RankDeficient { channel })?;
    let resid = if r.nrows() > p { r[(p, p)].abs() } else { 0.0 };
    let alpha = (0..na).map(|k| -theta[k] / scales[k]).collect();
    let beta = (0..us.len())
        .map(|j| (0..nb).map(|k| theta[na + j * nb + k] / scales[na + j * nb + k]).collect())
        .collect();
    Ok(Regression {
        alpha,
        beta,
        residual_var: resid * resid / rows as f64,
    })
}

fn stable_den(alpha: &[f64], dt: f64) -> bool {
    let n = alpha.len();
    let mut a = DMatrix::zeros(n, n);
    for r in 0..n {
        a[(r, 0)] = -alpha[n - 1 - r];
        if r + 1 < n {
            a[(r, r + 1)] = 1.0;
        }
    }
    eigenvalues(&a)
        .iter()
        .all(|l| (Complex64::new(1.0, 0.0) + l * dt).norm() < 1.0)
}

/// Least-squares ARX fit, one MISO regression per output.
pub fn fit_arx(train: &Dataset, orders: ArxOrders) -> Result<ArxModel> {
    fit_arx_with(train, orders, FitOptions::default())
}

pub fn fit_arx_with(train: &Dataset, orders: ArxOrders, opts: FitOptions) -> Result<ArxModel> {
    fit_arx_per_output(train, &vec![orders; train.y.ncols()], opts)
}

/// Fit with separate orders for every output channel.
pub fn fit_arx_per_output(train: &Dataset, orders: &[ArxOrders], opts: FitOptions) -> Result<ArxModel> {
    if orders.len() != train.y.ncols() {
        return Err(Error::Dimension(format!(
            "{} order triples for {} outputs",
            orders.len(),
            train.y.ncols()
        )));
    }
    let dt = train.dt;
    let us: Vec<Vec<f64>> = (0..train.u.ncols())
        .map(|j| train.u.column(j).iter().copied().collect())
        .collect();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut residual_var = Vec::new();
    for (i, &ord) in orders.iter().enumerate() {
        let ArxOrders { na, nb, .. } = ord;
        if na == 0 || nb == 0 {
            return invalid("ARX orders na and nb must be at least 1");
        }
        if train.len() <= 10 * (na + nb) {
            return invalid(format!(
                "{} samples are not enough for na={na}, nb={nb}",
                train.len()
            ));
        }
        let y: Vec<f64> = train.y.column(i).iter().copied().collect();
        if y.iter().all(|v| *v == 0.0) {
            // Nothing to explain: all poles at the origin, no input path.
            let a: Vec<f64> = (0..na)
                .map(|k| binomial(na, k) * dt.powi(k as i32 - na as i32))
                .collect();
            alpha.push(a);
            beta.push(vec![vec![0.0; nb]; us.len()]);
            residual_var.push(0.0);
            continue;
        }
        let mut reg = solve_channel(&y, &us, ord, dt, i)?;
        for _ in 0..opts.sm_iterations {
            if !stable_den(&reg.alpha, dt) {
                break;
            }
            let mut den = reg.alpha.clone();
            den.push(1.0);
            let yf = inverse_filter(&den, dt, &y);
            let uf: Vec<Vec<f64>> = us.iter().map(|u| inverse_filter(&den, dt, u)).collect();
            match solve_channel(&yf, &uf, ord, dt, i) {
                Ok(next) if stable_den(&next.alpha, dt) => {
                    let change = next
                        .alpha
                        .iter()
                        .zip(&reg.alpha)
                        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
                        .fold(0.0, f64::max);
                    reg = next;
                    if change < 1e-9 {
                        break;
                    }
                }
                _ => break,
            }
        }
        alpha.push(reg.alpha);
        beta.push(reg.beta);
        residual_var.push(reg.residual_var);
    }
    Ok(ArxModel {
        orders: orders.to_vec(),
        dt,
        alpha,
        beta,
        residual_var,
    })
}
