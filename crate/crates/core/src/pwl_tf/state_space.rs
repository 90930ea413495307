use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::stability;

/// Strictly proper continuous-time realization `ẋ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("state-space matrices must be finite".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Stateless zero system.
    pub fn zero(inputs: usize, outputs: usize) -> Self {
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, inputs),
            c: DMatrix::zeros(outputs, 0),
        }
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_stable(&self) -> bool {
        stability::is_hurwitz(&self.a, 0.0)
    }

    /// `C (sI - A)⁻¹ B`.
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.n_states();
        if n == 0 {
            return Ok(DMatrix::zeros(self.n_outputs(), self.n_inputs()));
        }
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let d = if i == j { s } else { Complex64::new(0.0, 0.0) };
            d - self.a[(i, j)]
        });
        let b = self.b.map(|v| Complex64::new(v, 0.0));
        let x = m
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular(format!("sI - A is singular at s = {s}")))?;
        Ok(self.c.map(|v| Complex64::new(v, 0.0)) * x)
    }

    /// Frequency response at each `omega` (rad/s).
    pub fn freq_response(&self, omegas: &[f64]) -> Result<Vec<DMatrix<Complex64>>> {
        if let Some(w) = omegas.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid(format!("frequency {w} must be positive")));
        }
        let eigs = stability::eigenvalues(&self.a);
        let scale = self.a.norm().max(1.0);
        omegas
            .iter()
            .map(|&w| {
                let hit = eigs
                    .iter()
                    .any(|l| (l - Complex64::new(0.0, w)).norm() <= 1e-12 * scale);
                if hit {
                    return Err(Error::Singular(format!(
                        "j{w} is an eigenvalue of A"
                    )));
                }
                self.eval(Complex64::new(0.0, w))
            })
            .collect()
    }

    /// `-C A⁻¹ B`.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        if self.n_states() == 0 {
            return Ok(DMatrix::zeros(self.n_outputs(), self.n_inputs()));
        }
        let x = self
            .a
            .clone()
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::Singular("A is singular; DC gain undefined".into()))?;
        Ok(-(&self.c * x))
    }

    /// Parallel connection: shared inputs, summed outputs.
    pub fn parallel(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.n_inputs() != other.n_inputs() || self.n_outputs() != other.n_outputs() {
            return Err(Error::Dimension("parallel connection needs equal I/O sizes".into()));
        }
        let (n1, n2) = (self.n_states(), other.n_states());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DMatrix::zeros(n1 + n2, self.n_inputs());
        b.view_mut((0, 0), (n1, self.n_inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.n_inputs())).copy_from(&other.b);
        let mut c = DMatrix::zeros(self.n_outputs(), n1 + n2);
        c.view_mut((0, 0), (self.n_outputs(), n1)).copy_from(&self.c);
        c.view_mut((0, n1), (self.n_outputs(), n2)).copy_from(&other.c);
        Ok(StateSpace { a, b, c })
    }

    /// Block-diagonal append: inputs and outputs are stacked.
    pub fn append(&self, other: &StateSpace) -> StateSpace {
        let (n1, n2) = (self.n_states(), other.n_states());
        let (m1, m2) = (self.n_inputs(), other.n_inputs());
        let (p1, p2) = (self.n_outputs(), other.n_outputs());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DMatrix::zeros(n1 + n2, m1 + m2);
        b.view_mut((0, 0), (n1, m1)).copy_from(&self.b);
        b.view_mut((n1, m1), (n2, m2)).copy_from(&other.b);
        let mut c = DMatrix::zeros(p1 + p2, n1 + n2);
        c.view_mut((0, 0), (p1, n1)).copy_from(&self.c);
        c.view_mut((p1, n1), (p2, n2)).copy_from(&other.c);
        StateSpace { a, b, c }
    }

    /// Exact zero-order-hold discretization.
    pub fn discretize(&self, dt: f64) -> Result<Discrete> {
        if !(dt > 0.0) {
            return Err(Error::Invalid(format!("time step {dt} must be positive")));
        }
        let (n, m) = (self.n_states(), self.n_inputs());
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * dt));
        let e = if n + m == 0 { aug } else { aug.exp() };
        Ok(Discrete {
            phi: e.view((0, 0), (n, n)).into_owned(),
            gamma: e.view((0, n), (n, m)).into_owned(),
            c: self.c.clone(),
            dt,
        })
    }
}

/// Zero-order-hold discrete model `x⁺ = Φ x + Γ u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct Discrete {
    pub phi: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub dt: f64,
}

impl Discrete {
    /// Simulates from zero initial state. `u` is `samples × inputs`; the
    /// result is `samples × outputs` with `y[k] = C x[k]`.
    pub fn simulate(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if u.ncols() != self.gamma.ncols() {
            return Err(Error::Dimension(format!(
                "input has {} channels, system expects {}",
                u.ncols(),
                self.gamma.ncols()
            )));
        }
        let n = self.phi.nrows();
        let mut x = DVector::zeros(n);
        let mut y = DMatrix::zeros(u.nrows(), self.c.nrows());
        let mut next = DVector::zeros(n);
        for k in 0..u.nrows() {
            let yk = &self.c * &x;
            y.row_mut(k).copy_from(&yk.transpose());
            next.gemv(1.0, &self.phi, &x, 0.0);
            next.gemv(1.0, &self.gamma, &u.row(k).transpose(), 1.0);
            std::mem::swap(&mut x, &mut next);
        }
        Ok(y)
    }
}

/// Plain-text record of a realization: dimensions plus row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpaceRecord {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<&StateSpace> for StateSpaceRecord {
    fn from(s: &StateSpace) -> Self {
        Self {
            states: s.n_states(),
            inputs: s.n_inputs(),
            outputs: s.n_outputs(),
            a: row_major(&s.a),
            b: row_major(&s.b),
            c: row_major(&s.c),
        }
    }
}

impl TryFrom<StateSpaceRecord> for StateSpace {
    type Error = Error;
    fn try_from(r: StateSpaceRecord) -> Result<Self> {
        let (n, m, p) = (r.states, r.inputs, r.outputs);
        if r.a.len() != n * n || r.b.len() != n * m || r.c.len() != p * n {
            return Err(Error::Dimension("state-space record sizes do not match dims".into()));
        }
        StateSpace::new(
            DMatrix::from_row_slice(n, n, &r.a),
            DMatrix::from_row_slice(n, m, &r.b),
            DMatrix::from_row_slice(p, n, &r.c),
        )
    }
}
