use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pwl_tf::StateSpace;

/// Performance weights and the pole of the approximate integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerfWeights {
    pub r_fdot: f64,
    pub r_f: f64,
    pub r_v: f64,
    pub epsilon: f64,
}

impl Default for PerfWeights {
    fn default() -> Self {
        Self {
            r_fdot: 1.0,
            r_f: 100.0,
            r_v: 1.0,
            epsilon: 1e-3,
        }
    }
}

impl PerfWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.r_fdot, self.r_f, self.r_v];
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || w.iter().all(|v| *v == 0.0) {
            return invalid("weights must be non-negative with at least one positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid("epsilon must be positive");
        }
        Ok(())
    }
}

/// Grid model extended by the two integrator filters `ξ̇ = -εξ + [Δf; Δv]`.
#[derive(Debug, Clone)]
pub struct ExtendedGrid {
    /// Inputs `[Δp, Δq]`, outputs `[Δf, Δv]` (the feedback signals).
    pub sys: StateSpace,
    /// `R^{1/2} Ẽ`, mapping the extended state to the performance output
    /// `[ξ̇_f, ξ_f, ξ_v]`, weighted.
    pub perf: DMatrix<f64>,
    pub weights: PerfWeights,
}

pub fn augment_grid(g: &StateSpace, w: &PerfWeights) -> Result<ExtendedGrid> {
    w.validate()?;
    if g.n_inputs() != 2 || g.n_outputs() != 2 {
        return Err(Error::Dimension(format!(
            "grid model must be 2x2, got {}x{}",
            g.n_outputs(),
            g.n_inputs()
        )));
    }
    let n = g.n_states();
    let eps = w.epsilon;
    let mut a = DMatrix::zeros(n + 2, n + 2);
    a.view_mut((0, 0), (n, n)).copy_from(&g.a);
    a.view_mut((n, 0), (2, n)).copy_from(&g.c);
    a[(n, n)] = -eps;
    a[(n + 1, n + 1)] = -eps;
    let mut b = DMatrix::zeros(n + 2, 2);
    b.view_mut((0, 0), (n, 2)).copy_from(&g.b);
    let mut c = DMatrix::zeros(2, n + 2);
    c.view_mut((0, 0), (2, n)).copy_from(&g.c);

    let mut perf = DMatrix::zeros(3, n + 2);
    for j in 0..n {
        perf[(0, j)] = g.c[(0, j)];
    }
    perf[(0, n)] = -eps;
    perf[(1, n)] = 1.0;
    perf[(2, n + 1)] = 1.0;
    let r = [w.r_fdot.sqrt(), w.r_f.sqrt(), w.r_v.sqrt()];
    for (i, ri) in r.iter().enumerate() {
        perf.row_mut(i).scale_mut(*ri);
    }
    Ok(ExtendedGrid {
        sys: StateSpace::new(a, b, c)?,
        perf,
        weights: *w,
    })
}

/// Feedback interconnection of the extended grid and `T_des`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub a: DMatrix<f64>,
    /// Disturbance input `[p_d, q_d]`, entering alongside the injections.
    pub b: DMatrix<f64>,
    /// Weighted performance output.
    pub c: DMatrix<f64>,
    /// `[Δf, Δv]` read from the grid states.
    pub c_meas: DMatrix<f64>,
    /// `[Δp, Δq]` injected by the unit.
    pub c_ctrl: DMatrix<f64>,
    pub n_grid: usize,
}

impl ClosedLoop {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
}

pub fn close_loop(ext: &ExtendedGrid, tdes: &StateSpace) -> Result<ClosedLoop> {
    let g = &ext.sys;
    if tdes.n_inputs() != g.n_outputs() || tdes.n_outputs() != g.n_inputs() {
        return Err(Error::Dimension(format!(
            "T_des is {}x{} but the grid is {}x{}",
            tdes.n_outputs(),
            tdes.n_inputs(),
            g.n_outputs(),
            g.n_inputs()
        )));
    }
    let ng = g.n_states();
    let nt = tdes.n_states();
    let n = ng + nt;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (ng, ng)).copy_from(&g.a);
    a.view_mut((0, ng), (ng, nt)).copy_from(&(&g.b * &tdes.c));
    a.view_mut((ng, 0), (nt, ng)).copy_from(&(&tdes.b * &g.c));
    a.view_mut((ng, ng), (nt, nt)).copy_from(&tdes.a);
    let mut b = DMatrix::zeros(n, g.n_inputs());
    b.view_mut((0, 0), (ng, g.n_inputs())).copy_from(&g.b);
    let mut c = DMatrix::zeros(ext.perf.nrows(), n);
    c.view_mut((0, 0), (ext.perf.nrows(), ng)).copy_from(&ext.perf);
    let mut c_meas = DMatrix::zeros(g.n_outputs(), n);
    c_meas.view_mut((0, 0), (g.n_outputs(), ng)).copy_from(&g.c);
    let mut c_ctrl = DMatrix::zeros(tdes.n_outputs(), n);
    c_ctrl.view_mut((0, ng), (tdes.n_outputs(), nt)).copy_from(&tdes.c);
    Ok(ClosedLoop {
        a,
        b,
        c,
        c_meas,
        c_ctrl,
        n_grid: ng,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::stability::eigenvalues;

    fn scalar_grid() -> StateSpace {
        // Δf' = -Δf + Δp, Δv' = -2Δv + Δq
        StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn filter_dc_gain() {
        let w = PerfWeights { r_fdot: 1.0, r_f: 1.0, r_v: 1.0, epsilon: 0.5 };
        let ext = augment_grid(&scalar_grid(), &w).unwrap();
        assert_eq!(ext.sys.n_states(), 4);
        let perf = StateSpace::new(ext.sys.a.clone(), ext.sys.b.clone(), ext.perf.clone()).unwrap();
        let dc = perf.dc_gain().unwrap();
        // Δf = 1 at DC (grid gain 1) → ξ_f = 1/ε, derivative channel 0
        assert!(dc[(0, 0)].abs() < 1e-12);
        assert!((dc[(1, 0)] - 2.0).abs() < 1e-12);
        assert!((dc[(2, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_loop() {
        let g = scalar_grid();
        let w = PerfWeights::default();
        let ext = augment_grid(&g, &w).unwrap();
        // T_des: one state per channel, Δp = 3 x1, x1' = -4 x1 + Δf
        let t = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, -5.0]),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        let cl = close_loop(&ext, &t).unwrap();
        assert_eq!(cl.n_states(), 6);
        assert_eq!(cl.a[(0, 4)], 3.0);
        assert_eq!(cl.a[(4, 0)], 1.0);
        assert_eq!(cl.a[(4, 4)], -4.0);
        assert_eq!(cl.a[(1, 5)], 0.0);
        assert!(cl.b.rows(4, 2).iter().all(|v| *v == 0.0));
        assert!(cl.c.columns(4, 2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_output_decouples() {
        let ext = augment_grid(&scalar_grid(), &PerfWeights::default()).unwrap();
        let t = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, -5.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let cl = close_loop(&ext, &t).unwrap();
        let mut re: Vec<f64> = eigenvalues(&cl.a).iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        let expect = [-5.0, -4.0, -2.0, -1.0, -1e-3, -1e-3];
        for (x, y) in re.iter().zip(expect) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn weight_validation() {
        let w = PerfWeights { r_fdot: 0.0, r_f: 0.0, r_v: 0.0, epsilon: 1.0 };
        assert!(w.validate().is_err());
        let w = PerfWeights { epsilon: 0.0, ..Default::default() };
        assert!(w.validate().is_err());
    }
}
