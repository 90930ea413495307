use crate::error::{Error, Result};
use crate::lti::{augment_grid, close_loop, h2_gradient, h2_norm_sq, is_hurwitz, ClosedLoop, ExtendedGrid, Gradient, PerfWeights};
use crate::pwl_tf::StateSpace;
use crate::services::constraints::{param_scale, peak_capacity_slack};
use crate::services::{build_tdes, AlphaParams, Droops, LimitSet, FEAS_TOL};

/// One unit's tuning problem against a fixed grid equivalent.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ext: ExtendedGrid,
    pub droops: Droops,
    pub limits: LimitSet,
    /// Enabled products and the values of anything not being tuned.
    pub template: AlphaParams,
    pub pade_order: usize,
    pub margin: f64,
}

impl Problem {
    pub fn new(
        grid: &StateSpace,
        droops: Droops,
        limits: LimitSet,
        weights: &PerfWeights,
        template: AlphaParams,
        pade_order: usize,
        margin: f64,
    ) -> Result<Self> {
        droops.validate()?;
        limits.validate()?;
        if !(margin >= 0.0) {
            return Err(Error::Invalid("stability margin must be non-negative".into()));
        }
        Ok(Self {
            ext: augment_grid(grid, weights)?,
            droops,
            limits,
            template,
            pade_order,
            margin,
        })
    }

    pub fn alpha(&self, v: &[f64]) -> Result<AlphaParams> {
        self.template.with_vec(v)
    }

    pub fn closed_loop(&self, v: &[f64]) -> Result<ClosedLoop> {
        let a = self.alpha(v)?;
        close_loop(&self.ext, &build_tdes(&a, &self.droops, self.pade_order)?)
    }

    /// `J(α)`, or `+∞` when the peak-capacity constraint is violated, the
    /// parameters are structurally invalid, or the loop is not stable with
    /// the configured margin.
    pub fn cost(&self, v: &[f64]) -> f64 {
        let Ok(a) = self.alpha(v) else {
            return f64::INFINITY;
        };
        if peak_capacity_slack(&a, &self.droops, &self.limits) < -FEAS_TOL {
            return f64::INFINITY;
        }
        match self.closed_loop(v) {
            Ok(cl) if is_hurwitz(&cl.a, self.margin) => h2_norm_sq(&cl),
            _ => f64::INFINITY,
        }
    }

    pub fn gradient(&self, v: &[f64]) -> Result<Gradient> {
        h2_gradient(|x: &[f64]| self.closed_loop(x), v)
    }

    /// Slack of the peak-capacity constraint (negative when violated).
    pub fn peak_slack(&self, v: &[f64]) -> f64 {
        self.alpha(v)
            .map_or(f64::NEG_INFINITY, |a| peak_capacity_slack(&a, &self.droops, &self.limits))
    }

    /// Half-space `a·α ≤ b` linearizing the peak-capacity constraint at `v`
    /// (central differences; the slack is piecewise smooth).
    pub fn peak_linearization(&self, v: &[f64]) -> (Vec<f64>, f64) {
        let s0 = self.peak_slack(v);
        let grad: Vec<f64> = (0..v.len())
            .map(|i| {
                let h = 1e-7 * v[i].abs().max(1.0);
                let mut up = v.to_vec();
                let mut dn = v.to_vec();
                up[i] += h;
                dn[i] -= h;
                (self.peak_slack(&up) - self.peak_slack(&dn)) / (2.0 * h)
            })
            .collect();
        // s0 + ∇s·(α − v) ≥ 0  ⇔  −∇s·α ≤ s0 − ∇s·v
        let a: Vec<f64> = grad.iter().map(|g| -g).collect();
        let b = s0 - grad.iter().zip(v).map(|(g, x)| g * x).sum::<f64>();
        (a, b)
    }

    /// Per-parameter scale used for steps and the projection metric.
    pub fn scales(&self, alpha: &AlphaParams) -> Vec<f64> {
        alpha
            .ids()
            .into_iter()
            .map(|id| param_scale(id, alpha, &self.droops, &self.limits))
            .collect()
    }
}
