use crate::pwl_tf::DELTA_MIN;
use crate::services::products::{fcr_curve, ffr_curve};
use crate::services::{AlphaParams, Droops, LimitSet, ParamId};

/// Slack below which a constraint counts as violated.
pub const FEAS_TOL: f64 = 1e-9;

/// `Σ coeffs·α ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub id: &'static str,
    pub coeffs: Vec<(ParamId, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    fn new(id: &'static str, coeffs: &[(ParamId, f64)], rhs: f64) -> Self {
        Self {
            id,
            coeffs: coeffs.to_vec(),
            rhs,
        }
    }

    /// `rhs - Σ coeffs·α`; negative when violated.
    pub fn slack(&self, alpha: &AlphaParams) -> f64 {
        let lhs: f64 = self
            .coeffs
            .iter()
            .map(|(id, c)| c * alpha.get(*id).unwrap_or(0.0))
            .sum();
        self.rhs - lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub id: &'static str,
    pub slack: f64,
}

/// Bound on the resonator gain: the override if given, otherwise the
/// peak-capacity headroom left by the enabled FCR and FFR products.
pub fn m_aux_cap(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> f64 {
    if let Some(cap) = limits.device.m_aux_cap {
        return cap;
    }
    let mut used = 0.0;
    if alpha.fcr.is_some() {
        used += (1.0 / droops.d_p).abs();
    }
    if alpha.ffr.is_some() {
        used += (1.0 / droops.k_p).abs();
    }
    (limits.device.m_max_p - used).max(0.0)
}

/// Linear part of the feasible set for the products enabled in `alpha`.
pub fn linear_constraints(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> Vec<LinearConstraint> {
    use ParamId::*;
    let g = &limits.grid_code;
    let d = &limits.device;
    let mut out = Vec::new();
    let mut push = |id, coeffs: &[(ParamId, f64)], rhs| out.push(LinearConstraint::new(id, coeffs, rhs));

    if alpha.fcr.is_some() {
        let min_ramp = (1.0 / droops.d_p).abs() / d.r_max_p;
        push("fcr.t_i_min", &[(FcrTi, -1.0)], -g.t_i_min_fcr);
        push("fcr.t_i_max", &[(FcrTi, 1.0)], g.t_i_max_fcr);
        push("fcr.ramp", &[(FcrTi, 1.0), (FcrTa, -1.0)], -min_ramp.max(DELTA_MIN));
        push("fcr.t_a_max", &[(FcrTa, 1.0)], g.t_a_max_fcr);
    }
    if alpha.ffr.is_some() {
        let cap = (1.0 / droops.k_p).abs();
        push("ffr.t_a_min", &[(FfrTa, -1.0)], -DELTA_MIN);
        push("ffr.t_a_max", &[(FfrTa, 1.0)], g.t_a_max_ffr);
        push("ffr.ramp", &[(FfrX, cap), (FfrTa, -d.r_max_p)], 0.0);
        push("ffr.t_d_min", &[(FfrTa, 1.0), (FfrTd, -1.0)], -g.t_d_min_offset_ffr.max(DELTA_MIN));
        push("ffr.t_d_max", &[(FfrTd, 1.0)], d.t_d_max_ffr);
        push("ffr.t_r_min", &[(FfrTd, 1.0), (FfrTr, -1.0)], -g.t_r_min_offset_ffr.max(DELTA_MIN));
        push("ffr.t_r_max", &[(FfrTr, 1.0)], d.t_r_max_ffr);
        push("ffr.x_min", &[(FfrX, -1.0)], -1.0);
        push("ffr.x_max", &[(FfrX, 1.0)], g.x_max_ffr);
    }
    if alpha.aux.is_some() {
        let cap = m_aux_cap(alpha, droops, limits);
        push("aux.omega_min", &[(AuxOmegaL, -1.0)], -g.omega_min);
        push("aux.band", &[(AuxOmegaL, 1.0), (AuxOmegaH, -1.0)], -DELTA_MIN);
        push("aux.omega_max", &[(AuxOmegaH, 1.0)], g.omega_max);
        push("aux.m_max", &[(AuxM, 1.0)], cap);
        push("aux.m_min", &[(AuxM, -1.0)], cap);
    }
    let min_t90 = 0.9 * (1.0 / droops.d_q).abs() / d.r_max_q;
    push("vq.ramp", &[(VqT90, -1.0)], -min_t90.max(DELTA_MIN));
    push("vq.t90_max", &[(VqT90, 1.0)], g.t90_max_vq);
    push("vq.order", &[(VqT90, 1.0), (VqT100, -1.0)], -DELTA_MIN);
    push("vq.t100_max", &[(VqT100, 1.0)], g.t100_max_vq);
    out
}

/// Largest `|FCR(t) + FFR(t)|` over time. Both curves are piecewise linear
/// and constant after their last breakpoint, so the maximum sits on a
/// breakpoint of one of them.
pub fn superposed_peak(alpha: &AlphaParams, droops: &Droops) -> f64 {
    let fcr = alpha.fcr.and_then(|p| fcr_curve(&p, droops.d_p).ok());
    let ffr = alpha.ffr.and_then(|p| ffr_curve(&p, droops.k_p).ok());
    let times = fcr
        .iter()
        .chain(ffr.iter())
        .flat_map(|c| c.points().iter().map(|p| p.0));
    times
        .map(|t| {
            let a = fcr.as_ref().map_or(0.0, |c| c.value_at(t));
            let b = ffr.as_ref().map_or(0.0, |c| c.value_at(t));
            (a + b).abs()
        })
        .fold(0.0, f64::max)
}

/// Slack of the superposed peak-capacity constraint (negative when violated).
pub fn peak_capacity_slack(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> f64 {
    let m = alpha.aux.map_or(0.0, |a| a.m.abs());
    limits.device.m_max_p - superposed_peak(alpha, droops) - m
}

/// Every violated constraint with its (negative) slack; empty when feasible.
pub fn check_feasible(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> Vec<Violation> {
    let mut out: Vec<Violation> = linear_constraints(alpha, droops, limits)
        .iter()
        .map(|c| Violation {
            id: c.id,
            slack: c.slack(alpha),
        })
        .filter(|v| !(v.slack >= -FEAS_TOL))
        .collect();
    let peak = peak_capacity_slack(alpha, droops, limits);
    if !(peak >= -FEAS_TOL) {
        out.push(Violation {
            id: "device.peak_capacity",
            slack: peak,
        });
    }
    out
}

/// True when no linear constraint is violated (the peak constraint is ignored).
pub fn linear_feasible(alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> bool {
    linear_constraints(alpha, droops, limits)
        .iter()
        .all(|c| c.slack(alpha) >= -FEAS_TOL)
}

/// Per-parameter scale (width of the admissible range) used to make the
/// optimizer's step and projection metric unit-free.
pub fn param_scale(id: ParamId, alpha: &AlphaParams, droops: &Droops, limits: &LimitSet) -> f64 {
    let g = &limits.grid_code;
    let d = &limits.device;
    let width = match id {
        ParamId::FcrTi => g.t_i_max_fcr - g.t_i_min_fcr,
        ParamId::FcrTa => g.t_a_max_fcr,
        ParamId::FfrTa => g.t_a_max_ffr,
        ParamId::FfrTd => d.t_d_max_ffr - g.t_d_min_offset_ffr,
        ParamId::FfrTr => d.t_r_max_ffr - g.t_r_min_offset_ffr,
        ParamId::FfrX => g.x_max_ffr - 1.0,
        ParamId::AuxOmegaL | ParamId::AuxOmegaH => g.omega_max - g.omega_min,
        ParamId::AuxM => 2.0 * m_aux_cap(alpha, droops, limits),
        ParamId::VqT90 => g.t90_max_vq,
        ParamId::VqT100 => g.t100_max_vq,
    };
    if width > 1e-6 {
        width
    } else {
        1.0
    }
}
