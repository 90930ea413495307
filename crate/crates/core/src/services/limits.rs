use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Grid-code bounds on the service curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridCodeLimits {
    /// Smallest initial FCR delay the unit will be tuned to.
    pub t_i_min_fcr: f64,
    pub t_i_max_fcr: f64,
    pub t_a_max_fcr: f64,
    pub t_a_max_ffr: f64,
    pub t_d_min_offset_ffr: f64,
    pub t_r_min_offset_ffr: f64,
    pub x_max_ffr: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub t90_max_vq: f64,
    pub t100_max_vq: f64,
}

impl Default for GridCodeLimits {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            t_i_min_fcr: 0.01,
            t_i_max_fcr: 2.0,
            t_a_max_fcr: 30.0,
            t_a_max_ffr: 2.0,
            t_d_min_offset_ffr: 8.0,
            t_r_min_offset_ffr: 10.0,
            x_max_ffr: 1.35,
            omega_min: two_pi * 0.1,
            omega_max: two_pi * 3.0,
            t90_max_vq: 5.0,
            t100_max_vq: 60.0,
        }
    }
}

/// Device capabilities, normalized by the frequency and voltage deviation
/// ranges so that they compare directly with per-unit-input curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceLimits {
    pub r_max_p: f64,
    pub r_max_q: f64,
    pub m_max_p: f64,
    pub t_d_max_ffr: f64,
    pub t_r_max_ffr: f64,
    /// Bound on `|m|` of the resonator. When absent, the headroom left by the
    /// enabled FCR and FFR capacities is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_aux_cap: Option<f64>,
}

impl Default for DeviceLimits {
    fn default() -> Self {
        Self::unit1()
    }
}

impl DeviceLimits {
    pub fn unit1() -> Self {
        Self {
            r_max_p: 111.0,
            r_max_q: 150.0,
            m_max_p: 70.0,
            t_d_max_ffr: 20.0,
            t_r_max_ffr: 20.0,
            m_aux_cap: None,
        }
    }

    pub fn unit2() -> Self {
        Self {
            r_max_p: 150.0,
            m_max_p: 100.0,
            ..Self::unit1()
        }
    }
}

/// Deviation ranges used to convert normalized limits into physical ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Normalization {
    pub df_max: f64,
    pub dv_max: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            df_max: 0.01,
            dv_max: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitSet {
    pub grid_code: GridCodeLimits,
    pub device: DeviceLimits,
    pub normalization: Normalization,
}

impl LimitSet {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid_code;
        let d = &self.device;
        let n = &self.normalization;
        let positive = [
            ("t_i_max_fcr", g.t_i_max_fcr),
            ("t_a_max_fcr", g.t_a_max_fcr),
            ("t_a_max_ffr", g.t_a_max_ffr),
            ("t_d_min_offset_ffr", g.t_d_min_offset_ffr),
            ("t_r_min_offset_ffr", g.t_r_min_offset_ffr),
            ("x_max_ffr", g.x_max_ffr),
            ("omega_min", g.omega_min),
            ("omega_max", g.omega_max),
            ("t90_max_vq", g.t90_max_vq),
            ("t100_max_vq", g.t100_max_vq),
            ("r_max_p", d.r_max_p),
            ("r_max_q", d.r_max_q),
            ("m_max_p", d.m_max_p),
            ("t_d_max_ffr", d.t_d_max_ffr),
            ("t_r_max_ffr", d.t_r_max_ffr),
            ("df_max", n.df_max),
            ("dv_max", n.dv_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("limit {name} = {v} must be positive"));
            }
        }
        if !(g.t_i_min_fcr >= 0.0) {
            return invalid("limit t_i_min_fcr must be non-negative");
        }
        if g.omega_min >= g.omega_max {
            return invalid("limits need omega_min < omega_max");
        }
        if let Some(cap) = d.m_aux_cap {
            if !(cap >= 0.0 && cap.is_finite()) {
                return invalid("m_aux_cap must be non-negative");
            }
        }
        Ok(())
    }

    /// Physical active-power ramp limit `R·Δf_max`.
    pub fn physical_ramp_p(&self) -> f64 {
        self.device.r_max_p * self.normalization.df_max
    }

    /// Physical reactive-power ramp limit `R·Δv_max`.
    pub fn physical_ramp_q(&self) -> f64 {
        self.device.r_max_q * self.normalization.dv_max
    }
}
