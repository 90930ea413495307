use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcrParams {
    pub t_i: f64,
    pub t_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfrParams {
    pub t_a: f64,
    pub t_d: f64,
    pub t_r: f64,
    pub x: f64,
}

/// Band-pass resonator: corner frequencies in rad/s and signed peak gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxParams {
    pub omega_l: f64,
    pub omega_h: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqParams {
    pub t90: f64,
    pub t100: f64,
}

/// Service parameters. A `None` product is not provided by the unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaParams {
    pub fcr: Option<FcrParams>,
    pub ffr: Option<FfrParams>,
    pub aux: Option<AuxParams>,
    pub vq: VqParams,
}

/// Droop gains (per unit). Negative values make the response stabilizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Droops {
    pub d_p: f64,
    pub k_p: f64,
    pub d_q: f64,
}

impl Default for Droops {
    fn default() -> Self {
        Self {
            d_p: -0.05,
            k_p: -0.04,
            d_q: -0.04,
        }
    }
}

impl Droops {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d_p", self.d_p), ("k_p", self.k_p), ("d_q", self.d_q)] {
            if v == 0.0 || !v.is_finite() {
                return invalid(format!("droop {name} must be finite and nonzero"));
            }
        }
        Ok(())
    }
}

/// One scalar entry of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamId {
    FcrTi,
    FcrTa,
    FfrTa,
    FfrTd,
    FfrTr,
    FfrX,
    AuxOmegaL,
    AuxOmegaH,
    AuxM,
    VqT90,
    VqT100,
}

impl ParamId {
    pub const ALL: [ParamId; 11] = [
        ParamId::FcrTi,
        ParamId::FcrTa,
        ParamId::FfrTa,
        ParamId::FfrTd,
        ParamId::FfrTr,
        ParamId::FfrX,
        ParamId::AuxOmegaL,
        ParamId::AuxOmegaH,
        ParamId::AuxM,
        ParamId::VqT90,
        ParamId::VqT100,
    ];

    /// Column name used in CSV exports.
    pub fn name(self) -> &'static str {
        match self {
            ParamId::FcrTi => "fcr_t_i",
            ParamId::FcrTa => "fcr_t_a",
            ParamId::FfrTa => "ffr_t_a",
            ParamId::FfrTd => "ffr_t_d",
            ParamId::FfrTr => "ffr_t_r",
            ParamId::FfrX => "ffr_x",
            ParamId::AuxOmegaL => "aux_omega_l",
            ParamId::AuxOmegaH => "aux_omega_h",
            ParamId::AuxM => "aux_m",
            ParamId::VqT90 => "vq_t90",
            ParamId::VqT100 => "vq_t100",
        }
    }
}

impl AlphaParams {
    /// Parameters of the enabled products, in [`ParamId::ALL`] order.
    pub fn ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::with_capacity(11);
        if self.fcr.is_some() {
            ids.extend([ParamId::FcrTi, ParamId::FcrTa]);
        }
        if self.ffr.is_some() {
            ids.extend([ParamId::FfrTa, ParamId::FfrTd, ParamId::FfrTr, ParamId::FfrX]);
        }
        if self.aux.is_some() {
            ids.extend([ParamId::AuxOmegaL, ParamId::AuxOmegaH, ParamId::AuxM]);
        }
        ids.extend([ParamId::VqT90, ParamId::VqT100]);
        ids
    }

    pub fn get(&self, id: ParamId) -> Option<f64> {
        match id {
            ParamId::FcrTi => self.fcr.map(|p| p.t_i),
            ParamId::FcrTa => self.fcr.map(|p| p.t_a),
            ParamId::FfrTa => self.ffr.map(|p| p.t_a),
            ParamId::FfrTd => self.ffr.map(|p| p.t_d),
            ParamId::FfrTr => self.ffr.map(|p| p.t_r),
            ParamId::FfrX => self.ffr.map(|p| p.x),
            ParamId::AuxOmegaL => self.aux.map(|p| p.omega_l),
            ParamId::AuxOmegaH => self.aux.map(|p| p.omega_h),
            ParamId::AuxM => self.aux.map(|p| p.m),
            ParamId::VqT90 => Some(self.vq.t90),
            ParamId::VqT100 => Some(self.vq.t100),
        }
    }

    /// Sets `id` if its product is enabled; a disabled product is left alone.
    pub fn set(&mut self, id: ParamId, v: f64) {
        match id {
            ParamId::FcrTi => self.fcr.iter_mut().for_each(|p| p.t_i = v),
            ParamId::FcrTa => self.fcr.iter_mut().for_each(|p| p.t_a = v),
            ParamId::FfrTa => self.ffr.iter_mut().for_each(|p| p.t_a = v),
            ParamId::FfrTd => self.ffr.iter_mut().for_each(|p| p.t_d = v),
            ParamId::FfrTr => self.ffr.iter_mut().for_each(|p| p.t_r = v),
            ParamId::FfrX => self.ffr.iter_mut().for_each(|p| p.x = v),
            ParamId::AuxOmegaL => self.aux.iter_mut().for_each(|p| p.omega_l = v),
            ParamId::AuxOmegaH => self.aux.iter_mut().for_each(|p| p.omega_h = v),
            ParamId::AuxM => self.aux.iter_mut().for_each(|p| p.m = v),
            ParamId::VqT90 => self.vq.t90 = v,
            ParamId::VqT100 => self.vq.t100 = v,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.ids().into_iter().filter_map(|id| self.get(id)).collect()
    }

    /// Copy of `self` with the enabled parameters replaced by `v`.
    pub fn with_vec(&self, v: &[f64]) -> Result<AlphaParams> {
        let ids = self.ids();
        if ids.len() != v.len() {
            return invalid(format!("expected {} parameters, got {}", ids.len(), v.len()));
        }
        let mut out = *self;
        for (id, x) in ids.into_iter().zip(v) {
            out.set(id, *x);
        }
        Ok(out)
    }

    /// Structural sanity: finite, non-negative times, ordered corner
    /// frequencies. Constraint membership is checked separately.
    pub fn validate(&self) -> Result<()> {
        for id in self.ids() {
            let v = self.get(id).unwrap_or(0.0);
            if !v.is_finite() {
                return invalid(format!("{} is not finite", id.name()));
            }
            let signed = matches!(id, ParamId::AuxM);
            if !signed && v < 0.0 {
                return invalid(format!("{} = {v} must be non-negative", id.name()));
            }
        }
        if let Some(a) = self.aux {
            if !(a.omega_l > 0.0 && a.omega_l < a.omega_h) {
                return invalid("aux needs 0 < omega_l < omega_h");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> AlphaParams {
        AlphaParams {
            fcr: Some(FcrParams { t_i: 2.0, t_a: 30.0 }),
            ffr: Some(FfrParams { t_a: 2.0, t_d: 10.0, t_r: 20.0, x: 1.0 }),
            aux: Some(AuxParams { omega_l: 1.0, omega_h: 4.0, m: 0.0 }),
            vq: VqParams { t90: 5.0, t100: 60.0 },
        }
    }

    #[test]
    fn vector_round_trip() {
        let a = full();
        assert_eq!(a.ids().len(), 11);
        let v: Vec<f64> = (0..11).map(|i| i as f64 + 0.5).collect();
        let b = a.with_vec(&v).unwrap();
        assert_eq!(b.to_vec(), v);
        assert!(a.with_vec(&v[..3]).is_err());
    }

    #[test]
    fn disabled_product_drops_out() {
        let mut a = full();
        a.fcr = None;
        assert_eq!(a.ids().len(), 9);
        assert_eq!(a.get(ParamId::FcrTi), None);
        a.set(ParamId::FcrTi, 1.0);
        assert!(a.fcr.is_none());
    }

    #[test]
    fn validation() {
        let mut a = full();
        assert!(a.validate().is_ok());
        a.aux.as_mut().unwrap().m = -5.0;
        assert!(a.validate().is_ok());
        a.aux.as_mut().unwrap().omega_l = 5.0;
        assert!(a.validate().is_err());
        let mut b = full();
        b.vq.t90 = f64::NAN;
        assert!(b.validate().is_err());
    }
}
