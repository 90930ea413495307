//! Ancillary-service products, their constraint sets and the baseline
//! parameters.

mod alpha;
pub mod constraints;
mod limits;
pub mod products;
pub mod projection;

pub use alpha::{AlphaParams, AuxParams, Droops, FcrParams, FfrParams, ParamId, VqParams};
pub use constraints::{check_feasible, linear_constraints, m_aux_cap, LinearConstraint, Violation, FEAS_TOL};
pub use limits::{DeviceLimits, GridCodeLimits, LimitSet, Normalization};
pub use products::{aux_ss, aux_tf, baseline_alpha, build_tdes, fcr_curve, ffr_curve, vq_curve};
pub use projection::{project, project_scaled, project_scaled_with};
