//! Identification of the grid equivalent from terminal measurements:
//! excitation, ARX estimation, order selection, conversion to continuous
//! time, reduction and validation.

mod arx;
mod convert;
mod dataset;
mod identify;
mod rbs;
mod reduce;
mod validate;

pub use arx::{fit_arx, fit_arx_per_output, fit_arx_with, ArxModel, ArxOrders, DeltaModel, FitOptions};
pub use convert::{arx_to_ct, arx_to_ct_with, delta_to_ct, delta_to_ct_zoh, tustin_d2c, D2c, FEEDTHROUGH_TOL};
pub use dataset::{Dataset, MIN_SAMPLES};
pub use identify::{highpass, identify, select_order, Candidate, IdentConfig, Identified};
pub use rbs::rbs;
pub use reduce::{reduce, Reduced};
pub use validate::{bode_error, logspace, nrmse_fit, peak_frequency, validate, validate_from, BodeError, FitReport};
