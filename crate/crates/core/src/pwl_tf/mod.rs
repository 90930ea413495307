//! Piecewise-linear capability curves to rational transfer functions, plus
//! the realization and response machinery shared by the rest of the crate.

mod curve;
pub mod pade;
mod rational;
mod realize;
pub mod response;
mod state_space;

pub use curve::{pwl_to_delay_terms, reconstruct, DelayTerm, PwlCurve};
pub use pade::{pade_delay, DEFAULT_PADE_ORDER, MAX_PADE_ORDER};
pub use rational::RationalTf;
pub use realize::{pwl_step_tf, tf_to_ss};
pub use response::{step_response, TimeSeries};
pub use state_space::{Discrete, StateSpace, StateSpaceRecord};

/// Minimum segment length (s) between coinciding curve breakpoints.
pub const DELTA_MIN: f64 = 1e-3;
