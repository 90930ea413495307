// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gridsim;
pub mod lti;
pub mod optimizer;
pub mod plotdata;
pub mod pwl_tf;
pub mod services;
pub mod sysid;

pub use error::{Error, Result};
