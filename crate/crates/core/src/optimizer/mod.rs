//! Tuning of the service parameters: projected gradient descent on the
//! closed-loop H2 cost, comparison with the baseline parameters, and
//! sequential tuning of several units on one grid.

mod compare;
mod pgd;
mod problem;
mod sequential;

pub use compare::{compare_baseline, dominant_mode, BaselineReport, ModeDamping, COMPARE_DISTURBANCE, COMPARE_DT, COMPARE_HORIZON};
pub use pgd::{optimize, Iterate, OptRun, OptimizerConfig, Status};
pub use problem::Problem;
pub use sequential::{sequential_po, Cycle, SequentialRun, Unit};
