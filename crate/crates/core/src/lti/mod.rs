//! Linear time-invariant analysis: Lyapunov equations, stability, balancing,
//! closed-loop assembly, H2 cost and simulation.

pub mod balance;
pub mod closed_loop;
pub mod h2;
pub mod lyap;
pub mod simulate;
pub mod stability;

pub use balance::{balanced_truncation, gramians, Balanced};
pub use closed_loop::{augment_grid, close_loop, ClosedLoop, ExtendedGrid, PerfWeights};
pub use h2::{balance_scaling, h2_closed_loop, h2_gradient, h2_norm_sq, h2_solve, Gradient, H2Solution};
pub use lyap::lyap_solve;
pub use simulate::{simulate_disturbance, Metrics, Simulation};
pub use stability::{damping_ratio, eigenvalues, is_hurwitz, max_real_eig, mode_near};
