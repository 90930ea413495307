use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::lti::{damping_ratio, eigenvalues, mode_near, simulate_disturbance, Metrics};
use crate::optimizer::Problem;
use crate::pwl_tf::StateSpace;
use crate::services::AlphaParams;

/// Step disturbance used for the time-domain comparison.
pub const COMPARE_DISTURBANCE: [f64; 2] = [-1.0, -1.0];
pub const COMPARE_DT: f64 = 0.01;
pub const COMPARE_HORIZON: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDamping {
    /// Frequency of the grid's least damped open-loop mode (rad/s).
    pub omega: f64,
    pub baseline: f64,
    pub optimized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    #[serde(rename = "J_baseline")]
    pub j_baseline: f64,
    #[serde(rename = "J_optimized")]
    pub j_optimized: f64,
    /// Percent reductions, positive when the optimized parameters do better.
    #[serde(rename = "J_reduction_pct")]
    pub j_reduction_pct: f64,
    pub rocof_reduction_pct: f64,
    pub nadir_reduction_pct: f64,
    pub v_peak_reduction_pct: f64,
    pub baseline: Metrics,
    pub optimized: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeDamping>,
}

fn reduction(base: f64, new: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        100.0 * (base.abs() - new.abs()) / base.abs()
    }
}

/// Least damped oscillatory open-loop mode of `grid`, if it has one.
pub fn dominant_mode(grid: &StateSpace) -> Option<Complex64> {
    eigenvalues(&grid.a)
        .into_iter()
        .filter(|l| l.im > 1e-9)
        .min_by(|a, b| damping_ratio(*a).total_cmp(&damping_ratio(*b)))
}

/// `J`, disturbance metrics and dominant-mode damping for `alpha0` against
/// `alpha_star` on the problem's grid.
pub fn compare_baseline(
    problem: &Problem,
    grid: &StateSpace,
    alpha0: &AlphaParams,
    alpha_star: &AlphaParams,
) -> Result<BaselineReport> {
    let cl0 = problem.closed_loop(&alpha0.to_vec())?;
    let cl1 = problem.closed_loop(&alpha_star.to_vec())?;
    let m0 = simulate_disturbance(&cl0, COMPARE_DISTURBANCE, COMPARE_DT, COMPARE_HORIZON)?.metrics;
    let m1 = simulate_disturbance(&cl1, COMPARE_DISTURBANCE, COMPARE_DT, COMPARE_HORIZON)?.metrics;
    let mode = dominant_mode(grid).and_then(|l| {
        let w = l.im;
        let a = mode_near(&cl0.a, w)?;
        let b = mode_near(&cl1.a, w)?;
        Some(ModeDamping {
            omega: w,
            baseline: damping_ratio(a),
            optimized: damping_ratio(b),
        })
    });
    Ok(BaselineReport {
        j_baseline: m0.j,
        j_optimized: m1.j,
        j_reduction_pct: reduction(m0.j, m1.j),
        rocof_reduction_pct: reduction(m0.rocof_max, m1.rocof_max),
        nadir_reduction_pct: reduction(m0.nadir, m1.nadir),
        v_peak_reduction_pct: reduction(m0.v_peak, m1.v_peak),
        baseline: m0,
        optimized: m1,
        mode,
    })
}
