use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizer::Problem;
use crate::pwl_tf::response::fmt;
use crate::services::{check_feasible, project_scaled, project_scaled_with, AlphaParams, FEAS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Length of the first trial step in scaled coordinates, where every
    /// parameter's admissible range has width about one.
    pub step_init: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Stop when the accepted step (scaled) is shorter than this.
    pub tol: f64,
    /// Required distance of the closed-loop spectrum from the imaginary axis.
    pub stability_margin: f64,
    /// Extra random starts besides the given one.
    pub multistart: usize,
    pub seed: u64,
    pub pade_order: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step_init: 0.1,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
            tol: 1e-4,
            stability_margin: 1e-6,
            multistart: 0,
            seed: 0,
            pade_order: crate::pwl_tf::DEFAULT_PADE_ORDER,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return invalid(format!("c1={} must lie in (0, 1)", self.c1));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return invalid(format!("backtrack={} must lie in (0, 1)", self.backtrack));
        }
        if !(self.tol > 0.0 && self.step_init > 0.0 && self.stability_margin >= 0.0) {
            return invalid("tol and step_init must be positive, stability_margin non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    /// The start violates the peak-capacity constraint even after projection.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iterate {
    pub iter: usize,
    pub alpha: Vec<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    /// Norm of the scaled gradient at this iterate.
    pub grad_norm: f64,
    /// Scaled length of the step that produced this iterate.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptRun {
    pub alpha_star: AlphaParams,
    #[serde(rename = "J_star")]
    pub j_star: f64,
    pub history: Vec<Iterate>,
    pub status: Status,
    pub param_names: Vec<&'static str>,
}

impl OptRun {
    /// CSV `iter,J,grad_norm,step,<parameter names>`.
    pub fn write_history_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["iter", "J", "grad_norm", "step"];
        header.extend(self.param_names.iter().copied());
        wr.write_record(&header)?;
        for it in &self.history {
            let mut rec = vec![it.iter.to_string(), fmt(it.j), fmt(it.grad_norm), fmt(it.step)];
            rec.extend(it.alpha.iter().map(|v| fmt(*v)));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(Error::Io)?;
        Ok(())
    }
}

fn scaled_norm(d: &[f64], s: &[f64]) -> f64 {
    d.iter().zip(s).map(|(x, k)| (x / k).powi(2)).sum::<f64>().sqrt()
}

/// Cutting planes added per trial step to keep the peak-capacity constraint.
const MAX_PEAK_CUTS: usize = 8;

/// Projects `y` onto the linear constraints. The peak-capacity constraint is
/// not part of that set; when the projected point breaks it, the projection
/// is repeated with its linearizations at the current iterate and at each
/// violating point as extra half-spaces, so that the remaining parameters
/// keep moving instead of the whole step being cut back. The caller still
/// checks the true constraint.
fn project_with_peak_cuts(problem: &Problem, y: &[f64], x: &[f64], scale: &[f64]) -> Result<Vec<f64>> {
    let target = problem.alpha(y)?;
    let project = |extra: &[(Vec<f64>, f64)]| -> Result<Vec<f64>> {
        Ok(project_scaled_with(&target, &problem.droops, &problem.limits, scale, extra)?.to_vec())
    };
    let mut cand = project(&[])?;
    if problem.peak_slack(&cand) >= -FEAS_TOL {
        return Ok(cand);
    }
    let mut cuts = vec![problem.peak_linearization(x)];
    for _ in 0..MAX_PEAK_CUTS {
        match project(&cuts) {
            Ok(c) => cand = c,
            Err(Error::Infeasible(_)) => break,
            Err(e) => return Err(e),
        }
        if problem.peak_slack(&cand) >= -FEAS_TOL {
            break;
        }
        cuts.push(problem.peak_linearization(&cand));
    }
    Ok(cand)
}

/// Projected gradient descent from one start.
fn descend(problem: &Problem, start: &AlphaParams, cfg: &OptimizerConfig) -> Result<OptRun> {
    let scale = problem.scales(start);
    let x0 = project_scaled(start, &problem.droops, &problem.limits, &scale)?;
    let names = x0.ids().iter().map(|id| id.name()).collect();
    let mut x = x0.to_vec();
    let mut j = problem.cost(&x);
    if !check_feasible(&x0, &problem.droops, &problem.limits).is_empty() {
        return Ok(OptRun {
            alpha_star: x0,
            j_star: j,
            history: Vec::new(),
            status: Status::Infeasible,
            param_names: names,
        });
    }
    if !j.is_finite() {
        return Err(Error::Unstable(
            "closed loop is not stable at the starting parameters; review the grid scenario".into(),
        ));
    }
    let mut history = vec![Iterate {
        iter: 0,
        alpha: x.clone(),
        j,
        grad_norm: f64::NAN,
        step: 0.0,
    }];
    let mut eta = f64::NAN;
    let mut status = Status::MaxIters;
    for k in 1..=cfg.max_iters {
        let grad = problem.gradient(&x)?.grad;
        let gz: Vec<f64> = grad.iter().zip(&scale).map(|(g, s)| g * s).collect();
        let gnorm = gz.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.last_mut().expect("history has the start").grad_norm = gnorm;
        if gnorm == 0.0 {
            status = Status::Converged;
            break;
        }
        if !eta.is_finite() {
            eta = cfg.step_init / gnorm;
        }
        let mut accepted = None;
        let mut trial = eta;
        for _ in 0..=cfg.max_backtracks {
            let y: Vec<f64> = x
                .iter()
                .zip(&grad)
                .zip(&scale)
                .map(|((xi, gi), si)| xi - trial * si * si * gi)
                .collect();
            let cand = project_with_peak_cuts(problem, &y, &x, &scale)?;
            let d: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if scaled_norm(&d, &scale) < cfg.tol * 1e-3 {
                break;
            }
            let jc = problem.cost(&cand);
            if jc.is_finite() && jc <= j + cfg.c1 * decrease && jc < j {
                accepted = Some((cand, jc, scaled_norm(&d, &scale)));
                break;
            }
            trial *= cfg.backtrack;
        }
        let Some((cand, jc, step)) = accepted else {
            status = Status::Converged;
            break;
        };
        // Grow the trial step again after a first-try acceptance.
        eta = if trial == eta { eta * 2.0 } else { trial };
        x = cand;
        j = jc;
        history.push(Iterate {
            iter: k,
            alpha: x.clone(),
            j,
            grad_norm: f64::NAN,
            step,
        });
        if step < cfg.tol {
            status = Status::Converged;
            break;
        }
    }
    let last = history.last_mut().expect("history has the start");
    if last.grad_norm.is_nan() {
        last.grad_norm = problem
            .gradient(&x)
            .map(|g| g.grad.iter().zip(&scale).map(|(g, s)| (g * s).powi(2)).sum::<f64>().sqrt())
            .unwrap_or(f64::NAN);
    }
    Ok(OptRun {
        alpha_star: problem.alpha(&x)?,
        j_star: j,
        history,
        status,
        param_names: names,
    })
}

/// Projected gradient descent on `J(α)` from `alpha0`, plus
/// `cfg.multistart` random restarts; returns the best run.
///
/// Random starts perturb `alpha0` uniformly by up to one range width per
/// parameter and project back onto the constraints. Starts that violate
/// the peak-capacity constraint or destabilize the loop are skipped.
pub fn optimize(problem: &Problem, alpha0: &AlphaParams, cfg: &OptimizerConfig) -> Result<OptRun> {
    cfg.validate()?;
    let mut best = descend(problem, alpha0, cfg)?;
    if best.status == Status::Infeasible {
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = problem.scales(alpha0);
    for _ in 0..cfg.multistart {
        let v: Vec<f64> = alpha0
            .to_vec()
            .iter()
            .zip(&scale)
            .map(|(a, s)| a + s * rng.random_range(-1.0..=1.0))
            .collect();
        let Ok(start) = alpha0.with_vec(&v) else {
            continue;
        };
        match descend(problem, &start, cfg) {
            Ok(run) if run.status != Status::Infeasible && run.j_star < best.j_star => best = run,
            _ => {}
        }
    }
    Ok(best)
}
