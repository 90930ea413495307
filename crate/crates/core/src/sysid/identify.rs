use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pwl_tf::StateSpace;
use crate::sysid::{
    arx_to_ct_with, fit_arx_per_output, fit_arx_with, nrmse_fit, reduce, ArxModel, ArxOrders, D2c, Dataset, FitOptions,
};

/// First-order high-pass (bilinear) applied column-wise to inputs and
/// outputs alike, which leaves the input/output relation unchanged. Signals
/// are taken as zero before the first sample, matching a record that starts
/// from rest.
pub fn highpass(data: &Dataset, cutoff_hz: f64) -> Result<Dataset> {
    if !(cutoff_hz > 0.0) {
        return invalid("high-pass cutoff must be positive");
    }
    let wc = 2.0 * std::f64::consts::PI * cutoff_hz * data.dt;
    let a = (2.0 - wc) / (2.0 + wc);
    let g = 2.0 / (2.0 + wc);
    let filt = |m: &nalgebra::DMatrix<f64>| {
        let mut out = m.clone();
        for j in 0..m.ncols() {
            let mut prev_x = 0.0;
            let mut prev_y = 0.0;
            for k in 0..m.nrows() {
                let x = m[(k, j)];
                let y = a * prev_y + g * (x - prev_x);
                out[(k, j)] = y;
                prev_x = x;
                prev_y = y;
            }
        }
        out
    };
    Dataset::new(data.dt, filt(&data.u), filt(&data.y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub output: usize,
    pub orders: ArxOrders,
    /// Simulated fit on the validation data, `None` if the fit failed or
    /// the model was unstable.
    pub fit: Option<f64>,
}

/// Simulated validation fit of a single-output model, if it is usable. The
/// simulation runs through the training inputs first so that the model
/// enters the validation window in the right state.
fn score(train: &Dataset, val: &Dataset, orders: ArxOrders, opts: FitOptions) -> Option<f64> {
    let m = fit_arx_with(train, orders, opts).ok()?;
    let dm = m.to_delta_ss();
    if !dm.is_stable() {
        return None;
    }
    if let Some(method) = opts.require_d2c {
        arx_to_ct_with(&m, method).ok()?;
    }
    let (nt, nv) = (train.len(), val.len());
    let mut u = DMatrix::zeros(nt + nv, train.u.ncols());
    u.rows_mut(0, nt).copy_from(&train.u);
    u.rows_mut(nt, nv).copy_from(&val.u);
    let yhat = dm.simulate(&u).ok()?;
    let fit = nrmse_fit(&val.y, &yhat.rows(nt, nv).into_owned()).ok()?[0];
    fit.is_finite().then_some(fit)
}

/// Picks orders for every output separately: each candidate is fitted on
/// `train` and simulated on `val`, and the best simulated fit wins. A larger
/// `na + nb` must beat a smaller one by more than 0.1% fit. Unstable
/// candidates, and with [`FitOptions::require_d2c`] inconvertible ones, are
/// skipped. The final model is refitted with the chosen orders.
pub fn select_order(
    train: &Dataset,
    val: &Dataset,
    candidates: &[ArxOrders],
    opts: FitOptions,
) -> Result<(ArxModel, Vec<Candidate>)> {
    if candidates.is_empty() {
        return invalid("no candidate orders given");
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|o| (o.na + o.nb, o.nk));
    sorted.dedup();
    let mut report = Vec::new();
    let mut chosen = Vec::new();
    for i in 0..train.y.ncols() {
        let (tr, va) = (train.output(i)?, val.output(i)?);
        let mut best: Option<(ArxOrders, f64)> = None;
        for &orders in &sorted {
            let fit = if sorted.len() == 1 {
                Some(f64::NAN)
            } else {
                score(&tr, &va, orders, opts)
            };
            report.push(Candidate { output: i, orders, fit: fit.filter(|f| !f.is_nan()) });
            if let Some(f) = fit {
                if best.is_none_or(|(_, b)| f > b + 1e-3) {
                    best = Some((orders, f));
                }
            }
        }
        match best {
            Some((o, _)) => chosen.push(o),
            None => {
                return Err(Error::Unstable(format!(
                    "no candidate order gave a stable, convertible model for output {i}"
                )))
            }
        }
    }
    let model = fit_arx_per_output(train, &chosen, opts)?;
    Ok((model, report))
}

/// Settings of the identification pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentConfig {
    /// Candidate `(na, nb, nk)` triples.
    pub candidates: Vec<[usize; 3]>,
    /// High-pass cutoff applied before fitting; `None` disables it.
    pub prefilter_hz: Option<f64>,
    /// Upper bound on Steiglitz–McBride passes.
    pub sm_iterations: usize,
    pub d2c: D2c,
    pub train_fraction: f64,
    /// Target order for balanced truncation of the continuous model.
    pub reduce_order: Option<usize>,
    /// Excitation used when the pipeline generates its own data.
    pub rbs_amplitude: f64,
    pub rbs_switch_prob: f64,
    pub duration: f64,
    pub dt: f64,
    pub snr_db: Option<f64>,
}

impl Default for IdentConfig {
    fn default() -> Self {
        Self {
            candidates: [1, 2, 3, 4, 5, 6, 8].iter().map(|&n| [n, n, 1]).collect(),
            prefilter_hz: Some(0.01),
            sm_iterations: 20,
            d2c: D2c::Zoh,
            train_fraction: 0.7,
            reduce_order: None,
            rbs_amplitude: 0.03,
            rbs_switch_prob: 0.5,
            duration: 40.0,
            dt: 1e-3,
            snr_db: Some(40.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Identified {
    pub arx: ArxModel,
    /// Continuous, stable, strictly proper grid model.
    pub model: StateSpace,
    pub candidates: Vec<Candidate>,
    /// Balanced-truncation bound, zero when no reduction was applied.
    pub reduction_bound: f64,
}

/// Prefilter, split, order selection, conversion to continuous time and optional
/// reduction. The returned model is guaranteed stable.
pub fn identify(data: &Dataset, cfg: &IdentConfig) -> Result<Identified> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return invalid("train_fraction must lie in (0, 1)");
    }
    let filtered = match cfg.prefilter_hz {
        Some(f) => highpass(data, f)?,
        None => data.clone(),
    };
    let (train, val) = filtered.split(cfg.train_fraction)?;
    let candidates: Vec<ArxOrders> = cfg.candidates.iter().map(|c| ArxOrders::new(c[0], c[1], c[2])).collect();
    let opts = FitOptions {
        sm_iterations: cfg.sm_iterations,
        require_d2c: Some(cfg.d2c),
    };
    let (arx, report) = select_order(&train, &val, &candidates, opts)?;
    let mut model = arx_to_ct_with(&arx, cfg.d2c)?;
    if !model.is_stable() {
        return Err(Error::Unstable("identified model is not stable".into()));
    }
    let mut reduction_bound = 0.0;
    if let Some(order) = cfg.reduce_order {
        let r = reduce(&model, order)?;
        model = r.system;
        reduction_bound = r.error_bound;
    }
    Ok(Identified {
        arx,
        model,
        candidates: report,
        reduction_bound,
    })
}
