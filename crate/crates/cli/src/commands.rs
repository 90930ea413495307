use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use pando::config::{alpha_from_toml, alpha_to_toml, ModelFile, PipelineConfig};
use pando::gridsim::{excitation_dataset, make_grid};
use pando::optimizer::{compare_baseline, optimize, BaselineReport, OptRun, Problem, Status};
use pando::pwl_tf::{pwl_to_delay_terms, pwl_step_tf, StateSpace, StateSpaceRecord};
use pando::services::{aux_tf, baseline_alpha, build_tdes, fcr_curve, ffr_curve, vq_curve, AlphaParams};
use pando::sysid::{identify, validate_from, ArxOrders, Candidate, Dataset, FitReport};
use pando::{Error, Result};

use crate::plotdata::{bode_bundle, write_metrics_csv, write_plot_bundles};
use pando::plotdata::step_bundle;

/// Band over which identified models are compared with the truth (Hz).
pub const BODE_BAND_HZ: (f64, f64) = (0.01, 10.0);

/// Resolved configuration plus the directory artifacts go to.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ProductTerms {
    product: &'static str,
    /// Curve breakpoints `[t, value]` per unit input step.
    breakpoints: Vec<[f64; 2]>,
    /// Slope changes: `Σ c_k e^{-t_k s} / s²` is the step response.
    delays: Vec<f64>,
    coefficients: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct AuxCoefficients {
    /// Ascending powers of `s`.
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct TdesFile {
    pade_order: usize,
    products: Vec<ProductTerms>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aux: Option<AuxCoefficients>,
    /// Inputs `[Δf, Δv]`, outputs `[Δp, Δq]`.
    realization: StateSpaceRecord,
}

#[derive(Debug, Serialize)]
struct IdentifyReport {
    dt: f64,
    samples: usize,
    orders: Vec<ArxOrders>,
    states: usize,
    reduction_bound: f64,
    /// Simulated fit on the held-out part of the record.
    validation: FitReport,
    candidates: Vec<Candidate>,
}

#[derive(Debug, Serialize)]
struct OptimizeReport {
    status: Status,
    #[serde(rename = "J_start")]
    j_start: f64,
    #[serde(rename = "J_star")]
    j_star: f64,
    iterations: usize,
    alpha_star: AlphaParams,
}

impl Context {
    pub fn new(cfg: PipelineConfig, out: PathBuf) -> Self {
        Self { cfg, out }
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    fn write_with(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Invalid(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn write_alpha(&self, name: &str, alpha: &AlphaParams) -> Result<()> {
        self.write(name, alpha_to_toml(alpha)?.as_bytes())
    }

    /// Synthetic grid behind the data, when the data are generated.
    pub fn truth(&self) -> Result<Option<StateSpace>> {
        match self.cfg.scenario.dataset {
            Some(_) => Ok(None),
            None => make_grid(&self.cfg.scenario.grid).map(Some),
        }
    }

    /// Model file when given, the synthetic grid otherwise.
    pub fn grid(&self, model: Option<&Path>) -> Result<StateSpace> {
        if let Some(p) = model {
            return Ok(ModelFile::from_toml(&fs::read_to_string(p)?)?.0);
        }
        self.truth()?.ok_or_else(|| {
            Error::Config("the scenario is a recorded dataset; pass --model with an identified model".into())
        })
    }

    fn alpha_or_start(&self, path: Option<&Path>) -> Result<AlphaParams> {
        match path {
            Some(p) => alpha_from_toml(&fs::read_to_string(p)?),
            None => Ok(self.cfg.start_alpha()),
        }
    }

    pub fn problem(&self, grid: &StateSpace, template: AlphaParams) -> Result<Problem> {
        let c = &self.cfg;
        Problem::new(
            grid,
            c.droops,
            c.limits,
            &c.weights,
            template,
            c.optimizer.pade_order,
            c.optimizer.stability_margin,
        )
    }

    fn write_tdes(&self, alpha: &AlphaParams) -> Result<()> {
        let d = &self.cfg.droops;
        let n = self.cfg.optimizer.pade_order;
        let mut curves = Vec::new();
        if let Some(p) = &alpha.fcr {
            curves.push(("fcr", fcr_curve(p, d.d_p)?));
        }
        if let Some(p) = &alpha.ffr {
            curves.push(("ffr", ffr_curve(p, d.k_p)?));
        }
        curves.push(("vq", vq_curve(&alpha.vq, d.d_q)?));
        let products = curves
            .iter()
            .map(|(name, c)| {
                let terms = pwl_to_delay_terms(c);
                ProductTerms {
                    product: name,
                    breakpoints: c.points().iter().map(|&(t, v)| [t, v]).collect(),
                    delays: terms.iter().map(|t| t.delay).collect(),
                    coefficients: terms.iter().map(|t| t.coefficient).collect(),
                }
            })
            .collect();
        let aux = match &alpha.aux {
            Some(p) => {
                let tf = aux_tf(p)?;
                Some(AuxCoefficients {
                    num: tf.num().to_vec(),
                    den: tf.den().to_vec(),
                })
            }
            None => None,
        };
        for (_, c) in &curves {
            // Fails early on an order outside the supported range.
            pwl_step_tf(c, 1.0, n)?;
        }
        let file = TdesFile {
            pade_order: n,
            products,
            aux,
            realization: (&build_tdes(alpha, d, n)?).into(),
        };
        let text = toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))?;
        self.write("tdes.toml", text.as_bytes())
    }

    /// `tdes.toml` and `step.csv` for the given or configured parameters.
    pub fn translate(&self, alpha: Option<&Path>) -> Result<()> {
        let a = self.alpha_or_start(alpha)?;
        self.write_tdes(&a)?;
        let steps = step_bundle(&a, &self.cfg.droops, self.cfg.optimizer.pade_order)?;
        self.write_with("step.csv", |w| steps.write_csv(w))
    }

    /// `alpha0.toml`: the slowest admissible setting of every enabled product.
    pub fn baseline(&self) -> Result<AlphaParams> {
        let p = &self.cfg.products;
        let mut a = baseline_alpha(&self.cfg.limits);
        if !p.fcr {
            a.fcr = None;
        }
        if !p.ffr {
            a.ffr = None;
        }
        if !p.aux {
            a.aux = None;
        }
        self.write_alpha("alpha0.toml", &a)?;
        Ok(a)
    }

    /// Reads `data`, else the configured dataset, else generates a record
    /// from the synthetic grid and writes it as `dataset.csv`.
    pub fn dataset(&self, data: Option<&Path>) -> Result<Dataset> {
        if let Some(p) = data.or(self.cfg.scenario.dataset.as_deref()) {
            return Dataset::read_csv(fs::File::open(p)?);
        }
        let g = make_grid(&self.cfg.scenario.grid)?;
        let d = excitation_dataset(&g, &self.cfg.identification, self.cfg.seed)?;
        self.write_with("dataset.csv", |w| d.write_csv(w))?;
        Ok(d)
    }

    fn identify_data(&self, data: &Dataset, truth: Option<&StateSpace>) -> Result<StateSpace> {
        let ic = &self.cfg.identification;
        let id = identify(data, ic)?;
        let start = (data.len() as f64 * ic.train_fraction).round() as usize;
        let validation = validate_from(&id.model, data, start, truth.map(|t| (t, BODE_BAND_HZ)))?;
        self.write("model.toml", ModelFile::new(&id.model, data.dt).to_toml()?.as_bytes())?;
        self.write_json(
            "identify.json",
            &IdentifyReport {
                dt: data.dt,
                samples: data.len(),
                orders: id.arx.orders.clone(),
                states: id.model.n_states(),
                reduction_bound: id.reduction_bound,
                validation,
                candidates: id.candidates,
            },
        )?;
        let bode = bode_bundle(&id.model, truth)?;
        self.write_with("bode.csv", |w| bode.write_csv(w))?;
        Ok(id.model)
    }

    /// `model.toml`, `identify.json` and `bode.csv`.
    pub fn identify(&self, data: Option<&Path>) -> Result<StateSpace> {
        let d = self.dataset(data)?;
        // The truth is only known for data generated here.
        let truth = if data.is_none() { self.truth()? } else { None };
        self.identify_data(&d, truth.as_ref())
    }

    fn optimize_on(&self, grid: &StateSpace, alpha0: &AlphaParams) -> Result<OptRun> {
        let problem = self.problem(grid, *alpha0)?;
        let run = optimize(&problem, alpha0, &self.cfg.optimizer)?;
        if run.status == Status::Infeasible {
            return Err(Error::Infeasible(
                "the limits admit no parameters that keep the loop stable and within capacity".into(),
            ));
        }
        let j_start = run.history.first().map_or(run.j_star, |it| it.j);
        self.write_alpha("alpha_star.toml", &run.alpha_star)?;
        self.write_with("history.csv", |w| run.write_history_csv(w))?;
        self.write_json(
            "optimize.json",
            &OptimizeReport {
                status: run.status,
                j_start,
                j_star: run.j_star,
                iterations: run.history.len().saturating_sub(1),
                alpha_star: run.alpha_star,
            },
        )?;
        Ok(run)
    }

    /// `alpha_star.toml`, `history.csv` and `optimize.json`.
    pub fn optimize(&self, model: Option<&Path>, alpha: Option<&Path>) -> Result<OptRun> {
        let g = self.grid(model)?;
        self.optimize_on(&g, &self.alpha_or_start(alpha)?)
    }

    /// `traces.csv` and `metrics.json` for a step disturbance.
    pub fn simulate(&self, model: Option<&Path>, alpha: Option<&Path>) -> Result<()> {
        let g = self.grid(model)?;
        let a = self.alpha_or_start(alpha)?;
        let cl = self.problem(&g, a)?.closed_loop(&a.to_vec())?;
        let sim = pando::lti::simulate_disturbance(
            &cl,
            pando::optimizer::COMPARE_DISTURBANCE,
            pando::optimizer::COMPARE_DT,
            pando::optimizer::COMPARE_HORIZON,
        )?;
        self.write_with("traces.csv", |w| sim.traces.write_csv(w))?;
        self.write_json("metrics.json", &sim.metrics)
    }

    fn compare_on(&self, grid: &StateSpace, a0: &AlphaParams, a1: &AlphaParams) -> Result<BaselineReport> {
        if a0.ids() != a1.ids() {
            return Err(Error::Invalid(
                "baseline and tuned parameters must enable the same products".into(),
            ));
        }
        let report = compare_baseline(&self.problem(grid, *a0)?, grid, a0, a1)?;
        self.write_json("compare.json", &report)?;
        let mut buf = Vec::new();
        write_metrics_csv(&report, &mut buf)?;
        self.write("metrics.csv", &buf)?;
        Ok(report)
    }

    /// `compare.json` and `metrics.csv`.
    pub fn compare(&self, model: Option<&Path>, alpha: &Path, baseline: Option<&Path>) -> Result<()> {
        let g = self.grid(model)?;
        let a0 = self.alpha_or_start(baseline)?;
        let a1 = alpha_from_toml(&fs::read_to_string(alpha)?)?;
        self.compare_on(&g, &a0, &a1).map(|_| ())
    }

    /// Perceive, optimize against the identified model, then evaluate on the
    /// synthetic grid (or on the model when the data were recorded). Ends
    /// with the plot bundles and a digest list of every artifact.
    pub fn pipeline(&self) -> Result<()> {
        let a0 = self.cfg.start_alpha();
        self.write_alpha("alpha0.toml", &a0)?;
        let data = self.dataset(None)?;
        let truth = self.truth()?;
        let model = self.identify_data(&data, truth.as_ref())?;
        let run = self.optimize_on(&model, &a0)?;
        let eval = truth.as_ref().unwrap_or(&model);
        self.compare_on(eval, &a0, &run.alpha_star)?;
        self.write_tdes(&run.alpha_star)?;
        let mut stored = self.cfg.clone();
        if let Some(d) = &stored.scenario.dataset {
            stored.scenario.dataset = Some(fs::canonicalize(d)?);
        }
        self.write("config.toml", stored.to_toml()?.as_bytes())?;
        write_plot_bundles(self)?;
        write_digests(&self.out)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            out.push(rel.to_path_buf());
        }
    }
    Ok(())
}

/// SHA-256 of every file under `dir` except `digests.txt`, one
/// `<hex>  <relative path>` line per file, sorted by path.
pub fn digests(dir: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.retain(|p| p != Path::new("digests.txt"));
    files.sort();
    let mut s = String::new();
    for rel in files {
        let d = Sha256::digest(fs::read(dir.join(&rel))?);
        let name = rel.to_string_lossy().replace('\\', "/");
        s.push_str(&format!("{}  {}\n", hex(&d), name));
    }
    Ok(s)
}

fn write_digests(dir: &Path) -> Result<()> {
    let s = digests(dir)?;
    fs::write(dir.join("digests.txt"), s)?;
    Ok(())
}
