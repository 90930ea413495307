//! Text configuration shared by the command-line tools: the pipeline
//! settings, parameter files and identified-model files, all in TOML.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridsim::GridScenario;
use crate::lti::PerfWeights;
use crate::optimizer::OptimizerConfig;
use crate::pwl_tf::{StateSpace, StateSpaceRecord, MAX_PADE_ORDER};
use crate::services::{baseline_alpha, AlphaParams, AuxParams, Droops, FcrParams, FfrParams, LimitSet, VqParams};
use crate::sysid::IdentConfig;

/// Which grid the pipeline perceives. Without a dataset the data are
/// generated from `grid`, which is then also the truth for validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub grid: GridScenario,
}

/// Products the unit offers. Voltage support is always provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Products {
    pub fcr: bool,
    pub ffr: bool,
    pub aux: bool,
}

impl Default for Products {
    fn default() -> Self {
        Self {
            fcr: true,
            ffr: true,
            aux: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Seed of the excitation and noise generators.
    pub seed: u64,
    pub out: PathBuf,
    pub products: Products,
    /// Starting parameters; products left out start at the baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fcr: Option<FcrParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ffr: Option<FfrParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<AuxParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vq: Option<VqParams>,
    pub droops: Droops,
    pub limits: LimitSet,
    pub weights: PerfWeights,
    pub optimizer: OptimizerConfig,
    pub scenario: ScenarioConfig,
    pub identification: IdentConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            products: Products::default(),
            fcr: None,
            ffr: None,
            aux: None,
            vq: None,
            droops: Droops::default(),
            limits: LimitSet::default(),
            weights: PerfWeights::default(),
            optimizer: OptimizerConfig::default(),
            scenario: ScenarioConfig::default(),
            identification: IdentConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        parse(text)
    }

    /// Reads `path`; a relative dataset path is taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(d) = &cfg.scenario.dataset {
            if d.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.scenario.dataset = Some(base.join(d));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        render(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.droops.validate()?;
        self.limits.validate()?;
        self.weights.validate()?;
        self.optimizer.validate()?;
        if !(1..=MAX_PADE_ORDER).contains(&self.optimizer.pade_order) {
            return Err(Error::Config(format!(
                "pade_order {} outside 1..={MAX_PADE_ORDER}",
                self.optimizer.pade_order
            )));
        }
        if let Some(d) = &self.scenario.dataset {
            if !d.exists() {
                return Err(Error::Config(format!("dataset {} does not exist", d.display())));
            }
        }
        if self.identification.candidates.is_empty() {
            return Err(Error::Config("identification needs at least one candidate order".into()));
        }
        self.start_alpha().validate()
    }

    /// Baseline parameters overridden by any configured product values,
    /// with disabled products removed.
    pub fn start_alpha(&self) -> AlphaParams {
        let base = baseline_alpha(&self.limits);
        AlphaParams {
            fcr: self.products.fcr.then(|| self.fcr.or(base.fcr)).flatten(),
            ffr: self.products.ffr.then(|| self.ffr.or(base.ffr)).flatten(),
            aux: self.products.aux.then(|| self.aux.or(base.aux)).flatten(),
            vq: self.vq.unwrap_or(base.vq),
        }
    }

    /// Writes `alpha` into the product sections, as a starting point for a
    /// later run.
    pub fn set_alpha(&mut self, alpha: &AlphaParams) {
        self.products = Products {
            fcr: alpha.fcr.is_some(),
            ffr: alpha.ffr.is_some(),
            aux: alpha.aux.is_some(),
        };
        self.fcr = alpha.fcr;
        self.ffr = alpha.ffr;
        self.aux = alpha.aux;
        self.vq = Some(alpha.vq);
    }
}

/// Parameter file: sections `[fcr]`, `[ffr]`, `[aux]`, `[vq]`; a missing
/// product section means the product is not provided.
pub fn alpha_to_toml(alpha: &AlphaParams) -> Result<String> {
    render(alpha)
}

pub fn alpha_from_toml(text: &str) -> Result<AlphaParams> {
    let a: AlphaParams = parse(text)?;
    a.validate()?;
    Ok(a)
}

/// Continuous-time model file written by identification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    /// Sampling interval of the data the model came from.
    pub dt: f64,
    pub model: StateSpaceRecord,
}

impl ModelFile {
    pub fn new(model: &StateSpace, dt: f64) -> Self {
        Self {
            dt,
            model: model.into(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        render(self)
    }

    /// Parses and checks the model is a stable 2×2 grid equivalent.
    pub fn from_toml(text: &str) -> Result<(StateSpace, f64)> {
        let f: ModelFile = parse(text)?;
        let sys = StateSpace::try_from(f.model)?;
        if sys.n_inputs() != 2 || sys.n_outputs() != 2 {
            return Err(Error::Dimension("grid model must have 2 inputs and 2 outputs".into()));
        }
        if !sys.is_stable() {
            return Err(Error::Unstable("grid model is not stable".into()));
        }
        Ok((sys, f.dt))
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn render<T: Serialize>(v: &T) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.start_alpha(), baseline_alpha(&LimitSet::default()));
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = PipelineConfig::default();
        c.scenario.grid = GridScenario::oscillatory();
        c.products.fcr = false;
        c.seed = 7;
        let back = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(back.start_alpha().fcr.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml("sed = 3").is_err());
        assert!(PipelineConfig::from_toml("[fcr]\nt_i = 1.0\nt_a = 2.0\nt_z = 1.0").is_err());
        assert!(PipelineConfig::from_toml("[limits.grid_code]\nt_i_max = 1.0").is_err());
    }

    #[test]
    fn written_alpha_becomes_start() {
        let mut a = baseline_alpha(&LimitSet::default());
        a.fcr = Some(FcrParams { t_i: 0.5, t_a: 20.0 });
        a.aux = None;
        let mut c = PipelineConfig::default();
        c.set_alpha(&a);
        let back = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back.start_alpha(), a);
    }

    #[test]
    fn alpha_file_round_trip() {
        let mut a = baseline_alpha(&LimitSet::default());
        a.ffr = None;
        let text = alpha_to_toml(&a).unwrap();
        assert!(text.contains("[fcr]") && !text.contains("[ffr]"));
        assert_eq!(alpha_from_toml(&text).unwrap(), a);
    }

    #[test]
    fn missing_dataset_rejected() {
        let c = PipelineConfig::from_toml("[scenario]\ndataset = \"/nonexistent/data.csv\"").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let g = crate::gridsim::make_nominal_grid(&GridScenario::default()).unwrap();
        let text = ModelFile::new(&g, 1e-3).to_toml().unwrap();
        let (back, dt) = ModelFile::from_toml(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(dt, 1e-3);
    }
}
