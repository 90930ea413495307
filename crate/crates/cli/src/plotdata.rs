//! CSV bundles for external plotting. Nothing is rendered here.

use std::fs;
use std::io::Write;
use std::path::Path;

use pando::config::{alpha_from_toml, ModelFile, PipelineConfig};
use pando::optimizer::{compare_baseline, BaselineReport};
use pando::plotdata::{bode_table, step_bundle, traces_bundle, Table};
use pando::pwl_tf::StateSpace;
use pando::{Error, Result};

use crate::commands::{Context, BODE_BAND_HZ};

/// Rows `metric,baseline,optimized,reduction_pct`.
pub fn write_metrics_csv<W: Write>(r: &BaselineReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["metric", "baseline", "optimized", "reduction_pct"])?;
    let rows = [
        ("J", r.baseline.j, r.optimized.j, r.j_reduction_pct),
        ("rocof_max", r.baseline.rocof_max, r.optimized.rocof_max, r.rocof_reduction_pct),
        ("nadir", r.baseline.nadir, r.optimized.nadir, r.nadir_reduction_pct),
        ("v_peak", r.baseline.v_peak, r.optimized.v_peak, r.v_peak_reduction_pct),
    ];
    for (name, a, b, c) in rows {
        wr.write_record([name.to_string(), format!("{a:?}"), format!("{b:?}"), format!("{c:?}")])?;
    }
    wr.flush()?;
    Ok(())
}

/// Identified model against the truth, when known, over the comparison band.
pub fn bode_bundle(model: &StateSpace, truth: Option<&StateSpace>) -> Result<Table> {
    let mut systems = vec![("model", model)];
    if let Some(t) = truth {
        systems.push(("truth", t));
    }
    bode_table(&systems, BODE_BAND_HZ, 200)
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let p = dir.join(name);
    fs::read_to_string(&p).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Invalid(format!("missing artifact {}", p.display())),
        _ => Error::Io(e),
    })
}

/// Writes `plot/step.csv`, `plot/bode.csv`, `plot/traces.csv` and
/// `plot/metrics.csv` from the artifacts in the context's directory.
pub fn write_plot_bundles(ctx: &Context) -> Result<()> {
    let dir = &ctx.out;
    let a0 = alpha_from_toml(&read(dir, "alpha0.toml")?)?;
    let a1 = alpha_from_toml(&read(dir, "alpha_star.toml")?)?;
    let (model, _) = ModelFile::from_toml(&read(dir, "model.toml")?)?;
    let truth = ctx.truth()?;
    let cfg = &ctx.cfg;

    let step = step_bundle(&a1, &cfg.droops, cfg.optimizer.pade_order)?;
    ctx.write_with_table("plot/step.csv", &step)?;
    let bode = bode_bundle(&model, truth.as_ref())?;
    ctx.write_with_table("plot/bode.csv", &bode)?;

    let eval = truth.as_ref().unwrap_or(&model);
    let problem = ctx.problem(eval, a0)?;
    let traces = traces_bundle(&problem, &a0, &a1)?;
    ctx.write_with_table("plot/traces.csv", &traces)?;
    let report = compare_baseline(&problem, eval, &a0, &a1)?;
    let mut buf = Vec::new();
    write_metrics_csv(&report, &mut buf)?;
    ctx.write("plot/metrics.csv", &buf)
}

/// Plot bundles for a finished pipeline directory. Needs `config.toml`,
/// `alpha0.toml`, `alpha_star.toml` and `model.toml` there.
pub fn emit_plotdata(dir: &Path) -> Result<()> {
    let cfg = PipelineConfig::from_toml(&read(dir, "config.toml")?)?;
    cfg.validate()?;
    write_plot_bundles(&Context::new(cfg, dir.to_path_buf()))
}

impl Context {
    pub fn write_with_table(&self, name: &str, t: &Table) -> Result<()> {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        self.write(name, &buf)
    }
}
