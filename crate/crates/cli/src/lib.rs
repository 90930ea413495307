//! Batch front end: each subcommand reads the pipeline configuration, runs
//! one stage (or all of them) and writes its artifacts to the output
//! directory.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 for
//! numerical failures such as an unstable loop or infeasible limits. Every
//! failure also prints one JSON line `{"error": kind, "message": ...}` on
//! stderr.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pando::config::PipelineConfig;
use pando::Error;

pub mod commands;
pub mod plotdata;

pub use commands::Context;
pub use plotdata::emit_plotdata;

#[derive(Debug, Parser)]
#[command(name = "pando", version, about = "Tune ancillary-service responses against an identified grid equivalent")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Flags win over config-file values.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for excitation, noise and multistart.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Padé order per delay term (1 to 12).
    #[arg(long, global = true)]
    pub pade_order: Option<usize>,
    /// Pole of the approximate integrators in the cost.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Measurement SNR in dB for generated data; `inf` for noiseless.
    #[arg(long, global = true)]
    pub snr: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Desired response coefficients and open-loop step curves.
    Translate {
        /// Parameter file; the configured start parameters otherwise.
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// Cheapest grid-code-compliant parameters.
    Baseline,
    /// Fit a grid equivalent from a dataset (or generated data).
    Identify {
        /// CSV with columns t,dp,dq,df,dv.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Tune the parameters against a grid model.
    Optimize {
        /// Identified model file; the configured synthetic grid otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Start parameters.
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// Closed-loop response to a step disturbance.
    Simulate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// Baseline against tuned parameters.
    Compare {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Tuned parameters.
        #[arg(long)]
        alpha: PathBuf,
        /// Reference parameters; the configured start parameters otherwise.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Identify, optimize and evaluate in one run.
    Pipeline,
    /// Rebuild the plot bundles of a pipeline output directory.
    Plotdata,
}

/// Loads the configuration and applies the flag overrides. The returned
/// config keeps the file's `out`; the effective directory is returned
/// separately so that a stored config does not depend on where it was run.
pub fn resolve(g: &GlobalArgs) -> pando::Result<(PipelineConfig, PathBuf)> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
        cfg.optimizer.seed = s;
    }
    if let Some(n) = g.pade_order {
        cfg.optimizer.pade_order = n;
    }
    if let Some(e) = g.epsilon {
        cfg.weights.epsilon = e;
    }
    if let Some(snr) = g.snr {
        cfg.identification.snr_db = if snr.is_infinite() && snr > 0.0 { None } else { Some(snr) };
    }
    cfg.validate()?;
    let out = g.out.clone().unwrap_or_else(|| cfg.out.clone());
    Ok((cfg, out))
}

pub fn run(cli: &Cli) -> pando::Result<()> {
    let (cfg, out) = resolve(&cli.global)?;
    let ctx = Context::new(cfg, out);
    match &cli.command {
        Command::Translate { alpha } => ctx.translate(alpha.as_deref()),
        Command::Baseline => ctx.baseline().map(|_| ()),
        Command::Identify { data } => ctx.identify(data.as_deref()).map(|_| ()),
        Command::Optimize { model, alpha } => ctx.optimize(model.as_deref(), alpha.as_deref()).map(|_| ()),
        Command::Simulate { model, alpha } => ctx.simulate(model.as_deref(), alpha.as_deref()),
        Command::Compare { model, alpha, baseline } => ctx.compare(model.as_deref(), alpha, baseline.as_deref()),
        Command::Pipeline => ctx.pipeline(),
        Command::Plotdata => emit_plotdata(&ctx.out),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Machine-readable failure line.
pub fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            eprintln!("{}", error_record("usage", &e.kind().to_string()));
            return 1;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            exit_code(&e)
        }
    }
}
