use std::fs;
use std::path::Path;
use std::process::Command;

use pando::config::{alpha_from_toml, ModelFile};
use pando::services::{baseline_alpha, LimitSet};

fn pando(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pando")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn error_line(stderr: &str) -> serde_json::Value {
    let line = stderr.lines().last().expect("an error record");
    serde_json::from_str(line).expect("error record is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn baseline_matches_the_grid_code_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = pando(&["baseline", "--out", s(dir.path())]);
    assert_eq!(code, 0);
    let a = alpha_from_toml(&fs::read_to_string(dir.path().join("alpha0.toml")).unwrap()).unwrap();
    assert_eq!(a, baseline_alpha(&LimitSet::default()));
    let f = a.fcr.unwrap();
    let r = a.ffr.unwrap();
    assert_eq!((f.t_i, f.t_a), (2.0, 30.0));
    assert_eq!((r.t_a, r.t_d, r.t_r, r.x), (2.0, 10.0, 20.0, 1.0));
    assert_eq!(a.aux.unwrap().m, 0.0);
    assert_eq!((a.vq.t90, a.vq.t100), (5.0, 60.0));
}

#[test]
fn disabled_product_is_left_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[products]\nfcr = false\n").unwrap();
    let (code, _) = pando(&["baseline", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("alpha0.toml")).unwrap();
    assert!(!text.contains("[fcr]"));
    assert!(alpha_from_toml(&text).unwrap().fcr.is_none());
}

#[test]
fn translate_writes_curves_and_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = pando(&["translate", "--pade-order", "8", "--out", s(dir.path())]);
    assert_eq!(code, 0);
    let mut rd = csv::Reader::from_path(dir.path().join("step.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["t", "fcr_exact", "fcr_approx", "ffr_exact", "ffr_approx", "vq_exact", "vq_approx", "aux"]
    );
    let tdes = fs::read_to_string(dir.path().join("tdes.toml")).unwrap();
    assert!(tdes.contains("pade_order = 8"));
    assert!(tdes.contains("[realization]"));
}

#[test]
fn stage_artifacts_chain_without_edits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("c.toml");
    fs::write(&cfg, "[identification]\nduration = 20.0\n").unwrap();
    let (code, err) = pando(&["identify", "--config", s(&cfg), "--out", s(out), "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    let (g, dt) = ModelFile::from_toml(&fs::read_to_string(out.join("model.toml")).unwrap()).unwrap();
    assert_eq!(dt, 1e-3);
    assert_eq!((g.n_inputs(), g.n_outputs()), (2, 2));

    // The generated dataset is accepted back as input.
    let again = out.join("again");
    let data = out.join("dataset.csv");
    let (code, err) = pando(&["identify", "--config", s(&cfg), "--data", s(&data), "--out", s(&again)]);
    assert_eq!(code, 0, "{err}");

    let model = out.join("model.toml");
    let (code, err) = pando(&["optimize", "--model", s(&model), "--out", s(out)]);
    assert_eq!(code, 0, "{err}");
    let star = out.join("alpha_star.toml");
    let (code, err) = pando(&["simulate", "--alpha", s(&star), "--out", s(out)]);
    assert_eq!(code, 0, "{err}");
    let (code, err) = pando(&["compare", "--alpha", s(&star), "--out", s(out)]);
    assert_eq!(code, 0, "{err}");

    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.starts_with("iter,J,grad_norm,step,fcr_t_i,fcr_t_a,"));
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["J"].as_f64().unwrap() > 0.0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    assert!(report["J_reduction_pct"].as_f64().unwrap() > 0.0);
}

#[test]
fn infeasible_limits_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    // FFR cannot finish its support phase before the device limit.
    fs::write(&cfg, "[limits.device]\nt_d_max_ffr = 5.0\n").unwrap();
    let (code, err) = pando(&["optimize", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 2);
    assert_eq!(error_line(&err)["error"], "infeasible");
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "sed = 1\n").unwrap();
    let (code, err) = pando(&["baseline", "--config", s(&cfg)]);
    assert_eq!(code, 1);
    assert_eq!(error_line(&err)["error"], "config");

    let (code, err) = pando(&["baseline", "--pade-order", "40", "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert_eq!(error_line(&err)["error"], "config");

    let (code, err) = pando(&["launch"]);
    assert_eq!(code, 1);
    assert_eq!(error_line(&err)["error"], "usage");
}

#[test]
fn plotdata_needs_the_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = pando(&["plotdata", "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(error_line(&err)["message"].as_str().unwrap().contains("missing artifact"));
}

#[test]
fn help_lists_the_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_pando")).arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--config", "--seed", "--out", "--pade-order", "--epsilon", "--snr"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn pipeline_bundles_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let (code, err) = pando(&["pipeline", "--seed", "7", "--out", s(d)]);
        assert_eq!(code, 0, "{err}");
    }
    let da = fs::read_to_string(a.join("digests.txt")).unwrap();
    assert_eq!(da, fs::read_to_string(b.join("digests.txt")).unwrap());
    for f in ["plot/step.csv", "plot/bode.csv", "plot/traces.csv", "plot/metrics.csv", "alpha_star.toml"] {
        assert!(da.contains(f), "{f} not in digests");
    }
    let bode = fs::read_to_string(a.join("plot/bode.csv")).unwrap();
    assert!(bode.starts_with("f_hz,omega,model_mag_db_11,model_phase_deg_11"));
    assert!(bode.lines().next().unwrap().contains("truth_mag_db_22"));
    let metrics = fs::read_to_string(a.join("plot/metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,baseline,optimized,reduction_pct\nJ,"));

    // The stored config reproduces the run and rebuilds the bundles.
    fs::remove_dir_all(a.join("plot")).unwrap();
    let (code, err) = pando(&["plotdata", "--out", s(&a)]);
    assert_eq!(code, 0, "{err}");
    let rebuilt = pando::config::PipelineConfig::load(&a.join("config.toml")).unwrap();
    assert_eq!(rebuilt.seed, 7);
    assert_eq!(
        fs::read(a.join("plot/traces.csv")).unwrap(),
        fs::read(b.join("plot/traces.csv")).unwrap()
    );
}
