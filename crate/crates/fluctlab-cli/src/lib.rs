//! Experiment runner: configs in, artifacts plus manifest out.

pub mod config;
pub mod experiments;

use anyhow::{Context, Result};
use config::{Experiment, ExperimentConfig};
use experiments::{Check, Outcome};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub fluctlab_version: String,
    pub runner_version: String,
    pub artifacts: Vec<Artifact>,
    pub pass: bool,
    /// Not part of any hashed artifact.
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(&cfg.canonical())?))
}

/// Result of one run as seen by callers.
#[derive(Debug)]
pub struct RunResult {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub outcome: Outcome,
}

/// Run the configured experiment and write its files into `<out>/<experiment>/`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let exp = cfg.experiment.unwrap();
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let dir = out.join(exp.name());
    let start = std::time::Instant::now();
    let outcome = if exp == Experiment::Report {
        report(cfg, &out)?
    } else {
        experiments::run_experiment(cfg).with_context(|| format!("experiment {}", exp.name()))?
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let verdict = json!({
        "experiment": exp.name(),
        "pass": outcome.pass(),
        "checks": outcome.checks,
        "metrics": outcome.metrics,
    });
    let mut files = outcome.files.clone();
    files.push(("verdict.json".into(), serde_json::to_vec_pretty(&verdict)?));
    let mut artifacts = Vec::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(Artifact { file: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    let manifest = Manifest {
        experiment: exp.name().into(),
        config_sha256: config_hash(cfg)?,
        config: cfg.canonical(),
        fluctlab_version: fluctlab_version().into(),
        runner_version: env!("CARGO_PKG_VERSION").into(),
        artifacts,
        pass: outcome.pass(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mpath = dir.join("manifest.json");
    std::fs::write(&mpath, serde_json::to_vec_pretty(&manifest)?)
        .with_context(|| format!("writing {}", mpath.display()))?;
    Ok(RunResult { dir, manifest, outcome })
}

fn fluctlab_version() -> &'static str {
    // both crates are versioned together in this workspace
    env!("CARGO_PKG_VERSION")
}

/// Collect `verdict.json` files below the input directories.
fn report(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let inputs = cfg.inputs.clone().unwrap_or_else(|| vec![out.to_path_buf()]);
    let mut verdicts: Vec<(String, Value)> = Vec::new();
    for root in &inputs {
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
            .with_context(|| format!("reading {}", root.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("verdict.json").is_file() && !p.ends_with("report"))
            .collect();
        dirs.sort();
        for d in dirs {
            let text = std::fs::read_to_string(d.join("verdict.json"))?;
            verdicts.push((d.display().to_string(), serde_json::from_str(&text)?));
        }
    }
    let summary = experiments::report_json(&verdicts);
    let mut md = String::from("| experiment | verdict | failed checks |\n|---|---|---|\n");
    let mut o = Outcome::default();
    for e in summary["experiments"].as_array().unwrap() {
        let pass = e["pass"].as_bool().unwrap_or(false);
        let failed: Vec<String> =
            e["failed"].as_array().unwrap().iter().map(|c| c.as_str().unwrap_or("").to_string()).collect();
        md.push_str(&format!(
            "| {} | {} | {} |\n",
            e["experiment"].as_str().unwrap_or("?"),
            if pass { "PASS" } else { "FAIL" },
            failed.join(", ")
        ));
        o.checks.push(Check {
            name: e["experiment"].as_str().unwrap_or("?").to_string(),
            value: failed.len() as f64,
            limit: "no failed checks".into(),
            pass,
        });
    }
    o.metrics.insert("experiments".into(), json!(verdicts.len()));
    o.files.push(("report.json".into(), serde_json::to_vec_pretty(&summary)?));
    o.files.push(("report.md".into(), md.into_bytes()));
    Ok(o)
}
