//! Experiment configuration files (TOML).

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ProfileSweep,
    SpectrumSweep,
    Constants,
    SpdeLinear,
    SpdeLimit,
    Offsite,
    GkRun,
    InterfaceTrack,
    Report,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ProfileSweep => "profile-sweep",
            Experiment::SpectrumSweep => "spectrum-sweep",
            Experiment::Constants => "constants",
            Experiment::SpdeLinear => "spde-linear",
            Experiment::SpdeLimit => "spde-limit",
            Experiment::Offsite => "offsite",
            Experiment::GkRun => "gk-run",
            Experiment::InterfaceTrack => "interface-track",
            Experiment::Report => "report",
        }
    }
}

/// Stiffness: a number or a lattice preset "N^(2d/7)" / "N^(2d/5)".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stiffness {
    Value(f64),
    Preset(String),
}

/// Every field is optional in the file; experiments fill their own defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Reaction id: cubic, particle, perturbed_cubic:δ, tilted_cubic:a, balanced_quartic:b.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reaction: Option<String>,
    /// Flip-rate family for lattice runs: bistable, linear:a, constant:c.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<String>,
    /// Noise coefficients by name: "one" or "particle" (sqrt(2 chi), sqrt(<c_0>)).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2: Option<String>,
    /// Grid points or lattice size N.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Transverse grid points (d = 2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Stiffness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_sweep: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    /// Time between stored samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    /// Initial density of lattice runs (product Bernoulli).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// Exchange rate per bond; defaults to N^2, 0 switches Kawasaki off.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchange_rate: Option<f64>,
    /// Off-interface side: "minus" or "plus".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    /// Paths for the transverse-channel comparison of spde-linear.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_paths: Option<usize>,
    /// Evaluate the experiment's assertions (exit code depends on them).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assertions: Option<bool>,
    /// Directories searched by `report`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<PathBuf>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Check the invariants that do not depend on the experiment.
    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_none() {
            bail!("no experiment selected");
        }
        if self.seed.is_none() {
            bail!("a seed is required (config `seed` or --seed)");
        }
        if let Some(s) = &self.k_sweep {
            if s.is_empty() || s.windows(2).any(|w| w[1] <= w[0]) {
                bail!("k_sweep must be non-empty and strictly increasing");
            }
        }
        if let Some(d) = self.d {
            if !(1..=2).contains(&d) {
                bail!("d must be 1 or 2");
            }
        }
        if let Some(r) = &self.reaction {
            fluctlab::reaction::ReactionId::Named(r.clone())
                .build()
                .with_context(|| format!("reaction `{r}`"))?;
        }
        if let Some(r) = &self.rates {
            crate::experiments::flip_rates(r, self.d.unwrap_or(1))?;
        }
        for g in [&self.g1, &self.g2].into_iter().flatten() {
            if g != "one" && g != "particle" {
                bail!("noise coefficient `{g}` is neither `one` nor `particle`");
            }
        }
        Ok(())
    }

    /// The configuration that determines the results (output location and thread count removed).
    pub fn canonical(&self) -> ExperimentConfig {
        ExperimentConfig { out: None, threads: None, ..self.clone() }
    }
}
