//! Run configuration: a TOML file with optional `[scenario]`, `[channel]`,
//! `[qos]`, `[environment]`, `[agent]`, `[baseline]`, `[baseline.anneal]`,
//! `[baseline.smooth]` and `[sweep]` tables plus a few top-level keys.
//! Unknown keys are rejected; every key left out takes its default and is
//! reported through the log.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{AnnealConfig, Layout, SmoothOptConfig};
use crate::channel::ChannelParams;
use crate::ddpg::AgentConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::network::QosParams;
use crate::scenario::{AreaConfig, Point, UserDistribution};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Train,
    #[default]
    Evaluate,
    SweepDensity,
    CompareDistributions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Drl,
    Anneal,
    Smooth,
    Fixed,
    Oracle,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Drl => "drl",
            Solver::Anneal => "anneal",
            Solver::Smooth => "smooth",
            Solver::Fixed => "fixed",
            Solver::Oracle => "oracle",
        }
    }

    pub fn from_name(s: &str) -> Option<Solver> {
        [Solver::Drl, Solver::Anneal, Solver::Smooth, Solver::Fixed, Solver::Oracle]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    #[default]
    Uniform,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub width_m: f64,
    pub height_m: f64,
    pub uav_altitude_m: f64,
    /// K
    pub users: usize,
    /// P
    pub uavs: usize,
    /// Time slots per evaluation timeline.
    pub slots: usize,
    pub distribution: DistributionKind,
    /// Mixture centers for the Gaussian distribution; empty means the area
    /// midpoint.
    pub gaussian_centers: Vec<[f64; 2]>,
    /// Mixture std; 0 means width / 8.
    pub gaussian_sigma_m: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            width_m: 800.0,
            height_m: 800.0,
            uav_altitude_m: 100.0,
            users: 24,
            uavs: 2,
            slots: 100,
            distribution: DistributionKind::Uniform,
            gaussian_centers: Vec::new(),
            gaussian_sigma_m: 0.0,
        }
    }
}

impl ScenarioSection {
    pub fn area(&self) -> AreaConfig {
        AreaConfig {
            width_m: self.width_m,
            height_m: self.height_m,
            uav_altitude_m: self.uav_altitude_m,
        }
    }

    pub fn user_distribution(&self, kind: DistributionKind) -> UserDistribution {
        let area = self.area();
        match kind {
            DistributionKind::Uniform => UserDistribution::Uniform,
            DistributionKind::Gaussian => {
                let centers = if self.gaussian_centers.is_empty() {
                    vec![area.center()]
                } else {
                    self.gaussian_centers.iter().map(|&c| Point::from(c)).collect()
                };
                let sigma_m = if self.gaussian_sigma_m > 0.0 {
                    self.gaussian_sigma_m
                } else {
                    area.width_m / 8.0
                };
                UserDistribution::Gaussian { centers, sigma_m }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let area = self.area();
        area.validate()?;
        if self.uavs == 0 {
            return Err(Error::invalid("scenario.uavs", "must be >= 1"));
        }
        if self.slots == 0 {
            return Err(Error::invalid("scenario.slots", "must be >= 1"));
        }
        if self.gaussian_sigma_m < 0.0 || !self.gaussian_sigma_m.is_finite() {
            return Err(Error::invalid("scenario.gaussian_sigma_m", "must be >= 0 (0 selects width / 8)"));
        }
        if let Some(c) = self.gaussian_centers.iter().find(|c| !area.contains(&Point::from(**c))) {
            return Err(Error::invalid(
                "scenario.gaussian_centers",
                format!("center ({}, {}) lies outside the area", c[0], c[1]),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    #[default]
    Center,
    Corners,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    /// Solvers run by `evaluate`, in column order.
    pub solvers: Vec<Solver>,
    pub fixed_layout: LayoutKind,
    /// Points used when `fixed_layout = "custom"`.
    pub custom_layout: Vec<[f64; 2]>,
    pub grid_resolution: usize,
    pub anneal: AnnealConfig,
    pub smooth: SmoothOptConfig,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            solvers: vec![Solver::Drl, Solver::Anneal, Solver::Smooth, Solver::Fixed],
            fixed_layout: LayoutKind::Center,
            custom_layout: Vec::new(),
            grid_resolution: 81,
            anneal: AnnealConfig::default(),
            smooth: SmoothOptConfig::default(),
        }
    }
}

impl BaselineSection {
    pub fn layout(&self) -> Layout {
        match self.fixed_layout {
            LayoutKind::Center => Layout::Center,
            LayoutKind::Corners => Layout::Corners,
            LayoutKind::Custom => Layout::Custom(self.custom_layout.iter().map(|&c| Point::from(c)).collect()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::invalid("baseline.solvers", "list at least one solver"));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return Err(Error::invalid("baseline.solvers", format!("{s} listed twice")));
            }
        }
        if self.grid_resolution == 0 {
            return Err(Error::invalid("baseline.grid_resolution", "must be >= 1"));
        }
        if self.fixed_layout == LayoutKind::Custom && self.custom_layout.is_empty() {
            return Err(Error::invalid("baseline.custom_layout", "required when fixed_layout = \"custom\""));
        }
        self.anneal.validate()?;
        self.smooth.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub k_values: Vec<usize>,
    /// Solvers for the sweep; empty means `baseline.solvers`.
    pub solvers: Vec<Solver>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            k_values: vec![4, 8, 16, 24],
            solvers: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub output_dir: PathBuf,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Write zeros in wall-clock columns so repeated runs are byte-identical.
    pub reproducible: bool,
    /// Agent checkpoint to read for evaluation. Empty means
    /// `<output_dir>/agent.ckpt`.
    pub checkpoint: PathBuf,
    pub scenario: ScenarioSection,
    pub channel: ChannelParams,
    pub qos: QosParams,
    pub environment: EnvConfig,
    pub agent: AgentConfig,
    pub baseline: BaselineSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: ExperimentKind::Evaluate,
            output_dir: PathBuf::from("out"),
            seed: 0,
            reproducible: false,
            checkpoint: PathBuf::new(),
            scenario: ScenarioSection::default(),
            channel: ChannelParams::default(),
            qos: QosParams::default(),
            environment: EnvConfig::default(),
            agent: AgentConfig::default(),
            baseline: BaselineSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.channel.validate()?;
        self.qos.validate()?;
        self.environment.validate()?;
        self.agent.validate()?;
        self.baseline.validate()?;
        if self.baseline.fixed_layout == LayoutKind::Custom && self.baseline.custom_layout.len() != self.scenario.uavs {
            return Err(Error::invalid(
                "baseline.custom_layout",
                format!("has {} points but scenario.uavs = {}", self.baseline.custom_layout.len(), self.scenario.uavs),
            ));
        }
        if self.experiment == ExperimentKind::SweepDensity && self.sweep.k_values.is_empty() {
            return Err(Error::invalid("sweep.k_values", "must not be empty for a density sweep"));
        }
        Ok(())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        if self.checkpoint.as_os_str().is_empty() {
            self.output_dir.join("agent.ckpt")
        } else {
            self.checkpoint.clone()
        }
    }

    pub fn sweep_solvers(&self) -> &[Solver] {
        if self.sweep.solvers.is_empty() {
            &self.baseline.solvers
        } else {
            &self.sweep.solvers
        }
    }
}

/// Parses and validates config text. Returns the config and the dotted
/// paths of every key that was filled from defaults.
pub fn parse_config(text: &str, path: &Path) -> Result<(RunConfig, Vec<String>)> {
    let parse_err = |message: String| Error::ConfigParse {
        path: path.to_path_buf(),
        message,
    };
    let given: toml::Table = toml::from_str(text).map_err(|e| parse_err(e.message().to_string()))?;
    let cfg: RunConfig = toml::from_str(text).map_err(|e| parse_err(flatten(&e)))?;
    cfg.validate()?;
    let full = toml::Table::try_from(&cfg).map_err(|e| parse_err(e.to_string()))?;
    let mut defaulted = Vec::new();
    collect_defaults(&full, &given, "", &mut defaulted);
    Ok((cfg, defaulted))
}

fn flatten(e: &toml::de::Error) -> String {
    e.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn collect_defaults(full: &toml::Table, given: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in full {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (value, given.get(key)) {
            (toml::Value::Table(sub), Some(toml::Value::Table(g))) => collect_defaults(sub, g, &path, out),
            (toml::Value::Table(sub), None) => collect_defaults(sub, &toml::Table::new(), &path, out),
            (_, Some(_)) => {}
            (v, None) => {
                log::info!("default {path} = {v}");
                out.push(path);
            }
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text, path).map(|(cfg, _)| cfg)
}
