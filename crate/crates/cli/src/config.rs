//! The experiment file: one JSON document drives every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svcrb_core::musmdp::TAIL_TOL;
use svcrb_core::rb::UserGroup;
use svcrb_core::sim::{SchedulerSpec, SimConfig};
use svcrb_lp::SolverOptions;

use crate::error::CliError;

pub const CONFIG_SCHEMA: &str = "svcrb.config/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub groups: Vec<UserGroup>,
    /// Subchannels `M` for `solve-rb`, `solve-musmdp` and `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subchannels: Option<usize>,
    /// Subchannel counts visited by `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<usize>>,
    /// Per-second discount factor.
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub warmup: usize,
    #[serde(default = "yes")]
    pub record_trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Truncation of first-passage laws in the joint model.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}
fn default_discount() -> f64 {
    0.99
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_horizon() -> usize {
    600
}
fn yes() -> bool {
    true
}
fn default_tail_tol() -> f64 {
    TAIL_TOL
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(e, path))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(e.into_inner().to_string(), path)
        })?;
        svcrb_lp::check_schema(&cfg.schema, CONFIG_SCHEMA).map_err(|e| CliError::config(e.to_string(), "schema"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.groups.is_empty() {
            return Err(CliError::config("at least one group is required", "groups"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            g.video
                .validate()
                .map_err(|e| CliError::config(e.to_string(), format!("groups[{i}].video")))?;
            if let Err(d) = g.channel.validate() {
                let msg = d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
                return Err(CliError::config(msg, format!("groups[{i}].channel")));
            }
            g.qa.validate(&g.video, g.channel.num_states())
                .map_err(|e| CliError::config(e.to_string(), format!("groups[{i}].qa")))?;
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(CliError::config("discount must lie in (0, 1)", "discount"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("at least one seed is required", "seeds"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(CliError::config("must be positive", "tail_tol"));
        }
        self.solver
            .validate()
            .map_err(|e| CliError::config(e.to_string(), "solver"))?;
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn subchannels(&self) -> Result<usize, CliError> {
        match self.subchannels {
            Some(m) if m >= 1 => Ok(m),
            Some(_) => Err(CliError::config("must be at least 1", "subchannels")),
            None => Err(CliError::config("required by this subcommand", "subchannels")),
        }
    }

    pub fn scheduler(&self) -> Result<&SchedulerSpec, CliError> {
        self.scheduler
            .as_ref()
            .ok_or_else(|| CliError::config("required by this subcommand", "scheduler"))
    }

    /// Discount per segment, the step of the bandit relaxation.
    pub fn slot_discount(&self) -> f64 {
        self.discount.powf(self.groups[0].video.segment_duration)
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let cfg = SimConfig {
            groups: self.groups.clone(),
            subchannels: self.subchannels()?,
            scheduler: self.scheduler()?.clone(),
            horizon: self.horizon,
            discount: self.discount,
            seed: self.seeds[0],
            warmup: self.warmup,
            record_trace: self.record_trace,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
