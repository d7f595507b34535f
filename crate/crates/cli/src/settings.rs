//! Run configuration files and command-line overrides.
//!
//! Files are TOML. Powers and the SINR threshold are given in dB here and
//! converted once; everything past this module is linear.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use icdqn::agent::TrainingConfig;
use icdqn::{db_to_linear, GainMatrix, SystemConfig};
use serde::{Deserialize, Serialize};

/// The system section of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub users: usize,
    pub gamma0_db: f64,
    pub p0: f64,
    pub p_min_db: f64,
    pub p_max_db: f64,
    pub n_levels: usize,
    /// Receiver noise power, common to all users (linear).
    pub noise: f64,
    /// Mean link gains (linear); all ones when omitted.
    pub mean_gains: Option<Vec<Vec<f64>>>,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            users: 4,
            gamma0_db: -10.0,
            p0: 0.3,
            p_min_db: 0.0,
            p_max_db: 4.0,
            n_levels: 5,
            noise: 1.0,
            mean_gains: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub system: SystemSection,
    pub training: TrainingConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Options shared by every command that needs a system model.
#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// TOML file with `[system]` and `[training]` sections.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub users: Option<usize>,
    /// SINR threshold in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma0_db: Option<f64>,
    /// Outage probability target.
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_min_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_max_db: Option<f64>,
    /// Discrete power levels per user.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Training episodes.
    #[arg(long)]
    pub episodes: Option<usize>,
}

impl SystemArgs {
    /// File config (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<(SystemConfig, TrainingConfig)> {
        let mut file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let s = &mut file.system;
        if let Some(v) = self.users {
            if v != s.users {
                s.mean_gains = None;
            }
            s.users = v;
        }
        s.gamma0_db = self.gamma0_db.unwrap_or(s.gamma0_db);
        s.p0 = self.p0.unwrap_or(s.p0);
        s.p_min_db = self.p_min_db.unwrap_or(s.p_min_db);
        s.p_max_db = self.p_max_db.unwrap_or(s.p_max_db);
        s.n_levels = self.levels.unwrap_or(s.n_levels);
        if let Some(e) = self.episodes {
            file.training.episodes = e;
        }
        let system = to_system(&file.system)?;
        file.training.validate()?;
        Ok((system, file.training))
    }
}

pub fn to_system(s: &SystemSection) -> Result<SystemConfig> {
    let mean_gains = match &s.mean_gains {
        Some(rows) => {
            if rows.len() != s.users {
                bail!("mean_gains has {} rows but users = {}", rows.len(), s.users);
            }
            GainMatrix::from_rows(rows.clone())?
        }
        None => GainMatrix::filled(s.users, 1.0),
    };
    let config = SystemConfig {
        users: s.users,
        gamma0: db_to_linear(s.gamma0_db),
        p0: s.p0,
        p_min: db_to_linear(s.p_min_db),
        p_max: db_to_linear(s.p_max_db),
        noise: vec![s.noise; s.users],
        mean_gains,
        n_levels: s.n_levels,
    };
    config.validate()?;
    Ok(config)
}
