use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{RewardMode, TrainingConfig};
use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};

/// Default number of test realizations per sweep point.
pub const DEFAULT_REALIZATIONS: usize = 500;

/// The system parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Power budget in dB.
    PMaxDb,
    /// Outage threshold `p0`.
    P0,
    /// Number of user pairs.
    Users,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::PMaxDb => "p-max-db",
            SweepParameter::P0 => "p0",
            SweepParameter::Users => "users",
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p-max-db" | "p-max" | "pmax" => Ok(SweepParameter::PMaxDb),
            "p0" => Ok(SweepParameter::P0),
            "users" | "k" | "K" => Ok(SweepParameter::Users),
            _ => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter `{s}`"
            ))),
        }
    }
}

/// A power-allocation method compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// DQN trained with the training config's reward mode.
    Dqn,
    /// DQN retrained with the reliability indicator removed from the reward.
    DqnNoConstraint,
    /// Max-min SINR geometric program, solved per realization.
    Gp,
    Wmmse,
    /// Uniformly random joint action.
    Random,
    /// Every user at `p_max`.
    EqualPower,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dqn,
        Method::DqnNoConstraint,
        Method::Gp,
        Method::Wmmse,
        Method::Random,
        Method::EqualPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dqn => "dqn",
            Method::DqnNoConstraint => "dqn-no-constraint",
            Method::Gp => "gp",
            Method::Wmmse => "wmmse",
            Method::Random => "random",
            Method::EqualPower => "equal-power",
        }
    }

    /// Stable index used in seed paths.
    pub fn code(self) -> u64 {
        self as u64
    }

    pub fn is_dqn(self) -> bool {
        matches!(self, Method::Dqn | Method::DqnNoConstraint)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Everything needed to rerun a sweep exactly. Serialized as the run
/// manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    /// Strictly increasing. dB for `p-max-db`, a probability for `p0`, an
    /// integer for `users`.
    pub values: Vec<f64>,
    pub realizations: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Parameters not being swept.
    pub base: SystemConfig,
    pub training: TrainingConfig,
    /// Train DQN methods during the sweep; otherwise load them from
    /// `checkpoint_dir`.
    pub train_inline: bool,
    /// Where DQN checkpoints are read from, or written to when training
    /// inline.
    pub checkpoint_dir: Option<PathBuf>,
}

impl SweepSpec {
    /// A sweep over `parameter` with the reference system, default training
    /// and inline training.
    pub fn new(
        parameter: SweepParameter,
        values: Vec<f64>,
        methods: Vec<Method>,
        seed: u64,
    ) -> Self {
        SweepSpec {
            parameter,
            values,
            realizations: DEFAULT_REALIZATIONS,
            methods,
            seed,
            base: SystemConfig::default(),
            training: TrainingConfig::default(),
            train_inline: true,
            checkpoint_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if self
            .values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return bad("sweep values must be strictly increasing".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("sweep needs at least one method".into());
        }
        if !self.train_inline
            && self.checkpoint_dir.is_none()
            && self.methods.iter().any(|m| m.is_dqn())
        {
            return bad("DQN methods need train_inline or a checkpoint_dir".into());
        }
        self.training.validate()?;
        for i in 0..self.values.len() {
            self.point_config(i)?.validate()?;
        }
        Ok(())
    }

    /// System configuration at sweep point `index`.
    pub fn point_config(&self, index: usize) -> Result<SystemConfig> {
        let v = self.values[index];
        Ok(match self.parameter {
            SweepParameter::PMaxDb => SystemConfig {
                p_max: db_to_linear(v),
                ..self.base.clone()
            },
            SweepParameter::P0 => SystemConfig {
                p0: v,
                ..self.base.clone()
            },
            SweepParameter::Users => {
                if !(v >= 2.0 && v.fract() == 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "user counts must be integers >= 2, got {v}"
                    )));
                }
                self.base.with_users(v as usize)
            }
        })
    }

    /// Training configuration for a DQN method.
    pub fn training_for(&self, method: Method) -> TrainingConfig {
        let mut tc = self.training.clone();
        if method == Method::DqnNoConstraint {
            tc.reward_mode = RewardMode::Unconstrained;
        }
        tc
    }

    /// Checkpoint file of `method` at sweep point `index`.
    pub fn checkpoint_path(&self, method: Method, index: usize) -> Option<PathBuf> {
        self.checkpoint_dir
            .as_ref()
            .map(|d| d.join(format!("{}-{index}.ckpt", method.name())))
    }

    /// The manifest as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }
}
