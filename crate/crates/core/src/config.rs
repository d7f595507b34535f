//! Static problem parameters and unit conversions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GainMatrix;

/// Convert decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Parameters of one interference-channel instance.
///
/// All quantities are linear. `mean_gains[k][j]` is the mean of the
/// exponential power gain from transmitter `j` to receiver `k`; the outage
/// formulas use these statistics, while rates use sampled realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of transmitter/receiver pairs.
    pub users: usize,
    /// Minimum SINR threshold.
    pub gamma0: f64,
    /// Tolerable outage probability.
    pub p0: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Receiver noise powers, one per user.
    pub noise: Vec<f64>,
    pub mean_gains: GainMatrix,
    /// Discrete power levels available to each user.
    pub n_levels: usize,
}

impl SystemConfig {
    /// γ0 = -10 dB, p0 = 0.3, P_min = 0 dB, P_max = 4 dB, unit noise,
    /// unit-mean Rayleigh fading on every link and five power levels.
    pub fn reference(users: usize) -> Self {
        SystemConfig {
            users,
            gamma0: db_to_linear(-10.0),
            p0: 0.3,
            p_min: db_to_linear(0.0),
            p_max: db_to_linear(4.0),
            noise: vec![1.0; users],
            mean_gains: GainMatrix::filled(users, 1.0),
            n_levels: 5,
        }
    }

    /// Rebuild the per-user vectors for a different user count, keeping the
    /// scalar parameters. The mean-gain matrix becomes all ones unless the
    /// old one was uniform, in which case its common value is kept.
    pub fn with_users(&self, users: usize) -> Self {
        let fill = self.mean_gains.uniform_value().unwrap_or(1.0);
        let noise = self
            .noise
            .first()
            .copied()
            .filter(|_| self.noise.iter().all(|&n| n == self.noise[0]))
            .unwrap_or(1.0);
        SystemConfig {
            users,
            noise: vec![noise; users],
            mean_gains: GainMatrix::filled(users, fill),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad(format!("gamma0 must be positive, got {}", self.gamma0));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return bad(format!("p0 must lie in (0, 1), got {}", self.p0));
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p_max && self.p_max.is_finite()) {
            return bad(format!(
                "power bounds must satisfy 0 < p_min <= p_max, got [{}, {}]",
                self.p_min, self.p_max
            ));
        }
        if self.noise.len() != self.users {
            return Err(Error::DimensionMismatch {
                expected: self.users,
                got: self.noise.len(),
            });
        }
        if self.noise.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
            return bad("noise powers must be positive".into());
        }
        if self.mean_gains.users() != self.users {
            return Err(Error::DimensionMismatch {
                expected: self.users,
                got: self.mean_gains.users(),
            });
        }
        if self
            .mean_gains
            .as_slice()
            .iter()
            .any(|&g| !(g > 0.0 && g.is_finite()))
        {
            return bad("mean gains must be positive".into());
        }
        if self.n_levels < 2 {
            return bad(format!(
                "n_levels must be at least 2, got {}",
                self.n_levels
            ));
        }
        Ok(())
    }

    /// Power of discrete level `d` out of `levels`, uniform in dB on the box.
    pub fn power_level(&self, d: usize, levels: usize) -> f64 {
        if levels <= 1 {
            return self.p_min;
        }
        if d + 1 == levels {
            return self.p_max;
        }
        self.p_min * (self.p_max / self.p_min).powf(d as f64 / (levels - 1) as f64)
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::reference(4)
    }
}
