use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Square K×K matrix of power gains, row `k` = receiver, column `j` = transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GainMatrix {
    users: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn filled(users: usize, value: f64) -> Self {
        GainMatrix {
            users,
            data: vec![value; users * users],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let users = rows.len();
        let mut data = Vec::with_capacity(users * users);
        for row in rows {
            if row.len() != users {
                return Err(Error::DimensionMismatch {
                    expected: users,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(GainMatrix { users, data })
    }

    /// Row-major data; length must be a perfect square.
    pub fn from_flat(users: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != users * users {
            return Err(Error::DimensionMismatch {
                expected: users * users,
                got: data.len(),
            });
        }
        Ok(GainMatrix { users, data })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.users + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, j: usize, value: f64) {
        self.data[k * self.users + j] = value;
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.users..(k + 1) * self.users]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.users.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub(crate) fn uniform_value(&self) -> Option<f64> {
        let first = *self.data.first()?;
        self.data.iter().all(|&g| g == first).then_some(first)
    }
}

impl TryFrom<Vec<Vec<f64>>> for GainMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        GainMatrix::from_rows(rows)
    }
}

impl From<GainMatrix> for Vec<Vec<f64>> {
    fn from(m: GainMatrix) -> Self {
        m.rows()
    }
}

/// One block-fading draw of the instantaneous power gains `|h_kj|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: GainMatrix,
}

impl ChannelRealization {
    pub fn new(gains: GainMatrix) -> Result<Self> {
        let k = gains.users();
        for (i, &g) in gains.as_slice().iter().enumerate() {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::NonFinite(format!("channel gain {g}")));
            }
            if i / k.max(1) == i % k.max(1) && g == 0.0 {
                return Err(Error::InvalidConfig("direct-link gain is zero".into()));
            }
        }
        Ok(ChannelRealization { gains })
    }

    pub fn users(&self) -> usize {
        self.gains.users()
    }

    #[inline]
    pub fn gain(&self, k: usize, j: usize) -> f64 {
        self.gains.get(k, j)
    }
}

/// Transmit powers, one per user, within `[p_min, p_max]` when built through
/// [`PowerAllocation::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    /// Validates every entry against the config's power box.
    pub fn new(powers: Vec<f64>, config: &SystemConfig) -> Result<Self> {
        if powers.len() != config.users {
            return Err(Error::DimensionMismatch {
                expected: config.users,
                got: powers.len(),
            });
        }
        // relative slack for values produced by exp/ln round trips
        let tol = 1e-12;
        for &p in &powers {
            if !(p >= config.p_min * (1.0 - tol) && p <= config.p_max * (1.0 + tol)) {
                return Err(Error::InvalidConfig(format!(
                    "power {p} outside [{}, {}]",
                    config.p_min, config.p_max
                )));
            }
        }
        Ok(PowerAllocation(powers))
    }

    /// No box check. For baselines that live outside the box (WMMSE may
    /// switch users off) and for test fixtures.
    pub fn unchecked(powers: Vec<f64>) -> Self {
        PowerAllocation(powers)
    }

    pub fn uniform(users: usize, power: f64) -> Self {
        PowerAllocation(vec![power; users])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        PowerAllocation(self.0.iter().map(|p| p * c).collect())
    }
}

impl std::ops::Index<usize> for PowerAllocation {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Draw an exponential variate with the given mean, rejecting exact zeros.
#[inline]
pub(crate) fn exp_positive<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    loop {
        let x: f64 = Exp1.sample(rng);
        if x > 0.0 {
            return x * mean;
        }
    }
}

/// Draw a Rayleigh block-fading realization: every `|h_kj|²` is exponential
/// with mean `mean_gains[k][j]`, independently.
pub fn sample_channel<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let k = config.users;
    let data = config
        .mean_gains
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &mean)| {
            if i / k == i % k {
                exp_positive(rng, mean)
            } else {
                let x: f64 = Exp1.sample(rng);
                x * mean
            }
        })
        .collect();
    ChannelRealization {
        gains: GainMatrix { users: k, data },
    }
}
