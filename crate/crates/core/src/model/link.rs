use crate::error::{Error, Result};
use crate::model::{ChannelRealization, PowerAllocation};

fn check_dims(channel: &ChannelRealization, powers: &PowerAllocation) -> Result<usize> {
    let k = channel.users();
    if powers.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: powers.len(),
        });
    }
    Ok(k)
}

#[inline]
fn interference(channel: &ChannelRealization, powers: &[f64], k: usize) -> f64 {
    channel
        .gains
        .row(k)
        .iter()
        .zip(powers)
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, (g, p))| g * p)
        .sum()
}

/// Per-user SINR including receiver noise.
pub fn sinr(
    channel: &ChannelRealization,
    powers: &PowerAllocation,
    noise: &[f64],
) -> Result<Vec<f64>> {
    let k = check_dims(channel, powers)?;
    if noise.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: noise.len(),
        });
    }
    let p = powers.as_slice();
    Ok((0..k)
        .map(|u| channel.gain(u, u) * p[u] / (interference(channel, p, u) + noise[u]))
        .collect())
}

/// Per-user SINR with the noise term dropped. Needs at least two users and a
/// strictly positive interference sum at every receiver.
pub fn sinr_interference_limited(
    channel: &ChannelRealization,
    powers: &PowerAllocation,
) -> Result<Vec<f64>> {
    let k = check_dims(channel, powers)?;
    if k < 2 {
        return Err(Error::SingleUser);
    }
    let p = powers.as_slice();
    (0..k)
        .map(|u| {
            let i = interference(channel, p, u);
            if i > 0.0 {
                Ok(channel.gain(u, u) * p[u] / i)
            } else {
                Err(Error::ZeroInterference(u))
            }
        })
        .collect()
}

/// Achievable rates in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub per_user: Vec<f64>,
    pub sum: f64,
}

impl Rates {
    pub fn min(&self) -> f64 {
        self.per_user.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `log2(1 + SINR)` per user, plus their sum.
pub fn sum_rate(
    channel: &ChannelRealization,
    powers: &PowerAllocation,
    noise: &[f64],
) -> Result<Rates> {
    let per_user: Vec<f64> = sinr(channel, powers, noise)?
        .into_iter()
        .map(|g| g.ln_1p() / std::f64::consts::LN_2)
        .collect();
    let sum = per_user.iter().sum();
    Ok(Rates { per_user, sum })
}
