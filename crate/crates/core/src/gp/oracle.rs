use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{
    outage_constraint_ok, sinr_interference_limited, sum_rate, ChannelRealization, GainMatrix,
    PowerAllocation,
};

/// Largest grid the oracle will enumerate.
pub const GRID_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub powers: PowerAllocation,
    /// Minimum interference-limited SINR (infinite for a single user).
    pub min_sinr: f64,
    /// Noise-inclusive sum-rate.
    pub sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOracleResult {
    /// Feasible point with the largest min SINR.
    pub best_min_sinr: Option<GridPoint>,
    /// Feasible point with the largest sum-rate.
    pub best_sum_rate: Option<GridPoint>,
    pub evaluated: usize,
    pub feasible: usize,
}

/// Exhaustive search over `levels_per_user` powers per user, uniform in dB
/// over the box (a single level means `p_min`). With `enforce_outage` off
/// every grid point counts as feasible.
pub fn grid_oracle(
    gains: &GainMatrix,
    config: &SystemConfig,
    levels_per_user: usize,
    enforce_outage: bool,
) -> Result<GridOracleResult> {
    let k = config.users;
    let levels = levels_per_user.max(1);
    let points = (levels as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let channel = ChannelRealization::new(gains.clone())?;
    let table: Vec<f64> = (0..levels).map(|d| config.power_level(d, levels)).collect();

    let mut digits = vec![0usize; k];
    let mut out = GridOracleResult {
        best_min_sinr: None,
        best_sum_rate: None,
        evaluated: 0,
        feasible: 0,
    };
    loop {
        let powers = PowerAllocation::unchecked(digits.iter().map(|&d| table[d]).collect());
        out.evaluated += 1;
        if !enforce_outage || outage_constraint_ok(config, &powers).iter().all(|&b| b) {
            out.feasible += 1;
            let min_sinr = if k < 2 {
                f64::INFINITY
            } else {
                sinr_interference_limited(&channel, &powers)?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            };
            let rate = sum_rate(&channel, &powers, &config.noise)?.sum;
            if out
                .best_min_sinr
                .as_ref()
                .is_none_or(|b| min_sinr > b.min_sinr)
            {
                out.best_min_sinr = Some(GridPoint {
                    powers: powers.clone(),
                    min_sinr,
                    sum_rate: rate,
                });
            }
            if out.best_sum_rate.as_ref().is_none_or(|b| rate > b.sum_rate) {
                out.best_sum_rate = Some(GridPoint {
                    powers,
                    min_sinr,
                    sum_rate: rate,
                });
            }
        }
        // odometer, last user fastest
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < levels {
                break;
            }
            digits[i] = 0;
        }
    }
}
