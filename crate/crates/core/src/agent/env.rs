use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{
    outage_constraint_ok, sample_channel, sum_rate, ChannelRealization, PowerAllocation,
};

/// Largest joint action space a single agent will handle.
pub const MAX_ACTIONS: usize = 10_000;

/// Range of the log10-gain features.
const LOG_GAIN_CLIP: f64 = 6.0;

/// How per-user reliability gates the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// Sum of the rates of users whose outage constraint holds.
    #[default]
    MaskedSum,
    /// Full sum-rate if every user's constraint holds, else zero.
    AllOrNothing,
    /// Plain sum-rate; reliability ignored.
    Unconstrained,
}

/// Number of joint actions, `n_levels^K`, guarded by [`MAX_ACTIONS`].
pub fn action_count(config: &SystemConfig) -> Result<usize> {
    let count = (config.n_levels as u128).checked_pow(config.users as u32);
    match count {
        Some(c) if c <= MAX_ACTIONS as u128 => Ok(c as usize),
        _ => Err(Error::ActionSpaceTooLarge {
            count: count.map_or(usize::MAX, |c| c.min(usize::MAX as u128) as usize),
            limit: MAX_ACTIONS,
        }),
    }
}

/// State feature length, `K^2 + K`.
pub fn state_dim(config: &SystemConfig) -> usize {
    config.users * config.users + config.users
}

/// Flattened row-major log10 gains clipped to `[-6, 6]`, then the previous
/// powers mapped to `[0, 1]` over the power box.
pub fn encode_state(
    channel: &ChannelRealization,
    prev_powers: &PowerAllocation,
    config: &SystemConfig,
) -> Vec<f64> {
    let span = config.p_max - config.p_min;
    channel
        .gains
        .as_slice()
        .iter()
        .map(|g| g.log10().clamp(-LOG_GAIN_CLIP, LOG_GAIN_CLIP))
        .chain(prev_powers.as_slice().iter().map(|&p| {
            if span > 0.0 {
                ((p - config.p_min) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }))
        .collect()
}

/// Per-user level digits of joint action `a`, user 0 most significant.
pub fn action_digits(a: usize, config: &SystemConfig) -> Result<Vec<usize>> {
    let count = action_count(config)?;
    if a >= count {
        return Err(Error::ActionOutOfRange { index: a, count });
    }
    let mut digits = vec![0; config.users];
    let mut rest = a;
    for d in digits.iter_mut().rev() {
        *d = rest % config.n_levels;
        rest /= config.n_levels;
    }
    Ok(digits)
}

/// Inverse of [`action_digits`].
pub fn encode_action(digits: &[usize], config: &SystemConfig) -> Result<usize> {
    if digits.len() != config.users {
        return Err(Error::DimensionMismatch {
            expected: config.users,
            got: digits.len(),
        });
    }
    digits.iter().try_fold(0usize, |acc, &d| {
        if d >= config.n_levels {
            Err(Error::ActionOutOfRange {
                index: d,
                count: config.n_levels,
            })
        } else {
            Ok(acc * config.n_levels + d)
        }
    })
}

/// Powers of joint action `a`; each digit selects a level uniform in dB on
/// `[p_min, p_max]`.
pub fn decode_action(a: usize, config: &SystemConfig) -> Result<PowerAllocation> {
    let digits = action_digits(a, config)?;
    Ok(PowerAllocation::unchecked(
        digits
            .into_iter()
            .map(|d| config.power_level(d, config.n_levels))
            .collect(),
    ))
}

/// Rate of each user on the instantaneous channel, kept only where the
/// mode's reliability rule allows.
pub fn compute_reward(
    channel: &ChannelRealization,
    powers: &PowerAllocation,
    config: &SystemConfig,
    mode: RewardMode,
) -> Result<f64> {
    let rates = sum_rate(channel, powers, &config.noise)?;
    Ok(match mode {
        RewardMode::Unconstrained => rates.sum,
        RewardMode::MaskedSum => outage_constraint_ok(config, powers)
            .into_iter()
            .zip(&rates.per_user)
            .filter(|(ok, _)| *ok)
            .fold(0.0, |acc, (_, r)| acc + r),
        RewardMode::AllOrNothing => {
            if outage_constraint_ok(config, powers)
                .into_iter()
                .all(|ok| ok)
            {
                rates.sum
            } else {
                0.0
            }
        }
    })
}

/// Index of the largest Q-value, ties to the lowest index.
pub fn greedy_action(q_values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &q) in q_values.iter().enumerate().skip(1) {
        if q > q_values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice over `q_values`.
pub fn select_action<R: Rng + ?Sized>(q_values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q_values.len())
    } else {
        greedy_action(q_values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub powers: PowerAllocation,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// The power-control game: block fading redrawn every step, a fixed number
/// of steps per episode, previous powers fed back in the state.
#[derive(Debug, Clone)]
pub struct Environment {
    config: SystemConfig,
    mode: RewardMode,
    steps_per_episode: usize,
    channel: ChannelRealization,
    prev_powers: PowerAllocation,
    step: usize,
}

impl Environment {
    pub fn new<R: Rng + ?Sized>(
        config: SystemConfig,
        mode: RewardMode,
        steps_per_episode: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        action_count(&config)?;
        let channel = sample_channel(&config, rng);
        let prev_powers = PowerAllocation::uniform(config.users, config.p_min);
        Ok(Environment {
            config,
            mode,
            steps_per_episode: steps_per_episode.max(1),
            channel,
            prev_powers,
            step: 0,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn channel(&self) -> &ChannelRealization {
        &self.channel
    }

    /// New channel, previous powers at `p_min`, step counter zero.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        self.channel = sample_channel(&self.config, rng);
        self.prev_powers = PowerAllocation::uniform(self.config.users, self.config.p_min);
        self.step = 0;
        self.state()
    }

    pub fn state(&self) -> Vec<f64> {
        encode_state(&self.channel, &self.prev_powers, &self.config)
    }

    /// Reward on the current channel, then advance to a fresh channel.
    pub fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<StepOutcome> {
        let powers = decode_action(action, &self.config)?;
        let reward = compute_reward(&self.channel, &powers, &self.config, self.mode)?;
        self.channel = sample_channel(&self.config, rng);
        self.prev_powers = powers.clone();
        self.step += 1;
        Ok(StepOutcome {
            powers,
            reward,
            next_state: self.state(),
            terminal: self.step >= self.steps_per_episode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GainMatrix;
    use crate::seed;

    fn unit_channel(k: usize) -> ChannelRealization {
        ChannelRealization::new(GainMatrix::filled(k, 1.0)).unwrap()
    }

    #[test]
    fn state_encoding() {
        let c = SystemConfig::reference(2);
        let s = encode_state(&unit_channel(2), &PowerAllocation::uniform(2, c.p_min), &c);
        assert_eq!(s, vec![0.0; 6]);
        let s = encode_state(&unit_channel(2), &PowerAllocation::uniform(2, c.p_max), &c);
        assert_eq!(&s[4..], &[1.0, 1.0]);
        let mut g = GainMatrix::filled(2, 1.0);
        g.set(0, 1, 1e-9);
        let ch = ChannelRealization::new(g).unwrap();
        assert_eq!(
            encode_state(&ch, &PowerAllocation::uniform(2, 1.0), &c)[1],
            -6.0
        );
    }

    #[test]
    fn action_decoding() {
        let c = SystemConfig::reference(2);
        assert_eq!(decode_action(0, &c).unwrap().as_slice(), &[c.p_min; 2]);
        assert_eq!(decode_action(24, &c).unwrap().as_slice(), &[c.p_max; 2]);
        assert_eq!(action_digits(7, &c).unwrap(), vec![1, 2]);
        let p = decode_action(7, &c).unwrap();
        assert_eq!(p[0], c.power_level(1, 5));
        assert_eq!(p[1], c.power_level(2, 5));
        assert!(matches!(
            decode_action(25, &c),
            Err(Error::ActionOutOfRange { .. })
        ));
    }

    #[test]
    fn action_space_guard() {
        let c = SystemConfig {
            n_levels: 11,
            ..SystemConfig::reference(4)
        };
        assert!(action_count(&c).is_err());
        assert_eq!(action_count(&SystemConfig::reference(4)).unwrap(), 625);
    }

    #[test]
    fn reward_branches() {
        let c = SystemConfig::reference(2);
        let ch = ChannelRealization::new(
            GainMatrix::from_rows(vec![vec![1.3, 0.4], vec![0.7, 0.9]]).unwrap(),
        )
        .unwrap();
        // both pass at equal powers
        let p = PowerAllocation::uniform(2, 2.0);
        let all = sum_rate(&ch, &p, &c.noise).unwrap();
        assert_eq!(
            compute_reward(&ch, &p, &c, RewardMode::MaskedSum).unwrap(),
            all.sum
        );

        // harsh threshold: both fail
        let harsh = SystemConfig {
            gamma0: 10.0,
            p0: 0.01,
            ..c.clone()
        };
        assert_eq!(
            compute_reward(&ch, &p, &harsh, RewardMode::MaskedSum).unwrap(),
            0.0
        );
        assert_eq!(
            compute_reward(&ch, &p, &harsh, RewardMode::AllOrNothing).unwrap(),
            0.0
        );
        assert_eq!(
            compute_reward(&ch, &p, &harsh, RewardMode::Unconstrained).unwrap(),
            all.sum
        );

        // user 1 far weaker than user 0: only user 0 passes
        let c = SystemConfig {
            p0: 0.2,
            p_max: 100.0,
            ..c
        };
        let p = PowerAllocation::unchecked(vec![100.0, 1.0]);
        assert_eq!(outage_constraint_ok(&c, &p), vec![true, false]);
        let rates = sum_rate(&ch, &p, &c.noise).unwrap();
        assert_eq!(
            compute_reward(&ch, &p, &c, RewardMode::MaskedSum).unwrap(),
            rates.per_user[0]
        );
        assert_eq!(
            compute_reward(&ch, &p, &c, RewardMode::AllOrNothing).unwrap(),
            0.0
        );
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = [0.0, 5.0, 1.0, 2.0, 9.0, 3.0, 4.0, 0.5, 7.0, 6.0];
        let mut rng = seed::rng(8, &[]);
        let mut counts = [0u32; 10];
        let n = 100_000;
        for _ in 0..n {
            counts[select_action(&q, 1.0, &mut rng)] += 1;
        }
        let (e, sd) = (n as f64 / 10.0, (n as f64 * 0.1 * 0.9).sqrt());
        for c in counts {
            assert!((c as f64 - e).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn greedy_tie_break() {
        assert_eq!(
            select_action(&[0.0, 1.0, 3.0, 2.0, 0.0, 3.0], 0.0, &mut seed::rng(0, &[])),
            2
        );
    }

    #[test]
    fn episode_terminates_and_replays() {
        let c = SystemConfig::reference(2);
        let run = |s| {
            let mut rng = seed::rng(s, &[]);
            let mut env = Environment::new(c.clone(), RewardMode::MaskedSum, 3, &mut rng).unwrap();
            env.reset(&mut rng);
            (0..3)
                .map(|a| {
                    let ch = env.channel().clone();
                    let out = env.step(a * 5, &mut rng).unwrap();
                    let want = compute_reward(
                        &ch,
                        &decode_action(a * 5, &c).unwrap(),
                        &c,
                        RewardMode::MaskedSum,
                    )
                    .unwrap();
                    assert_eq!(out.reward, want);
                    out
                })
                .collect::<Vec<_>>()
        };
        let a = run(4);
        assert_eq!(
            a.iter().map(|o| o.terminal).collect::<Vec<_>>(),
            vec![false, false, true]
        );
        assert_eq!(a, run(4));
    }
}
