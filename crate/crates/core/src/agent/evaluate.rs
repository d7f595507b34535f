use rand::Rng;

use crate::agent::env::{
    action_count, compute_reward, decode_action, encode_state, select_action, RewardMode,
};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::model::{
    outage_constraint_ok, sample_channel, sum_rate, ChannelRealization, PowerAllocation,
};
use crate::neural::QNetwork;
use crate::seed::SimRng;

/// Anything that maps an observed channel (and the previous step's powers)
/// to a power allocation.
pub trait PowerPolicy {
    fn allocate(
        &mut self,
        channel: &ChannelRealization,
        prev: &PowerAllocation,
    ) -> Result<PowerAllocation>;
}

/// Trained Q-network acting epsilon-greedily.
pub struct DqnPolicy<'a> {
    pub network: &'a QNetwork,
    pub config: &'a SystemConfig,
    pub epsilon: f64,
    pub rng: SimRng,
}

impl PowerPolicy for DqnPolicy<'_> {
    fn allocate(
        &mut self,
        channel: &ChannelRealization,
        prev: &PowerAllocation,
    ) -> Result<PowerAllocation> {
        let state = encode_state(channel, prev, self.config);
        let q = self.network.forward(&state)?;
        decode_action(select_action(&q, self.epsilon, &mut self.rng), self.config)
    }
}

/// The same powers regardless of the channel.
pub struct FixedPolicy(pub PowerAllocation);

impl PowerPolicy for FixedPolicy {
    fn allocate(&mut self, _: &ChannelRealization, _: &PowerAllocation) -> Result<PowerAllocation> {
        Ok(self.0.clone())
    }
}

/// Uniformly random joint action.
pub struct RandomPolicy<'a> {
    pub config: &'a SystemConfig,
    pub rng: SimRng,
}

impl PowerPolicy for RandomPolicy<'_> {
    fn allocate(&mut self, _: &ChannelRealization, _: &PowerAllocation) -> Result<PowerAllocation> {
        let n = action_count(self.config)?;
        decode_action(self.rng.random_range(0..n), self.config)
    }
}

impl<F> PowerPolicy for F
where
    F: FnMut(&ChannelRealization, &PowerAllocation) -> Result<PowerAllocation>,
{
    fn allocate(
        &mut self,
        channel: &ChannelRealization,
        prev: &PowerAllocation,
    ) -> Result<PowerAllocation> {
        self(channel, prev)
    }
}

/// Metrics of one evaluation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub sum_rate: f64,
    pub min_rate: f64,
    /// Some user breaks its outage constraint.
    pub violation: bool,
    /// Reliability-masked reward under the evaluation's reward mode.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub steps: Vec<StepMetrics>,
    pub mean_sum_rate: f64,
    pub mean_min_rate: f64,
    pub violation_frequency: f64,
    pub mean_reward: f64,
}

impl EvalReport {
    fn from_steps(steps: Vec<StepMetrics>) -> Self {
        let n = steps.len().max(1) as f64;
        let mean = |f: fn(&StepMetrics) -> f64| steps.iter().map(f).sum::<f64>() / n;
        EvalReport {
            mean_sum_rate: mean(|s| s.sum_rate),
            mean_min_rate: mean(|s| s.min_rate),
            violation_frequency: mean(|s| if s.violation { 1.0 } else { 0.0 }),
            mean_reward: mean(|s| s.reward),
            steps,
        }
    }
}

/// Run `policy` over a fixed channel sequence. Previous powers start at
/// `p_min` and then follow the policy's own choices.
pub fn evaluate_on<P: PowerPolicy + ?Sized>(
    policy: &mut P,
    config: &SystemConfig,
    channels: &[ChannelRealization],
    mode: RewardMode,
) -> Result<EvalReport> {
    let mut prev = PowerAllocation::uniform(config.users, config.p_min);
    let mut steps = Vec::with_capacity(channels.len());
    for ch in channels {
        let powers = policy.allocate(ch, &prev)?;
        let rates = sum_rate(ch, &powers, &config.noise)?;
        steps.push(StepMetrics {
            sum_rate: rates.sum,
            min_rate: rates.min(),
            violation: !outage_constraint_ok(config, &powers)
                .into_iter()
                .all(|ok| ok),
            reward: compute_reward(ch, &powers, config, mode)?,
        });
        prev = powers;
    }
    Ok(EvalReport::from_steps(steps))
}

/// Test-time protocol for a trained network: `n_realizations` fresh
/// channels, epsilon held at the final training value.
pub fn evaluate_policy<R: Rng + ?Sized>(
    network: &QNetwork,
    config: &SystemConfig,
    n_realizations: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<EvalReport> {
    let channels: Vec<_> = (0..n_realizations)
        .map(|_| sample_channel(config, rng))
        .collect();
    let mut policy = DqnPolicy {
        network,
        config,
        epsilon,
        rng: rand::SeedableRng::seed_from_u64(rng.random()),
    };
    evaluate_on(&mut policy, config, &channels, RewardMode::MaskedSum)
}
