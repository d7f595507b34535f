use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::env::{action_count, select_action, state_dim, Environment, RewardMode};
use crate::agent::replay::{ReplayBuffer, Transition};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::neural::{td_targets, LossReduction, QNetwork, Rmsprop, RmspropConfig, HIDDEN_LAYERS};

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub epsilon_start: f64,
    /// Multiplier applied to epsilon after every episode.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub batch_size: usize,
    /// Gradient steps between target-network refreshes.
    pub target_sync_period: usize,
    pub discount: f64,
    pub replay_capacity: usize,
    pub optimizer: RmspropConfig,
    pub hidden_layers: Vec<usize>,
    pub reward_mode: RewardMode,
    pub loss_reduction: LossReduction,
    /// Optional max-norm gradient clip.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            episodes: 3000,
            steps_per_episode: 20,
            epsilon_start: 1.0,
            epsilon_decay: 0.995,
            epsilon_floor: 0.01,
            batch_size: 32,
            target_sync_period: 100,
            discount: 0.9,
            replay_capacity: 50_000,
            optimizer: RmspropConfig::default(),
            hidden_layers: HIDDEN_LAYERS.to_vec(),
            reward_mode: RewardMode::MaskedSum,
            loss_reduction: LossReduction::Sum,
            max_grad_norm: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad(format!(
                "discount must lie in (0, 1], got {}",
                self.discount
            ));
        }
        for (name, e) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_floor", self.epsilon_floor),
            ("epsilon_decay", self.epsilon_decay),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("{name} must lie in [0, 1], got {e}"));
            }
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.steps_per_episode == 0 {
            return bad("batch size, replay capacity and episode length must be positive".into());
        }
        if self.target_sync_period == 0 {
            return bad("target_sync_period must be positive".into());
        }
        Ok(())
    }

    /// Epsilon in force during episode `episode` (0-based).
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let decayed = self.epsilon_start
            * self
                .epsilon_decay
                .powi(episode.min(i32::MAX as usize) as i32);
        decayed
            .max(self.epsilon_floor)
            .min(self.epsilon_start.max(self.epsilon_floor))
    }

    /// Epsilon of the very last training episode, used at test time.
    pub fn final_epsilon(&self) -> f64 {
        self.epsilon_at(self.episodes.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub epsilon: f64,
    pub mean_reward: f64,
    /// Mean minibatch loss over the episode's gradient steps; NaN before
    /// training starts.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: QNetwork,
    pub log: Vec<EpisodeLog>,
    pub gradient_steps: u64,
    pub final_epsilon: f64,
    /// Largest replay occupancy observed.
    pub peak_replay: usize,
}

/// Train a Q-network on `config` with the default episode callback.
pub fn train<R: Rng + ?Sized>(
    config: &SystemConfig,
    tc: &TrainingConfig,
    rng: &mut R,
) -> Result<TrainOutcome> {
    train_with(config, tc, rng, |_| {})
}

/// Deep Q-learning with experience replay and a periodically synced target
/// network. Each step: epsilon-greedy action, store the transition, and once
/// the buffer holds a minibatch, one RMSProp step on the squared TD error
/// against targets from the frozen copy.
pub fn train_with<R: Rng + ?Sized>(
    config: &SystemConfig,
    tc: &TrainingConfig,
    rng: &mut R,
    mut on_episode: impl FnMut(&EpisodeLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    tc.validate()?;
    let actions = action_count(config)?;
    let mut dims = vec![state_dim(config)];
    dims.extend(&tc.hidden_layers);
    dims.push(actions);

    let mut online = QNetwork::new(&dims, rng)?;
    let mut target = online.clone();
    let mut optimizer = Rmsprop::new(tc.optimizer, online.params().len());
    let mut replay = ReplayBuffer::new(tc.replay_capacity);
    let mut env = Environment::new(config.clone(), tc.reward_mode, tc.steps_per_episode, rng)?;

    let mut log = Vec::with_capacity(tc.episodes);
    let mut gradient_steps = 0u64;
    let mut peak_replay = 0;
    for episode in 0..tc.episodes {
        let epsilon = tc.epsilon_at(episode);
        let mut state = env.reset(rng);
        let (mut reward_sum, mut loss_sum, mut updates) = (0.0, 0.0, 0usize);
        for step in 0..tc.steps_per_episode {
            let q = online.forward(&state)?;
            let action = select_action(&q, epsilon, rng);
            let out = env.step(action, rng)?;
            reward_sum += out.reward;
            replay.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: out.reward,
                next_state: out.next_state.clone(),
                terminal: out.terminal,
            });
            peak_replay = peak_replay.max(replay.len());
            state = out.next_state;

            if replay.len() >= tc.batch_size {
                let batch = replay.sample(tc.batch_size, rng);
                let targets = td_targets(&batch, &target, tc.discount)?;
                let (loss, mut grad) = online
                    .loss_and_gradient(&batch, &targets, tc.loss_reduction)
                    .map_err(|_| Error::Divergence {
                        episode,
                        step,
                        loss: f64::NAN,
                    })?;
                if let Some(max) = tc.max_grad_norm {
                    grad.clip_norm(max);
                }
                optimizer.step(&mut online, &grad);
                if online.params().iter().any(|p| !p.is_finite()) {
                    return Err(Error::Divergence {
                        episode,
                        step,
                        loss,
                    });
                }
                gradient_steps += 1;
                if gradient_steps.is_multiple_of(tc.target_sync_period as u64) {
                    target = online.clone();
                }
                loss_sum += loss;
                updates += 1;
            }
            if out.terminal {
                break;
            }
        }
        let entry = EpisodeLog {
            episode,
            epsilon,
            mean_reward: reward_sum / tc.steps_per_episode as f64,
            loss: if updates > 0 {
                loss_sum / updates as f64
            } else {
                f64::NAN
            },
        };
        on_episode(&entry);
        log.push(entry);
    }

    Ok(TrainOutcome {
        network: online,
        log,
        gradient_steps,
        final_epsilon: tc.final_epsilon(),
        peak_replay,
    })
}
