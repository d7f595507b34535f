//! The power-allocation environment and the deep Q-learning agent that
//! plays it.

mod env;
mod evaluate;
mod replay;
mod train;

pub use env::{
    action_count, action_digits, compute_reward, decode_action, encode_action, encode_state,
    greedy_action, select_action, state_dim, Environment, RewardMode, StepOutcome, MAX_ACTIONS,
};
pub use evaluate::{
    evaluate_on, evaluate_policy, DqnPolicy, EvalReport, FixedPolicy, PowerPolicy, RandomPolicy,
    StepMetrics,
};
pub use replay::{ReplayBuffer, Transition};
pub use train::{train, train_with, EpisodeLog, TrainOutcome, TrainingConfig};
