//! Dense Q-network with rectifier hidden layers, squared TD loss,
//! backpropagation, RMSProp, and checkpoint files.

mod checkpoint;
mod network;
mod optim;

pub use checkpoint::Checkpoint;
pub use network::{
    init_params, sync_target, td_targets, Gradient, LossReduction, QNetwork, HIDDEN_LAYERS,
};
pub use optim::{Rmsprop, RmspropConfig};
