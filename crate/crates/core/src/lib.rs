//! Outage-constrained power control for Rayleigh-fading interference channels.
//!
//! The crate covers the full pipeline: closed-form and Monte-Carlo outage
//! probability ([`model`]), a max-min SINR geometric-programming baseline
//! ([`gp`]), a WMMSE sum-rate baseline ([`wmmse`]), a dense Q-network
//! ([`neural`]), the deep Q-learning agent that picks discrete powers
//! ([`agent`]), and the sweep harness that compares them ([`experiment`]).

pub mod agent;
pub mod config;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod model;
pub mod neural;
pub mod seed;
pub mod wmmse;

pub use config::{db_to_linear, linear_to_db, SystemConfig};
pub use error::{Error, Result};
pub use model::{ChannelRealization, GainMatrix, PowerAllocation};
pub use seed::SimRng;
