//! Channel sampling, SINR and rate evaluation, and outage probability.

mod channel;
mod link;
mod outage;

pub use channel::{sample_channel, ChannelRealization, GainMatrix, PowerAllocation};
pub use link::{sinr, sinr_interference_limited, sum_rate, Rates};
pub use outage::{
    outage_closed_form, outage_constraint_lhs, outage_constraint_ok, outage_monte_carlo,
    McEstimate, OutageEvent,
};
