//! Max-min SINR power allocation under outage constraints.
//!
//! The slack-variable formulation is solved in the log domain: bisection on
//! the slack, with each step a convex feasibility problem handled by
//! projected subgradient descent. [`grid_oracle`] enumerates a power grid and
//! serves as the certification reference.

mod oracle;
mod solver;

pub use oracle::{grid_oracle, GridOracleResult, GridPoint, GRID_LIMIT};
pub use solver::{
    eta_upper_bound, eval_constraints, feasibility_check, solve_maxmin_gp, ConstraintValues,
    Feasibility, GpOptions, GpSolution, LogDomainPoint,
};
