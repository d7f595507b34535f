use rand::Rng;

use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};
use crate::gp::{grid_oracle, solve_maxmin_gp, GpOptions};
use crate::model::{
    outage_closed_form, outage_constraint_ok, outage_monte_carlo, sample_channel, GainMatrix,
    McEstimate, OutageEvent, PowerAllocation,
};
use crate::seed;

/// `|z|` above which the outage cross-check fails.
pub const OUTAGE_Z_LIMIT: f64 = 4.0;
/// Largest relative shortfall of the GP slack below the grid optimum.
pub const GP_SHORTFALL_LIMIT: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct OutageTrial {
    pub user: usize,
    pub powers: PowerAllocation,
    pub mean_gains: GainMatrix,
    pub closed_form: f64,
    pub monte_carlo: McEstimate,
    /// Gap in units of the binomial standard error at the closed-form value.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageReport {
    pub trials: Vec<OutageTrial>,
    pub max_abs_z: f64,
}

impl OutageReport {
    pub fn passed(&self) -> bool {
        self.max_abs_z <= OUTAGE_Z_LIMIT
    }
}

/// z-score of `mc` against `reference` using the standard error implied by
/// `reference`. A reference of exactly 0 or 1 must be matched exactly.
fn null_z(mc: &McEstimate, reference: f64) -> f64 {
    let gap = mc.estimate - reference;
    let se = (reference * (1.0 - reference) / mc.samples as f64).sqrt();
    if gap == 0.0 {
        0.0
    } else if se > 0.0 {
        gap / se
    } else {
        gap.signum() * f64::INFINITY
    }
}

/// Compare the closed-form outage probability with Monte-Carlo over
/// `trials` random draws. Each trial keeps the user count and `gamma0` of
/// `config`, draws mean gains (direct links 0.5 to 2, cross links 0.05 to
/// 1), powers uniform in dB over the box and one user.
pub fn verify_outage(
    config: &SystemConfig,
    trials: usize,
    samples: u64,
    master: u64,
) -> Result<OutageReport> {
    config.validate()?;
    let k = config.users;
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = seed::rng(master, &[t as u64]);
        let mut gains = GainMatrix::filled(k, 1.0);
        for r in 0..k {
            for c in 0..k {
                let g = if r == c {
                    rng.random_range(0.5..2.0)
                } else {
                    rng.random_range(0.05..1.0)
                };
                gains.set(r, c, g);
            }
        }
        let (lo, hi) = (config.p_min.ln(), config.p_max.ln());
        let powers = PowerAllocation::unchecked(
            (0..k)
                .map(|_| {
                    if hi > lo {
                        rng.random_range(lo..=hi).exp()
                    } else {
                        config.p_min
                    }
                })
                .collect(),
        );
        let user = rng.random_range(0..k);
        let trial_config = SystemConfig {
            mean_gains: gains.clone(),
            ..config.clone()
        };
        let closed_form = outage_closed_form(&trial_config, &powers, user);
        let monte_carlo = outage_monte_carlo(
            &trial_config,
            &powers,
            user,
            samples,
            OutageEvent::InterferenceLimited,
            &mut rng,
        );
        out.push(OutageTrial {
            user,
            z: null_z(&monte_carlo, closed_form),
            powers,
            mean_gains: gains,
            closed_form,
            monte_carlo,
        });
    }
    let max_abs_z = out.iter().map(|t| t.z.abs()).fold(0.0, f64::max);
    Ok(OutageReport {
        trials: out,
        max_abs_z,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpInstance {
    pub p_max: f64,
    pub p0: f64,
    pub gp_feasible: bool,
    pub grid_feasible: bool,
    pub gp_eta: f64,
    pub grid_eta: f64,
    /// `1 - gp_eta / grid_eta`, zero when both are infeasible.
    pub shortfall: f64,
    /// GP powers satisfy every outage constraint.
    pub outage_ok: bool,
}

impl GpInstance {
    pub fn passed(&self) -> bool {
        self.gp_feasible == self.grid_feasible
            && (!self.gp_feasible || (self.outage_ok && self.shortfall <= GP_SHORTFALL_LIMIT))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpReport {
    pub instances: Vec<GpInstance>,
    pub max_shortfall: f64,
}

impl GpReport {
    pub fn passed(&self) -> bool {
        self.instances.iter().all(GpInstance::passed)
    }
}

/// Grid levels per user that keep the oracle fast: 200 for two users, 60
/// for three.
pub fn default_grid_levels(users: usize) -> usize {
    if users <= 2 {
        200
    } else {
        60
    }
}

/// Certify the GP solver against the grid oracle on `instances` random
/// instances: `P_max` uniform in 2 to 12 dB, `p0` in 0.2 to 0.6, one fading
/// draw on `config`'s mean gains.
pub fn verify_gp(
    config: &SystemConfig,
    instances: usize,
    levels: usize,
    master: u64,
) -> Result<GpReport> {
    if !(2..=3).contains(&config.users) {
        return Err(Error::InvalidConfig(format!(
            "GP certification needs 2 or 3 users, got {}",
            config.users
        )));
    }
    let opts = GpOptions::default();
    let mut out = Vec::with_capacity(instances);
    for i in 0..instances {
        let mut rng = seed::rng(master, &[i as u64]);
        let c = SystemConfig {
            p_max: db_to_linear(rng.random_range(2.0..12.0)),
            p0: rng.random_range(0.2..0.6),
            ..config.clone()
        };
        let ch = sample_channel(&c, &mut rng);
        let gp = solve_maxmin_gp(&ch.gains, &c, &opts)?;
        let grid = grid_oracle(&ch.gains, &c, levels, true)?;
        let grid_eta = grid.best_min_sinr.as_ref().map_or(f64::NAN, |g| g.min_sinr);
        let grid_feasible = grid.best_min_sinr.is_some();
        let shortfall = if gp.feasible && grid_feasible {
            1.0 - gp.eta / grid_eta
        } else {
            0.0
        };
        out.push(GpInstance {
            p_max: c.p_max,
            p0: c.p0,
            gp_feasible: gp.feasible,
            grid_feasible,
            gp_eta: gp.eta,
            grid_eta,
            shortfall,
            outage_ok: !gp.feasible || outage_constraint_ok(&c, &gp.powers).into_iter().all(|b| b),
        });
    }
    let max_shortfall = out.iter().map(|g| g.shortfall).fold(0.0, f64::max);
    Ok(GpReport {
        instances: out,
        max_shortfall,
    })
}
