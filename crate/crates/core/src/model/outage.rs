//! Outage probability of the interference-limited link under Rayleigh fading.
//!
//! With exponential power gains the probability that user `k`'s SINR drops
//! below `gamma0` has a product form in the *mean* gains, so these functions
//! read `config.mean_gains` rather than a channel realization.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::SystemConfig;
use crate::model::channel::exp_positive;
use crate::model::PowerAllocation;

/// `gamma0 * G[k][j] p[j] / (G[k][k] p[k])` for every interferer `j != k`.
fn normalized_interference<'a>(
    config: &'a SystemConfig,
    powers: &'a PowerAllocation,
    k: usize,
) -> impl Iterator<Item = f64> + 'a {
    let p = powers.as_slice();
    let g = &config.mean_gains;
    let direct = g.get(k, k) * p[k];
    (0..config.users)
        .filter(move |&j| j != k)
        .map(move |j| config.gamma0 * g.get(k, j) * p[j] / direct)
}

/// Closed-form outage probability of user `k`:
/// `1 - prod_{j != k} 1 / (1 + gamma0 G_kj p_j / (G_kk p_k))`.
///
/// Zero for a single user (empty product).
pub fn outage_closed_form(config: &SystemConfig, powers: &PowerAllocation, k: usize) -> f64 {
    let log_prod: f64 = normalized_interference(config, powers, k)
        .map(f64::ln_1p)
        .sum();
    (-(-log_prod).exp_m1()).clamp(0.0, 1.0)
}

/// Left-hand side of the posynomial outage constraint,
/// `(1 - p0) prod_{j != k} (1 + gamma0 G_kj p_j / (G_kk p_k))`.
pub fn outage_constraint_lhs(config: &SystemConfig, powers: &PowerAllocation, k: usize) -> f64 {
    normalized_interference(config, powers, k).fold(1.0 - config.p0, |acc, x| acc * (1.0 + x))
}

/// Per-user indicator of the reliability constraint `lhs <= 1`.
pub fn outage_constraint_ok(config: &SystemConfig, powers: &PowerAllocation) -> Vec<bool> {
    (0..config.users)
        .map(|k| outage_constraint_lhs(config, powers, k) <= 1.0)
        .collect()
}

/// Which outage event a Monte-Carlo run counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutageEvent {
    /// `g_kk p_k <= gamma0 * sum_{j != k} g_kj p_j`, the event the closed form describes.
    #[default]
    InterferenceLimited,
    /// `g_kk p_k <= gamma0 * (sum_{j != k} g_kj p_j + noise_k)`.
    WithNoise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    /// Signed distance from `reference` in standard errors. Exact agreement
    /// gives 0; a nonzero gap with zero standard error gives infinity.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = self.estimate - reference;
        if gap == 0.0 {
            0.0
        } else if self.std_error > 0.0 {
            gap / self.std_error
        } else {
            gap.signum() * f64::INFINITY
        }
    }
}

/// Empirical outage frequency of user `k` over `samples` fresh fading draws.
pub fn outage_monte_carlo<R: Rng + ?Sized>(
    config: &SystemConfig,
    powers: &PowerAllocation,
    k: usize,
    samples: u64,
    event: OutageEvent,
    rng: &mut R,
) -> McEstimate {
    let samples = samples.max(1);
    let p = powers.as_slice();
    let row = config.mean_gains.row(k);
    let noise = match event {
        OutageEvent::InterferenceLimited => 0.0,
        OutageEvent::WithNoise => config.noise[k],
    };
    let mut hits = 0u64;
    for _ in 0..samples {
        let signal = exp_positive(rng, row[k]) * p[k];
        let mut interference = 0.0;
        for (j, (&mean, &pj)) in row.iter().zip(p).enumerate() {
            if j != k {
                let x: f64 = Exp1.sample(rng);
                interference += x * mean * pj;
            }
        }
        if signal <= config.gamma0 * (interference + noise) {
            hits += 1;
        }
    }
    let estimate = hits as f64 / samples as f64;
    McEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        samples,
    }
}
