use serde::{Deserialize, Serialize};

use crate::neural::{Gradient, QNetwork};

/// RMSProp constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmspropConfig {
    pub learning_rate: f64,
    /// Decay of the squared-gradient average.
    pub rho: f64,
    /// Added to the root before dividing.
    pub delta: f64,
}

impl Default for RmspropConfig {
    fn default() -> Self {
        RmspropConfig {
            learning_rate: 1e-3,
            rho: 0.9,
            delta: 1e-8,
        }
    }
}

/// RMSProp state: one running mean of squared gradients per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Rmsprop {
    pub config: RmspropConfig,
    acc: Vec<f64>,
}

impl Rmsprop {
    pub fn new(config: RmspropConfig, params: usize) -> Self {
        Rmsprop {
            config,
            acc: vec![0.0; params],
        }
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.acc
    }

    /// `acc = rho acc + (1 - rho) g^2; theta -= lr g / (sqrt(acc) + delta)`.
    pub fn step(&mut self, params: &mut QNetwork, grad: &Gradient) {
        let RmspropConfig {
            learning_rate,
            rho,
            delta,
        } = self.config;
        let theta = params.params_mut();
        assert_eq!(theta.len(), grad.0.len(), "gradient shape");
        assert_eq!(theta.len(), self.acc.len(), "optimizer shape");
        for ((p, a), &g) in theta.iter_mut().zip(&mut self.acc).zip(&grad.0) {
            *a = rho * *a + (1.0 - rho) * g * g;
            *p -= learning_rate * g / (a.sqrt() + delta);
        }
    }
}
