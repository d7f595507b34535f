use std::collections::HashMap;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::agent::{
    action_count, evaluate_on, state_dim, train, DqnPolicy, EpisodeLog, EvalReport, FixedPolicy,
    RandomPolicy, RewardMode, TrainingConfig,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::experiment::spec::{Method, SweepSpec};
use crate::experiment::stats::Summary;
use crate::gp::{solve_maxmin_gp, GpOptions};
use crate::model::{sample_channel, ChannelRealization, PowerAllocation};
use crate::neural::{Checkpoint, QNetwork};
use crate::seed::{self, SimRng};
use crate::wmmse::{wmmse_allocate, WmmseOptions};

/// Seed-path stream tags. Channel `r` of every sweep point comes from
/// `(seed, CHANNELS, r)`, a method's training from `(seed, TRAIN, method)`
/// and its action randomness at point `i` from `(seed, POLICY, method, i)`.
pub const CHANNELS: u64 = 0;
pub const TRAIN: u64 = 1;
pub const POLICY: u64 = 2;

/// Seed of the training stream of `method` under `master`.
pub fn training_seed(master: u64, method: Method) -> u64 {
    seed::derive(master, &[TRAIN, method.code()])
}

/// The training stream of `method` under `master`; the same generator a
/// sweep trains with.
pub fn training_rng(master: u64, method: Method) -> SimRng {
    SimRng::seed_from_u64(training_seed(master, method))
}

/// The evaluation metrics written out per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SumRate,
    /// Fraction of realizations where some user breaks its outage constraint.
    Violation,
    /// Reliability-masked reward.
    Reward,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::SumRate, Metric::Violation, Metric::Reward];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SumRate => "sum_rate",
            Metric::Violation => "violation",
            Metric::Reward => "reward",
        }
    }
}

/// One method at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub swept_value: f64,
    pub method: Method,
    /// The method had no feasible solution on some realization; all
    /// summaries are NaN.
    pub infeasible: bool,
    pub sum_rate: Summary,
    pub violation: Summary,
    pub reward: Summary,
}

impl PointResult {
    pub fn metric(&self, m: Metric) -> Summary {
        match m {
            Metric::SumRate => self.sum_rate,
            Metric::Violation => self.violation,
            Metric::Reward => self.reward,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub method: Method,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub index: usize,
    pub swept_value: f64,
    pub method: Method,
    pub log: Vec<EpisodeLog>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Point-major, methods in spec order.
    pub points: Vec<PointResult>,
    /// Episode logs of DQN methods trained during the sweep.
    pub training: Vec<TrainingRecord>,
}

impl SweepResult {
    pub fn table(&self, metric: Metric) -> Vec<SweepRow> {
        self.points
            .iter()
            .map(|p| {
                let s = p.metric(metric);
                SweepRow {
                    swept_value: p.swept_value,
                    method: p.method,
                    mean: s.mean,
                    stderr: s.stderr,
                    n: s.n,
                    infeasible: p.infeasible,
                }
            })
            .collect()
    }

    /// Means of `method` in sweep-value order.
    pub fn curve(&self, method: Method, metric: Metric) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.method == method)
            .map(|p| p.metric(metric).mean)
            .collect()
    }

    pub fn get(&self, swept_value: f64, method: Method) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.method == method && p.swept_value == swept_value)
    }
}

#[derive(Debug, Clone)]
struct Trained {
    network: QNetwork,
    log: Vec<EpisodeLog>,
    gradient_steps: u64,
}

/// Networks already trained in this process, keyed by the full system
/// config, training config and seed. Lets several sweeps share trainings.
#[derive(Debug, Default)]
pub struct TrainCache {
    map: HashMap<String, Trained>,
}

impl TrainCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn get_or_train(
        &mut self,
        config: &SystemConfig,
        tc: &TrainingConfig,
        seed: u64,
    ) -> Result<Trained> {
        // Debug output of f64 round-trips, so equal keys mean equal inputs.
        let key = format!("{config:?}|{tc:?}|{seed}");
        if let Some(t) = self.map.get(&key) {
            return Ok(t.clone());
        }
        let out = train(config, tc, &mut SimRng::seed_from_u64(seed))?;
        let t = Trained {
            network: out.network,
            log: out.log,
            gradient_steps: out.gradient_steps,
        };
        self.map.insert(key, t.clone());
        Ok(t)
    }
}

/// Run `spec` with a private cache and no progress output.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, &mut TrainCache::new(), &mut |_| {})
}

/// Evaluate every method at every sweep point on a shared channel sequence.
pub fn run_sweep_with(
    spec: &SweepSpec,
    cache: &mut TrainCache,
    progress: &mut dyn FnMut(&str),
) -> Result<SweepResult> {
    spec.validate()?;
    let mut points = Vec::new();
    let mut training = Vec::new();
    for (i, &value) in spec.values.iter().enumerate() {
        let config = spec.point_config(i)?;
        let channels = paired_channels(&config, spec.seed, spec.realizations);
        for &method in &spec.methods {
            progress(&format!("{}={value} {method}", spec.parameter.name()));
            let policy_rng = seed::rng(spec.seed, &[POLICY, method.code(), i as u64]);
            let network = match method {
                Method::Dqn | Method::DqnNoConstraint => {
                    let tc = spec.training_for(method);
                    let network = if spec.train_inline {
                        let seed = training_seed(spec.seed, method);
                        let t = cache.get_or_train(&config, &tc, seed)?;
                        if let Some(path) = spec.checkpoint_path(method, i) {
                            if let Some(dir) = path.parent() {
                                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                            }
                            Checkpoint {
                                network: t.network.clone(),
                                seed,
                                steps: t.gradient_steps,
                            }
                            .save(&path)?;
                        }
                        training.push(TrainingRecord {
                            index: i,
                            swept_value: value,
                            method,
                            log: t.log,
                        });
                        t.network
                    } else {
                        let path = spec
                            .checkpoint_path(method, i)
                            .expect("validated: checkpoint_dir set");
                        if !path.exists() {
                            return Err(Error::Checkpoint(format!(
                                "missing checkpoint {}",
                                path.display()
                            )));
                        }
                        let net = Checkpoint::load(&path)?.network;
                        check_dims(&net, &config, &path)?;
                        net
                    };
                    Some(network)
                }
                _ => None,
            };
            let (report, infeasible) = evaluate_method(
                method,
                &config,
                &channels,
                network.as_ref(),
                spec.training_for(method).final_epsilon(),
                policy_rng,
            )?;
            points.push(PointResult::from_report(value, method, &report, infeasible));
        }
    }
    Ok(SweepResult {
        spec: spec.clone(),
        points,
        training,
    })
}

/// The paired test channels of a sweep point: realization `r` comes from
/// the seed path `(master, CHANNELS, r)`.
pub fn paired_channels(config: &SystemConfig, master: u64, n: usize) -> Vec<ChannelRealization> {
    (0..n)
        .map(|r| sample_channel(config, &mut seed::rng(master, &[CHANNELS, r as u64])))
        .collect()
}

/// Evaluate one method on `channels`. DQN methods need `network` and act
/// epsilon-greedily with `epsilon`; `rng` drives any action randomness.
/// The flag reports a GP realization with no feasible point.
pub fn evaluate_method(
    method: Method,
    config: &SystemConfig,
    channels: &[ChannelRealization],
    network: Option<&QNetwork>,
    epsilon: f64,
    rng: SimRng,
) -> Result<(EvalReport, bool)> {
    let mode = RewardMode::MaskedSum;
    Ok(match method {
        Method::Dqn | Method::DqnNoConstraint => {
            let network = network
                .ok_or_else(|| Error::InvalidConfig(format!("{method} needs a trained network")))?;
            let mut policy = DqnPolicy {
                network,
                config,
                epsilon,
                rng,
            };
            (evaluate_on(&mut policy, config, channels, mode)?, false)
        }
        Method::Gp => {
            let opts = GpOptions::default();
            let mut infeasible = false;
            let mut gp = |ch: &ChannelRealization, _: &PowerAllocation| {
                let sol = solve_maxmin_gp(&ch.gains, config, &opts)?;
                infeasible |= !sol.feasible;
                Ok(sol.powers)
            };
            let report = evaluate_on(&mut gp, config, channels, mode)?;
            (report, infeasible)
        }
        Method::Wmmse => {
            let opts = WmmseOptions::default();
            let mut w = |ch: &ChannelRealization, _: &PowerAllocation| {
                wmmse_allocate(ch, &config.noise, config.p_max, &opts)
            };
            (evaluate_on(&mut w, config, channels, mode)?, false)
        }
        Method::Random => {
            let mut policy = RandomPolicy { config, rng };
            (evaluate_on(&mut policy, config, channels, mode)?, false)
        }
        Method::EqualPower => {
            let mut policy = FixedPolicy(PowerAllocation::uniform(config.users, config.p_max));
            (evaluate_on(&mut policy, config, channels, mode)?, false)
        }
    })
}

/// Fail unless `net` fits the state and action sizes of `config`.
pub fn check_dims(net: &QNetwork, config: &SystemConfig, path: &std::path::Path) -> Result<()> {
    let (want_in, want_out) = (state_dim(config), action_count(config)?);
    if net.input_dim() != want_in || net.output_dim() != want_out {
        return Err(Error::Checkpoint(format!(
            "{}: network is {}->{} but the configuration needs {}->{}",
            path.display(),
            net.input_dim(),
            net.output_dim(),
            want_in,
            want_out
        )));
    }
    Ok(())
}

impl PointResult {
    /// Summaries of an evaluation; all NaN when `infeasible`.
    pub fn from_report(value: f64, method: Method, report: &EvalReport, infeasible: bool) -> Self {
        let n = report.steps.len();
        let of = |f: fn(&crate::agent::StepMetrics) -> f64| {
            if infeasible {
                Summary::nan(n)
            } else {
                Summary::of(&report.steps.iter().map(f).collect::<Vec<_>>())
            }
        };
        PointResult {
            swept_value: value,
            method,
            infeasible,
            sum_rate: of(|s| s.sum_rate),
            violation: of(|s| if s.violation { 1.0 } else { 0.0 }),
            reward: of(|s| s.reward),
        }
    }
}
