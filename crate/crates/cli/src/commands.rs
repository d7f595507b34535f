use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use icdqn::agent::{train_with, TrainingConfig};
use icdqn::experiment::{
    check_dims, default_grid_levels, emit_outputs, evaluate_method, paired_channels,
    run_sweep_with, training_rng, training_seed, verify_gp, verify_outage, Method, Metric,
    PointResult, SweepParameter, SweepSpec, TrainCache, CHANNELS, MANIFEST_FILE, POLICY,
};
use icdqn::gp::grid_oracle;
use icdqn::model::sample_channel;
use icdqn::neural::Checkpoint;
use icdqn::{seed, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::{Cli, Command};

/// Inputs of a `train` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub seed: u64,
    pub method: Method,
    pub system: SystemConfig,
    pub training: TrainingConfig,
}

/// Inputs of an `evaluate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateManifest {
    pub seed: u64,
    pub realizations: usize,
    pub checkpoint: PathBuf,
    /// Exploration rate at test time: the final training value.
    pub epsilon: f64,
    pub baselines: Vec<Method>,
    pub system: SystemConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageManifest {
    pub seed: u64,
    pub trials: usize,
    pub samples: u64,
    pub system: SystemConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpManifest {
    pub seed: u64,
    pub instances: usize,
    pub grid_levels: usize,
    pub system: SystemConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleManifest {
    pub seed: u64,
    pub grid_levels: usize,
    pub enforce_outage: bool,
    pub system: SystemConfig,
}

#[derive(Debug, Serialize)]
struct EvalRow {
    method: Method,
    mean_sum_rate: f64,
    sum_rate_stderr: f64,
    violation_frequency: f64,
    mean_reward: f64,
    n: usize,
    infeasible: bool,
}

impl From<&PointResult> for EvalRow {
    fn from(p: &PointResult) -> Self {
        EvalRow {
            method: p.method,
            mean_sum_rate: p.sum_rate.mean,
            sum_rate_stderr: p.sum_rate.stderr,
            violation_frequency: p.violation.mean,
            mean_reward: p.reward.mean,
            n: p.sum_rate.n,
            infeasible: p.infeasible,
        }
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_toml<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = toml::to_string(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    names
        .iter()
        .map(|s| s.trim().parse::<Method>().map_err(Into::into))
        .collect()
}

/// Dispatch a parsed command line. `Ok(false)` means a check ran and failed.
pub fn run(cli: Cli) -> Result<bool> {
    let out = cli.out_dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    match cli.command {
        Command::Train {
            system,
            no_constraint,
            manifest,
        } => {
            let m = match manifest {
                Some(p) => read_toml::<TrainManifest>(&p)?,
                None => {
                    let (sys, mut tc) = system.resolve()?;
                    let method = if no_constraint {
                        tc.reward_mode = icdqn::agent::RewardMode::Unconstrained;
                        Method::DqnNoConstraint
                    } else {
                        Method::Dqn
                    };
                    TrainManifest {
                        seed: cli.seed,
                        method,
                        system: sys,
                        training: tc,
                    }
                }
            };
            train_cmd(&m, &out)
        }
        Command::Evaluate {
            system,
            checkpoint,
            realizations,
            baselines,
            manifest,
        } => {
            let m = match manifest {
                Some(p) => read_toml::<EvaluateManifest>(&p)?,
                None => {
                    let (sys, tc) = system.resolve()?;
                    let baselines = parse_methods(&baselines)?;
                    if baselines.iter().any(|m| m.is_dqn()) {
                        bail!("baselines cannot include DQN methods; pass the network with --checkpoint");
                    }
                    EvaluateManifest {
                        seed: cli.seed,
                        realizations,
                        checkpoint: checkpoint.expect("clap enforces --checkpoint"),
                        epsilon: tc.final_epsilon(),
                        baselines,
                        system: sys,
                    }
                }
            };
            evaluate_cmd(&m, &out)
        }
        Command::Sweep {
            system,
            parameter,
            values,
            methods,
            realizations,
            checkpoint_dir,
            no_train,
            manifest,
        } => {
            let spec = match manifest {
                Some(p) => SweepSpec::from_toml(
                    &fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => {
                    let (sys, tc) = system.resolve()?;
                    let parameter: SweepParameter = parameter.parse()?;
                    let mut spec =
                        SweepSpec::new(parameter, values, parse_methods(&methods)?, cli.seed);
                    spec.realizations = realizations;
                    spec.base = sys;
                    spec.training = tc;
                    spec.train_inline = !no_train;
                    spec.checkpoint_dir = checkpoint_dir;
                    spec
                }
            };
            sweep_cmd(&spec, &out)
        }
        Command::VerifyOutage {
            system,
            trials,
            samples,
            manifest,
        } => {
            let m = match manifest {
                Some(p) => read_toml(&p)?,
                None => OutageManifest {
                    seed: cli.seed,
                    trials,
                    samples,
                    system: system.resolve()?.0,
                },
            };
            verify_outage_cmd(&m, &out)
        }
        Command::VerifyGp {
            system,
            instances,
            grid,
            manifest,
        } => {
            let m = match manifest {
                Some(p) => read_toml(&p)?,
                None => {
                    let sys = system.resolve()?.0;
                    GpManifest {
                        seed: cli.seed,
                        instances,
                        grid_levels: grid.unwrap_or_else(|| default_grid_levels(sys.users)),
                        system: sys,
                    }
                }
            };
            verify_gp_cmd(&m, &out)
        }
        Command::Oracle {
            system,
            grid,
            unconstrained,
            manifest,
        } => {
            let m = match manifest {
                Some(p) => read_toml(&p)?,
                None => OracleManifest {
                    seed: cli.seed,
                    grid_levels: grid,
                    enforce_outage: !unconstrained,
                    system: system.resolve()?.0,
                },
            };
            oracle_cmd(&m, &out)
        }
    }
}

fn train_cmd(m: &TrainManifest, out: &Path) -> Result<bool> {
    let seed = training_seed(m.seed, m.method);
    let outcome = train_with(
        &m.system,
        &m.training,
        &mut training_rng(m.seed, m.method),
        |e| {
            if (e.episode + 1) % 100 == 0 {
                eprintln!(
                    "episode {:>5}  epsilon {:.3}  reward {:.4}  loss {:.4}",
                    e.episode + 1,
                    e.epsilon,
                    e.mean_reward,
                    e.loss
                );
            }
        },
    )?;
    Checkpoint {
        network: outcome.network,
        seed,
        steps: outcome.gradient_steps,
    }
    .save(&out.join("checkpoint.ckpt"))?;
    write_csv(&outcome.log, &out.join("episodes.csv"))?;
    write_toml(m, &out.join(MANIFEST_FILE))?;
    let tail = outcome.log.len().saturating_sub(100);
    let recent: Vec<f64> = outcome.log[tail..].iter().map(|e| e.mean_reward).collect();
    println!(
        "trained {} episodes, {} gradient steps; mean reward over the last {} episodes {:.4}",
        outcome.log.len(),
        outcome.gradient_steps,
        recent.len(),
        recent.iter().sum::<f64>() / recent.len().max(1) as f64
    );
    println!("wrote {}", out.display());
    Ok(true)
}

fn evaluate_cmd(m: &EvaluateManifest, out: &Path) -> Result<bool> {
    let ckpt = Checkpoint::load(&m.checkpoint)?;
    check_dims(&ckpt.network, &m.system, &m.checkpoint)?;
    let channels = paired_channels(&m.system, m.seed, m.realizations);
    let mut rows = Vec::new();
    for method in std::iter::once(Method::Dqn).chain(m.baselines.iter().copied()) {
        let rng = seed::rng(m.seed, &[POLICY, method.code(), 0]);
        let (report, infeasible) = evaluate_method(
            method,
            &m.system,
            &channels,
            Some(&ckpt.network),
            m.epsilon,
            rng,
        )?;
        let p = PointResult::from_report(linear_db(m.system.p_max), method, &report, infeasible);
        println!(
            "{:<18} sum-rate {:.4} ± {:.4}  violation {:.3}  reward {:.4}{}",
            method.name(),
            p.sum_rate.mean,
            p.sum_rate.stderr,
            p.violation.mean,
            p.reward.mean,
            if infeasible { "  (infeasible)" } else { "" }
        );
        rows.push(EvalRow::from(&p));
    }
    write_csv(rows, &out.join("evaluation.csv"))?;
    write_toml(m, &out.join(MANIFEST_FILE))?;
    Ok(true)
}

fn linear_db(x: f64) -> f64 {
    icdqn::linear_to_db(x)
}

fn sweep_cmd(spec: &SweepSpec, out: &Path) -> Result<bool> {
    let mut cache = TrainCache::new();
    let result = run_sweep_with(spec, &mut cache, &mut |msg| eprintln!("{msg}"))?;
    emit_outputs(&result, out)?;
    println!(
        "{:<12} {:<18} {:>10} {:>10} {:>10}",
        spec.parameter.name(),
        "method",
        "sum-rate",
        "stderr",
        "violation"
    );
    for p in &result.points {
        println!(
            "{:<12} {:<18} {:>10.4} {:>10.4} {:>10.3}",
            p.swept_value,
            p.method.name(),
            p.metric(Metric::SumRate).mean,
            p.metric(Metric::SumRate).stderr,
            p.metric(Metric::Violation).mean
        );
    }
    println!("wrote {}", out.display());
    Ok(true)
}

#[derive(Serialize)]
struct OutageRow {
    trial: usize,
    user: usize,
    closed_form: f64,
    monte_carlo: f64,
    samples: u64,
    z: f64,
}

fn verify_outage_cmd(m: &OutageManifest, out: &Path) -> Result<bool> {
    let report = verify_outage(&m.system, m.trials, m.samples, m.seed)?;
    write_csv(
        report.trials.iter().enumerate().map(|(i, t)| OutageRow {
            trial: i,
            user: t.user,
            closed_form: t.closed_form,
            monte_carlo: t.monte_carlo.estimate,
            samples: t.monte_carlo.samples,
            z: t.z,
        }),
        &out.join("outage_check.csv"),
    )?;
    write_toml(m, &out.join(MANIFEST_FILE))?;
    let ok = report.passed();
    println!(
        "{} trials, {} samples each: max |z| = {:.3} -> {}",
        m.trials,
        m.samples,
        report.max_abs_z,
        if ok { "pass" } else { "FAIL" }
    );
    Ok(ok)
}

#[derive(Serialize)]
struct GpRow {
    instance: usize,
    p_max: f64,
    p0: f64,
    gp_feasible: bool,
    grid_feasible: bool,
    gp_eta: f64,
    grid_eta: f64,
    shortfall: f64,
    outage_ok: bool,
}

fn verify_gp_cmd(m: &GpManifest, out: &Path) -> Result<bool> {
    let report = verify_gp(&m.system, m.instances, m.grid_levels, m.seed)?;
    write_csv(
        report.instances.iter().enumerate().map(|(i, g)| GpRow {
            instance: i,
            p_max: g.p_max,
            p0: g.p0,
            gp_feasible: g.gp_feasible,
            grid_feasible: g.grid_feasible,
            gp_eta: g.gp_eta,
            grid_eta: g.grid_eta,
            shortfall: g.shortfall,
            outage_ok: g.outage_ok,
        }),
        &out.join("gp_check.csv"),
    )?;
    write_toml(m, &out.join(MANIFEST_FILE))?;
    let ok = report.passed();
    println!(
        "{} instances, {} users, {}-level grid: max shortfall {:.4}% -> {}",
        m.instances,
        m.system.users,
        m.grid_levels,
        100.0 * report.max_shortfall,
        if ok { "pass" } else { "FAIL" }
    );
    Ok(ok)
}

#[derive(Serialize)]
struct OracleRow {
    objective: &'static str,
    min_sinr: f64,
    sum_rate: f64,
    powers: String,
}

fn oracle_cmd(m: &OracleManifest, out: &Path) -> Result<bool> {
    let channel = sample_channel(&m.system, &mut seed::rng(m.seed, &[CHANNELS, 0]));
    let res = grid_oracle(&channel.gains, &m.system, m.grid_levels, m.enforce_outage)?;
    println!("{} grid points, {} feasible", res.evaluated, res.feasible);
    let mut rows = Vec::new();
    for (name, point) in [
        ("max-min-sinr", &res.best_min_sinr),
        ("max-sum-rate", &res.best_sum_rate),
    ] {
        match point {
            Some(p) => {
                let powers: Vec<String> = p.powers.as_slice().iter().map(f64::to_string).collect();
                println!(
                    "{name:<13} min SINR {:.5}  sum-rate {:.5}  powers [{}]",
                    p.min_sinr,
                    p.sum_rate,
                    powers.join(", ")
                );
                rows.push(OracleRow {
                    objective: name,
                    min_sinr: p.min_sinr,
                    sum_rate: p.sum_rate,
                    powers: powers.join(" "),
                });
            }
            None => println!("{name:<13} no feasible grid point"),
        }
    }
    write_csv(rows, &out.join("oracle.csv"))?;
    write_toml(m, &out.join(MANIFEST_FILE))?;
    Ok(true)
}
