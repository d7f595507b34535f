use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use icdqn::agent::{train, TrainingConfig, Transition};
use icdqn::gp::{solve_maxmin_gp, GpOptions};
use icdqn::model::{outage_closed_form, outage_monte_carlo, sample_channel, OutageEvent};
use icdqn::neural::{LossReduction, QNetwork};
use icdqn::wmmse::{wmmse_allocate, WmmseOptions};
use icdqn::{seed, PowerAllocation, SystemConfig};

fn network(c: &mut Criterion) {
    let k = 4;
    let dim = k * k + k;
    let actions = 5usize.pow(k as u32);
    let mut rng = seed::rng(1, &[]);
    let net = QNetwork::new(&[dim, 200, 100, 40, actions], &mut rng).unwrap();
    let batch: Vec<Transition> = (0..32)
        .map(|i| Transition {
            state: (0..dim)
                .map(|j| ((i * dim + j) as f64 * 0.37).sin())
                .collect(),
            action: (i * 17) % actions,
            reward: 1.0,
            next_state: vec![0.5; dim],
            terminal: false,
        })
        .collect();
    let targets = vec![1.0; 32];
    let states: Vec<f64> = batch.iter().flat_map(|t| t.state.clone()).collect();

    c.bench_function("forward batch 32, K=4", |b| {
        b.iter(|| net.forward_batch(black_box(&states), 32).unwrap())
    });
    c.bench_function("loss and gradient batch 32, K=4", |b| {
        b.iter(|| {
            net.loss_and_gradient(black_box(&batch), &targets, LossReduction::Sum)
                .unwrap()
        })
    });
}

fn solvers(c: &mut Criterion) {
    let config = SystemConfig::reference(4);
    let ch = sample_channel(&config, &mut seed::rng(2, &[]));
    c.bench_function("gp max-min solve, K=4", |b| {
        b.iter(|| solve_maxmin_gp(black_box(&ch.gains), &config, &GpOptions::default()).unwrap())
    });
    c.bench_function("wmmse, K=4", |b| {
        b.iter(|| {
            wmmse_allocate(
                black_box(&ch),
                &config.noise,
                config.p_max,
                &WmmseOptions::default(),
            )
            .unwrap()
        })
    });
}

fn outage(c: &mut Criterion) {
    let config = SystemConfig::reference(4);
    let p = PowerAllocation::unchecked(vec![1.0, 1.5, 2.0, 2.5]);
    c.bench_function("outage closed form, K=4", |b| {
        b.iter(|| outage_closed_form(&config, black_box(&p), 0))
    });
    c.bench_function("outage monte carlo 1e4 draws, K=4", |b| {
        let mut rng = seed::rng(3, &[]);
        b.iter(|| {
            outage_monte_carlo(
                &config,
                black_box(&p),
                0,
                10_000,
                OutageEvent::InterferenceLimited,
                &mut rng,
            )
        })
    });
}

fn training(c: &mut Criterion) {
    let config = SystemConfig::reference(4);
    let tc = TrainingConfig {
        episodes: 10,
        ..TrainingConfig::default()
    };
    let mut g = c.benchmark_group("training");
    g.sample_size(10);
    g.bench_function("10 episodes, K=4", |b| {
        b.iter(|| train(&config, &tc, &mut seed::rng(4, &[])).unwrap())
    });
    g.finish();
}

criterion_group!(benches, network, solvers, outage, training);
criterion_main!(benches);
