use icdqn::gp::{feasibility_check, grid_oracle, solve_maxmin_gp, GpOptions};
use icdqn::model::{outage_constraint_ok, sample_channel};
use icdqn::{db_to_linear, seed, SystemConfig};
use rand::Rng;

fn random_config(users: usize, rng: &mut impl Rng) -> SystemConfig {
    SystemConfig {
        p_max: db_to_linear(rng.random_range(2.0..12.0)),
        p0: rng.random_range(0.2..0.6),
        ..SystemConfig::reference(users)
    }
}

fn certify(users: usize, instances: u64, levels: usize) {
    let opts = GpOptions::default();
    for i in 0..instances {
        let mut rng = seed::rng(2024, &[users as u64, i]);
        let config = random_config(users, &mut rng);
        let channel = sample_channel(&config, &mut rng);
        let sol = solve_maxmin_gp(&channel.gains, &config, &opts).unwrap();
        let grid = grid_oracle(&channel.gains, &config, levels, true).unwrap();
        let Some(best) = grid.best_min_sinr else {
            assert!(!sol.feasible, "instance {i}: grid empty but GP feasible");
            continue;
        };
        assert!(sol.feasible, "instance {i}: grid feasible but GP not");
        assert!(
            sol.eta >= best.min_sinr * (1.0 - 0.02) - 1e-9,
            "instance {i}: gp {} vs grid {}",
            sol.eta,
            best.min_sinr
        );
        assert!(outage_constraint_ok(&config, &sol.powers)
            .iter()
            .all(|&b| b));
    }
}

#[test]
fn gp_matches_grid_two_users() {
    certify(2, 20, 200);
}

#[test]
fn gp_matches_grid_three_users() {
    certify(3, 10, 60);
}

#[test]
fn feasibility_verdict_agrees_with_grid() {
    let opts = GpOptions::default();
    for i in 0..10 {
        let mut rng = seed::rng(99, &[i]);
        let config = random_config(2, &mut rng);
        let channel = sample_channel(&config, &mut rng);
        let grid = grid_oracle(&channel.gains, &config, 200, true).unwrap();
        let best = grid.best_min_sinr.unwrap().min_sinr;
        // clearly below and clearly above the grid optimum
        assert!(feasibility_check(best * 0.97, &channel.gains, &config, &opts).feasible);
        let sol = solve_maxmin_gp(&channel.gains, &config, &opts).unwrap();
        assert!(!feasibility_check(sol.eta * 1.05, &channel.gains, &config, &opts).feasible);
    }
}

#[test]
fn feasibility_is_monotone_in_eta() {
    let opts = GpOptions::default();
    let config = SystemConfig::reference(3);
    for i in 0..5 {
        let channel = sample_channel(&config, &mut seed::rng(7, &[i]));
        let sol = solve_maxmin_gp(&channel.gains, &config, &opts).unwrap();
        let etas: Vec<f64> = (1..=12).map(|s| sol.eta * 0.1 * s as f64).collect();
        let verdicts: Vec<bool> = etas
            .iter()
            .map(|&e| feasibility_check(e, &channel.gains, &config, &opts).feasible)
            .collect();
        // once infeasible, stays infeasible
        let first_bad = verdicts.iter().position(|&f| !f).unwrap_or(verdicts.len());
        assert!(verdicts[first_bad..].iter().all(|&f| !f), "{verdicts:?}");
        assert!(verdicts[..10].iter().all(|&f| f), "{verdicts:?}");
    }
}

#[test]
fn harsh_reliability_empty_everywhere() {
    let config = SystemConfig {
        gamma0: 10.0,
        p0: 0.01,
        ..SystemConfig::reference(2)
    };
    let channel = sample_channel(&config, &mut seed::rng(1, &[]));
    let sol = solve_maxmin_gp(&channel.gains, &config, &GpOptions::default()).unwrap();
    let grid = grid_oracle(&channel.gains, &config, 200, true).unwrap();
    assert!(!sol.feasible);
    assert_eq!(grid.feasible, 0);
}
