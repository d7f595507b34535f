use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn icdqn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icdqn"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn icdqn")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = icdqn(out, args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("train");
    ok(
        &tr,
        &["--seed", "4", "train", "--users", "2", "--episodes", "20"],
    );
    for f in ["checkpoint.ckpt", "episodes.csv", "manifest.toml"] {
        assert!(tr.join(f).exists(), "{f}");
    }
    let log = fs::read_to_string(tr.join("episodes.csv")).unwrap();
    assert_eq!(log.lines().count(), 21);

    let ev = dir.path().join("eval");
    let ckpt = tr.join("checkpoint.ckpt");
    ok(
        &ev,
        &[
            "evaluate",
            "--users",
            "2",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--realizations",
            "30",
            "--baselines",
            "gp,random",
        ],
    );
    let csv = fs::read_to_string(ev.join("evaluation.csv")).unwrap();
    let methods: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(methods, ["dqn", "gp", "random"]);

    // wrong user count for the checkpoint
    let bad = icdqn(
        &ev,
        &[
            "evaluate",
            "--users",
            "3",
            "--checkpoint",
            ckpt.to_str().unwrap(),
        ],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_writes_tables_and_reloads_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck");
    let a = dir.path().join("a");
    let common = [
        "sweep",
        "--users",
        "2",
        "--values",
        "2,6",
        "--realizations",
        "10",
        "--methods",
        "dqn,gp,equal-power",
        "--episodes",
        "10",
    ];
    let mut args = common.to_vec();
    args.extend(["--checkpoint-dir", ck.to_str().unwrap()]);
    ok(&a, &args);
    let head = fs::read_to_string(a.join("sum_rate.csv")).unwrap();
    let header = head.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "swept_value,method,mean,stderr,n,infeasible");
    assert!(a.join("sum_rate.svg").exists());
    assert!(ck.join("dqn-1.ckpt").exists());

    let b = dir.path().join("b");
    let mut args = common.to_vec();
    args.extend(["--checkpoint-dir", ck.to_str().unwrap(), "--no-train"]);
    ok(&b, &args);
    assert!(!b.join("episodes-dqn-0.csv").exists());
    let rows = |p: &Path| {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(rows(&a.join("sum_rate.csv")), rows(&b.join("sum_rate.csv")));

    let empty = dir.path().join("empty");
    let mut args = common.to_vec();
    args.extend(["--checkpoint-dir", empty.to_str().unwrap(), "--no-train"]);
    assert_eq!(icdqn(&b, &args).status.code(), Some(2));
}

#[test]
fn checks_report_through_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "verify-outage",
            "--users",
            "1",
            "--trials",
            "3",
            "--samples",
            "500",
        ],
    );
    assert!(out.contains("pass"), "{out}");
    ok(
        dir.path(),
        &["verify-gp", "--users", "2", "--instances", "2"],
    );
    assert!(dir.path().join("gp_check.csv").exists());
    assert_eq!(
        icdqn(dir.path(), &["verify-gp", "--users", "4"])
            .status
            .code(),
        Some(2)
    );
    let out = ok(dir.path(), &["oracle", "--users", "2", "--grid", "10"]);
    assert!(out.contains("100 grid points"), "{out}");
}

#[test]
fn config_file_and_db_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[system]\nusers = 3\np_max_db = 10.0\n\n[training]\nepisodes = 5\n",
    )
    .unwrap();
    ok(
        dir.path(),
        &[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--gamma0-db",
            "-5",
        ],
    );
    let m: toml::Table = fs::read_to_string(dir.path().join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let sys = m["system"].as_table().unwrap();
    assert_eq!(sys["users"].as_integer(), Some(3));
    let gamma0 = sys["gamma0"].as_float().unwrap();
    assert!((gamma0 - 10f64.powf(-0.5)).abs() < 1e-12);
    let p_max = sys["p_max"].as_float().unwrap();
    assert!((p_max - 10.0).abs() < 1e-12);
    assert_eq!(m["training"]["episodes"].as_integer(), Some(5));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_icdqn"))
        .env("ICDQN_OUT_DIR", dir.path())
        .args(["oracle", "--users", "2", "--grid", "4"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("oracle.csv").exists());
}
