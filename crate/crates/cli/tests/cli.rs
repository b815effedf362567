use std::path::Path;
use std::process::{Command, Output};

use bgo::harness::presets::{lower_bound_config, ProblemClass};

fn bgo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_exits_zero() {
    let o = bgo(&["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().count() >= 6);
    assert!(!text.contains("FAIL"));
}

#[test]
fn lowerbound_csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = bgo(&[
            "lowerbound",
            "--class",
            "sc",
            "--p",
            "1",
            "--q",
            "2",
            "--n",
            "2000",
            "--reps",
            "16",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(dir.path().join(name.replace(".csv", ".json")).exists());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "2");
    assert!(a.starts_with(b"experiment_id,n,replication,error,regret,delta,seed"));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lb.toml");
    let mut cfg = lower_bound_config(ProblemClass::Convex, 2.0, 2.0, 1.0, 1.0, 1000, 8).unwrap();
    cfg.seed = 7;
    cfg.save(&path).unwrap();
    let out = dir.path().join("lb.csv");
    let o = bgo(&[
        "lowerbound",
        "--config",
        path.to_str().unwrap(),
        "--reps",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = bgo::harness::read_records(&out).unwrap();
    // Each replication runs both members of the pair.
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.n == 1000));
}

#[test]
fn config_of_the_wrong_kind_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lb.toml");
    lower_bound_config(ProblemClass::Convex, 2.0, 2.0, 1.0, 1.0, 1000, 8)
        .unwrap()
        .save(&path)
        .unwrap();
    let o = bgo(&["rate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind"));
}

#[test]
fn invalid_values_are_rejected() {
    assert_eq!(bgo(&["rate", "--estimator", "bogus"]).status.code(), Some(2));
    let o = bgo(&["regret", "--p", "3", "--q", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle"));
    let o = bgo(&["rate", "--horizons", "1000,100,10000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizons"));
}

#[test]
fn probe_reports_each_delta() {
    let o = bgo(&[
        "probe",
        "--oracle",
        "spsa-exp",
        "--delta-grid",
        "0.5,0.1",
        "--reps",
        "2000",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("δ = 0.5") && text.contains("δ = 0.1"));
    assert!(!Path::new("probe-spsa-exp.csv").exists());
}
