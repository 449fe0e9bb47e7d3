use std::path::Path;
use std::process::{Command, Output};

fn netmcp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netmcp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Generates a pool, workload and scenario into `dir`.
fn setup(dir: &Path, kind: &str) {
    let o = netmcp(&["gen-dataset", "5", "10", "--out", "pool.json", "--queries", "q.jsonl", "--query-count", "60"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = netmcp(&["gen-scenario", kind, "--out", "scenario.json", "--pool", "pool.json", "--seed", "3"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
}

const INPUTS: [&str; 6] = ["--scenario", "scenario.json", "--pool", "pool.json", "--queries", "q.jsonl"];

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_scenario_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = netmcp(&["gen-scenario", "hybrid", "--out", name, "--seed", "5"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let v = json(&dir.path().join("a.json"));
    let high = &v["hybrid_scenario"]["High_Latency_Server"];
    assert_eq!(high["base_latency"], "350ms");
    assert_eq!(high["std_dev"], "20ms");
}

#[test]
fn gen_scenario_ideal_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    assert!(netmcp(&["gen-scenario", "ideal", "--out", "s.json"], dir.path()).status.success());
    let v = json(&dir.path().join("s.json"));
    let servers = v["ideal_scenario"].as_object().unwrap();
    assert_eq!(servers.len(), 15);
    for s in servers.values() {
        assert_eq!(s["base_latency"], "30ms");
        assert_eq!(s["std_dev"], "5ms");
        assert!(s.get("failure_config").is_none() && s.get("periodicity").is_none());
    }
}

#[test]
fn gen_dataset_shapes_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    assert!(netmcp(&["gen-dataset", "1", "0", "--out", "one.json"], dir.path()).status.success());
    assert_eq!(json(&dir.path().join("one.json")).as_array().unwrap().len(), 1);

    let o = netmcp(&["gen-dataset", "5", "10", "--out", "one.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("already exists"));

    let o = netmcp(&["gen-dataset", "5", "10", "--out", "one.json", "--force"], dir.path());
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("one.json")).as_array().unwrap().len(), 15);
}

#[test]
fn hybrid_sonar_run_has_no_failures_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "hybrid");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let mut args = vec!["run"];
        args.extend(INPUTS);
        args.extend(["--algorithm", "sonar", "--alpha", "0.5", "--beta", "0.5", "--seed", "9"]);
        let o = netmcp(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["metrics"]["fr"], 0.0);
        v.as_object_mut().unwrap().remove("wall_time");
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0]["config_echo"]["routing"]["filter_servers"], 5);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "ideal");
    std::fs::write(
        dir.path().join("exp.json"),
        r#"{"scenario": "scenario.json", "pool": "pool.json", "queries": "q.jsonl",
            "routing": {"algorithm": "rag"}, "seed": 1}"#,
    )
    .unwrap();
    let o = netmcp(&["run", "exp.json", "--algorithm", "prag", "--out", "r.json", "--transcripts", "t.jsonl"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&dir.path().join("r.json"));
    assert_eq!(v["config_echo"]["routing"]["algorithm"], "prag");
    assert_eq!(v["metrics"]["task_count"], 60);
    let lines = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 60);
}

#[test]
fn csv_report() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "ideal");
    let mut args = vec!["run"];
    args.extend(INPUTS);
    args.extend(["--format", "csv"]);
    let o = netmcp(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("metric,value\nssr,"));
    assert!(text.contains("\nwall_time,value\nsl_ms,"));
}

#[test]
fn missing_scenario_names_path() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "ideal");
    let o = netmcp(&["run", "--scenario", "absent.json", "--pool", "pool.json", "--queries", "q.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.json"));
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "ideal");
    for extra in [&["--alpha", "0.7", "--beta", "0.7"][..], &["--filter-servers", "0"], &["--filter-servers", "99"], &["--max-turns", "0"]] {
        let mut args = vec!["run"];
        args.extend(INPUTS);
        args.extend(extra);
        let o = netmcp(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", stderr(&o));
    }
    let o = netmcp(&["run", "--pool", "pool.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--scenario"));
}

#[test]
fn sweep_alpha_one_matches_prag_run() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "fluctuating");
    let mut args = vec!["sweep"];
    args.extend(INPUTS);
    args.extend(["--alphas", "1.0", "--filters", "5:10", "--seed", "4"]);
    let o = netmcp(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = sweep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);

    let mut args = vec!["run"];
    args.extend(INPUTS);
    args.extend(["--algorithm", "prag", "--seed", "4"]);
    let o = netmcp(&args, dir.path());
    let run: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows[0]["metrics"], run["metrics"]);
}

#[test]
fn sweep_matrix_and_bad_filters() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path(), "fluctuating");
    let mut args = vec!["sweep"];
    args.extend(INPUTS);
    args.extend(["--alphas", "0.8,0.4", "--filters", "5:10,3:5", "--format", "csv", "--out", "m.csv"]);
    let o = netmcp(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let mut args = vec!["sweep"];
    args.extend(INPUTS);
    args.extend(["--alphas", "0.5", "--filters", "5-10"]);
    assert_eq!(netmcp(&args, dir.path()).status.code(), Some(2));

    let mut args = vec!["sweep"];
    args.extend(INPUTS);
    args.extend(["--alphas", "1.5"]);
    assert_eq!(netmcp(&args, dir.path()).status.code(), Some(2));
}
