use std::path::Path;
use std::process::{Command, Output};

fn ris_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-sim"))
        .args(args)
        .env_remove("RIS_SIM_WORKERS")
        .output()
        .unwrap()
}

fn one_line_stderr(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "stderr: {text:?}");
    text
}

#[test]
fn su_writes_four_methods_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let res = ris_sim(&["su", "--trials", "10", "--seed", "42", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,trial,metric_db"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 40);
    for method in ["Am", "LbMax", "NoOpt", "UbMax"] {
        let trials: Vec<usize> = rows
            .iter()
            .filter(|r| r[0] == method)
            .map(|r| r[1].parse().unwrap())
            .collect();
        assert_eq!(trials, (0..10).collect::<Vec<_>>());
    }
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap().is_finite()));
}

#[test]
fn missing_config_exits_2() {
    let res = ris_sim(&["su", "--config", "/definitely/not/here.toml", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    one_line_stderr(&res);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "n_users = \"ten\"\n").unwrap();
    let res = ris_sim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    one_line_stderr(&res);
    std::fs::write(&cfg, "antennas = 4\n").unwrap();
    assert_eq!(ris_sim(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_1() {
    for args in [&["su", "--trials", "0"][..], &["frobnicate"], &["mu", "--seed", "x"]] {
        let res = ris_sim(args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        one_line_stderr(&res);
    }
}

#[test]
fn unwritable_output_exits_3() {
    let res = ris_sim(&["su", "--trials", "1", "--out", "/nonexistent-dir/r.csv"]);
    assert_eq!(res.status.code(), Some(3));
    one_line_stderr(&res);
}

#[test]
fn validate_echoes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "n_users = 4\np_max_watts = 2.5\n").unwrap();
    let res = ris_sim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let echoed = String::from_utf8(res.stdout).unwrap();
    let back = ris_core::ScenarioConfig::from_toml_str(&echoed).unwrap();
    assert_eq!(back.n_users, 4);
    assert_eq!(back.p_max_watts, 2.5);
    assert_eq!(back.n_ris_elements, ris_core::ScenarioConfig::default().n_ris_elements);
}

#[test]
fn json_output_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |fmt: &str, name: &str| {
        let out = dir.path().join(name);
        let args = ["su", "--trials", "3", "--seed", "5", "--format", fmt, "--out", out.to_str().unwrap()];
        assert!(ris_sim(&args).status.success());
        std::fs::read_to_string(Path::new(&out)).unwrap()
    };
    let csv_text = run("csv", "r.csv");
    let json: serde_json::Value = serde_json::from_str(&run("json", "r.json")).unwrap();
    let records = json.as_array().unwrap();
    let rows: Vec<&str> = csv_text.lines().skip(1).collect();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(rows) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(rec["method"], cols[0]);
        assert_eq!(rec["trial"].as_u64().unwrap().to_string(), cols[1]);
        assert_eq!(rec["metric_db"].as_f64().unwrap(), cols[2].parse::<f64>().unwrap());
    }
}
