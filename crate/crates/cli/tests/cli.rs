use std::path::Path;
use std::process::{Command, Output};

fn emt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emt")).args(args).env_remove("EMT_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = emt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn noiseless_frame_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    ok(&["frame", "--d", "3", "--epsilon", "0", "--trials", "1000", "--seed", "1", "--out", out.to_str().unwrap()]);
    let csv = read(&out);
    assert_eq!(column(&csv, "p_f"), vec!["0.0"]);
    assert_eq!(column(&csv, "p_z"), vec![""]);
    let side: serde_json::Value = serde_json::from_str(&read(&dir.path().join("f.json"))).unwrap();
    assert_eq!(side["command"], "frame");
    assert_eq!(side["config"]["trials"], 1000);
    assert!(side["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let p = dir.path().join(name);
        ok(&[
            "switching", "--d", "3", "--epsilon", "0.002,0.004", "--trials", "3000", "--seed", "9", "--threads", threads,
            "--out", p.to_str().unwrap(),
        ]);
        read(&p)
    };
    let a = run("1", "a.csv");
    let b = run("4", "b.csv");
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn env_var_sets_default_threads() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_emt"))
        .args(["learn", "--eps-bar", "0.02", "--shots", "2000", "--seed", "3", "--out", p.to_str().unwrap()])
        .env("EMT_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let side: serde_json::Value = serde_json::from_str(&read(&dir.path().join("p.json"))).unwrap();
    assert_eq!(side["threads"], 3);
}

#[test]
fn resume_completes_a_partial_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    let part = dir.path().join("part.csv");
    let base = ["frame", "--epsilon", "0.001,0.003", "--trials", "2000", "--seed", "5"];
    let run = |d: &str, resume: bool, out: &Path| {
        let mut a = base.to_vec();
        a.extend(["--d", d, "--out", out.to_str().unwrap()]);
        if resume {
            a.push("--resume");
        }
        ok(&a)
    };
    run("3,5", false, &full);
    run("3", false, &part);
    run("3,5", true, &part);
    assert_eq!(read(&full), read(&part));
    let side: serde_json::Value = serde_json::from_str(&read(&dir.path().join("part.json"))).unwrap();
    assert_eq!((side["rows_written"].as_u64(), side["rows_resumed"].as_u64()), (Some(2), Some(2)));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "d = 3\nepsilon = 0.002\ntrials = 500\nseed = 2\n").unwrap();
    let csv = ok(&["frame", "--config", cfg.to_str().unwrap(), "--trials", "700"]);
    assert_eq!(column(&csv, "trials"), vec!["700"]);
    assert_eq!(column(&csv, "seed"), vec!["2"]);
}

#[test]
fn invalid_parameter_is_named() {
    let out = emt(&["frame", "--d", "4", "--epsilon", "0.001", "--seed", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`d`"));
    let out = emt(&["frame", "--d", "3", "--epsilon", "0.001"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    let out = emt(&["qpd", "--circuit", "/nonexistent", "--observable", "+Z", "--eps-bar", "0.6", "--seed", "1"]);
    assert!(!out.status.success());
}

#[test]
fn plan_row_matches_planner() {
    let csv = ok(&["plan", "--epsilon", "0.01", "--kappa", "0.4", "--total-cost", "1000"]);
    let max_t: f64 = column(&csv, "max_t")[0].parse().unwrap();
    assert!((max_t - 1000f64.ln() / (-2.0 * 0.992f64.ln())).abs() < 1e-9, "{max_t}");
    let plotted: f64 = column(&csv, "max_t_plotted")[0].parse().unwrap();
    assert!((plotted - 214.14).abs() < 0.01);
    let sweep = ok(&["plan", "--sweep", "--points", "5", "--total-cost", "100,1000,10000"]);
    assert_eq!(sweep.lines().count(), 16);
}

#[test]
fn learn_writes_dataset_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.csv");
    ok(&["learn", "--eps-bar", "0.02", "--shots", "20000", "--seed", "4", "--grid", "8,16,32,64", "--out", p.to_str().unwrap()]);
    assert_eq!(column(&read(&p), "p"), vec!["8", "16", "32", "64"]);
    let side: serde_json::Value = serde_json::from_str(&read(&dir.path().join("l.json"))).unwrap();
    let hat = side["extra"]["eps_bar_hat"].as_f64().unwrap();
    assert!((hat - 0.02).abs() < 0.004, "{hat}");
}

#[test]
fn qpd_from_circuit_file() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("htH.circ");
    std::fs::write(&c, "QUBITS 1\nH 0\nTICK\nT 0\nTICK\nH 0\n").unwrap();
    let csv = ok(&["qpd", "--circuit", c.to_str().unwrap(), "--observable", "+Z", "--eps-bar", "0.05,0.1", "--shots", "20000", "--seed", "1"]);
    let ideal: f64 = column(&csv, "ideal")[0].parse().unwrap();
    assert!((ideal - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    for (m, s) in column(&csv, "mean").iter().zip(column(&csv, "std_error")) {
        let (m, s): (f64, f64) = (m.parse().unwrap(), s.parse().unwrap());
        assert!((m - ideal).abs() < 5.0 * s);
    }
}

#[test]
fn dump_code_lists_stabilizers_and_logicals() {
    let text = ok(&["dump-code", "--d", "3"]);
    assert!(text.contains("code S1 d=3") && text.contains("code S2 d=3"));
    assert_eq!(text.matches("logical_x").count(), 2);
}
