use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scires(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scires"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_args() -> Vec<String> {
    let data = repo().join("data");
    ["demand", "suppliers", "history", "performance"]
        .iter()
        .flat_map(|k| [format!("--{k}"), data.join(format!("{k}.csv")).display().to_string()])
        .collect()
}

fn run_with(cmd: &str, extra: &[&str]) -> Output {
    let data = data_args();
    let mut args: Vec<&str> = vec![cmd];
    args.extend(data.iter().map(String::as_str));
    args.extend_from_slice(extra);
    scires(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(scires(&["--help"]).status.code(), Some(0));
    assert_eq!(scires(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let o = scires(&["recommend", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert_eq!(scires(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn ingest_prints_cleaning_report() {
    let o = run_with("ingest", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["demand"]["rows_accepted"], 100);
    assert_eq!(report["suppliers"]["rows_accepted"], 5);
}

#[test]
fn ingest_missing_lead_time_column_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let original = std::fs::read_to_string(repo().join("data/suppliers.csv")).unwrap();
    let stripped: String = original
        .lines()
        .map(|line| {
            let mut cells: Vec<&str> = line.split(',').collect();
            cells.remove(2);
            cells.join(",") + "\n"
        })
        .collect();
    assert!(!stripped.lines().next().unwrap().split(',').any(|c| c == "lead_time"));
    let path = dir.path().join("suppliers.csv");
    std::fs::write(&path, stripped).unwrap();
    let demand = repo().join("data/demand.csv");
    let o = scires(&[
        "ingest",
        "--demand",
        demand.to_str().unwrap(),
        "--suppliers",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lead_time"), "{}", stderr(&o));
}

#[test]
fn missing_required_file_is_an_input_error() {
    let o = scires(&["recommend", "--out", "/nonexistent-dir-never-written"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--demand"));
}

#[test]
fn recommend_writes_table_with_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run_with("recommend", &["--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("recommendations.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("demand,recommended_resource,overall_score"));
    assert!(lines.count() > 0);
    for name in ["plans.json", "rankings.csv", "model.json", "ingest_report.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn recommend_with_operator_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let weights = repo().join("config/weights.json");
    let constraints = repo().join("config/constraints.json");
    let o = run_with(
        "recommend",
        &[
            "--out",
            out,
            "--weights",
            weights.to_str().unwrap(),
            "--constraints",
            constraints.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rankings = std::fs::read_to_string(dir.path().join("rankings.csv")).unwrap();
    for line in rankings.lines().skip(1) {
        let lead: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!(lead <= 25.0);
    }
}

#[test]
fn unknown_sku_filter_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with("recommend", &["--out", dir.path().to_str().unwrap(), "--sku", "SKU999"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SKU999"));
}

#[test]
fn invalid_weights_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    std::fs::write(&w, r#"{"lead_time": -1, "cost": 1}"#).unwrap();
    let o = run_with(
        "recommend",
        &["--out", dir.path().to_str().unwrap(), "--weights", w.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lead_time"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_curves_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with("simulate", &["--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    let events = metrics.as_array().unwrap();
    assert!(!events.is_empty());
    for e in events {
        let id = e["event_id"].as_str().unwrap();
        let baseline = std::fs::read_to_string(dir.path().join(format!("timelines/{id}.baseline.csv"))).unwrap();
        assert_eq!(baseline.lines().next(), Some("t,performance"));
        let assisted = dir.path().join(format!("timelines/{id}.assisted.csv"));
        assert_eq!(assisted.exists(), !e["assisted"].is_null());
        if let Some(c) = e["comparison"].as_object() {
            assert!(c["delta_cumulative_loss"].as_f64().unwrap() >= 0.0);
        }
    }
}

#[test]
fn simulate_with_assisted_equal_to_baseline_has_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("config/default.json")).unwrap()).unwrap();
    // With no baseline delay the assisted arrival is capped at the baseline one.
    config["baseline_recovery_delay"] = 0.0.into();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    let out = dir.path().join("out");
    let o = run_with(
        "simulate",
        &["--out", out.to_str().unwrap(), "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let mut compared = 0;
    for e in metrics.as_array().unwrap() {
        if let Some(c) = e["comparison"].as_object() {
            assert_eq!(c["delta_time_to_recovery"].as_f64(), Some(0.0));
            assert_eq!(c["delta_cumulative_loss"].as_f64(), Some(0.0));
            compared += 1;
        }
    }
    assert!(compared > 0);
}

#[test]
fn gen_data_reproduces_bundled_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let o = scires(&["gen-data", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["demand.csv", "suppliers.csv", "history.csv", "performance.csv"] {
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        let bundled = std::fs::read(repo().join("data").join(name)).unwrap();
        assert_eq!(fresh, bundled, "{name} differs from the bundled copy");
    }
}

#[test]
fn serve_answers_over_tcp() {
    use std::io::{BufRead, BufReader, Read, Write};

    let mut child = Command::new(env!("CARGO_BIN_EXE_scires"))
        .args(["serve", "--port", "0"])
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .expect("address line")
        .to_string();

    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "POST /sessions HTTP/1.1\r\nHost: {addr}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 201"), "{response}");
    assert!(response.contains("\"session_id\":\"s-1\""), "{response}");
}
