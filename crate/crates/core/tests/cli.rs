//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn tool(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-noc"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("tool runs")
}

#[test]
fn malformed_length_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = tool(dir.path(), &["dse", "--L", "abc", "--E", "16", "--S", "1"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--L"), "{err}");
}

#[test]
fn single_design_point_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = tool(dir.path(), &["dse", "--L", "70mm", "--E", "16", "--S", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rows = csv::Reader::from_path(dir.path().join("dse.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    let row = rows.records().next().unwrap().unwrap();
    let field = |name: &str| {
        let i = headers.iter().position(|h| h == name).unwrap();
        row[i].parse::<f64>().unwrap()
    };
    assert_eq!(field("D_lambda_Gbps"), 16.0);
    assert_eq!(field("W"), 8.0);
}

#[test]
fn topology_and_selection_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = tool(dir.path(), &["topo", "--K", "2", "--S", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let layout: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("layout.json")).unwrap()).unwrap();
    assert_eq!(layout["snakes"].as_array().unwrap().len(), 2);

    let o = tool(dir.path(), &["--seed", "3", "select", "--K", "2", "--S", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("selected_links.csv").exists());
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[mesh]\nwidth = 8\nbogus = 1\n").unwrap();
    let o = tool(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "topo", "--K", "1", "--S", "1"],
    );
    assert!(!o.status.success());
}
