use std::path::Path;
use std::process::{Command, Output};

use ecomplexity::io::{parse_trade_csv, write_trade_csv};
use ecomplexity::synth::{synthetic_panel, write_panel};
use ecomplexity_core::data::{TradeRecord, TradeTable};
use proptest::prelude::*;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecomplexity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn triangular_fixture_orders_countries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bin(&["eci", "--fixture", "triangular", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("eci_2000.csv")).unwrap();
    let rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.to_string(), b.parse().unwrap())
        })
        .collect();
    let labels: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(labels, ["c0", "c1", "c2"]);
    for ((_, v), want) in rows.iter().zip([1.0, 0.0, -1.0]) {
        assert!((v - want).abs() < 1e-9);
    }
}

#[test]
fn zero_convergence_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bin(&["fitness", "--method", "fcm", "--fixture", "nested", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(&out);
    assert_eq!(m["exit_code"], 0);
    assert!(m.to_string().contains("zero_convergence"));
}

#[test]
fn missing_input_exits_one_and_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let o = bin(&["pipeline", "--trade", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(missing.to_str().unwrap()));
}

#[test]
fn malformed_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let trade = dir.path().join("trade.csv");
    std::fs::write(&trade, "year,country,product,value\n2005,USA,266,10\n2005,USA,267,-1\n").unwrap();
    let o = bin(&["pipeline", "--trade", trade.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("{}:3", trade.display())), "{err}");
}

#[test]
fn selftest_passes_and_fault_is_named() {
    let o = bin(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = bin(&["selftest", "--inject-fault", "normalization"]);
    assert_ne!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].starts_with("FAIL fitness_normalization"));
}

#[test]
fn synthetic_panel_produces_regressions() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(60, 16, 1990..2011, 3);
    let files = write_panel(&panel, &dir.path().join("in")).unwrap();
    let out = dir.path().join("out");
    let o = bin(&[
        "pipeline",
        "--trade",
        files.trade.to_str().unwrap(),
        "--kinds",
        files.kinds.to_str().unwrap(),
        "--gdp",
        files.gdp.to_str().unwrap(),
        "--metric",
        "eci,mfcm",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["growth_mr.txt", "growth_mfcm.json", "growth_robustness.csv", "service_dummy.txt", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let m = manifest(&out);
    let listed = m["files"].as_object().map(|o| o.len()).or_else(|| m["files"].as_array().map(Vec::len));
    assert!(listed.unwrap_or(0) > 0);

    // Yearly rank agreement between two score series in one directory.
    let cmp = bin(&[
        "compare",
        "--left",
        out.to_str().unwrap(),
        "--left-metric",
        "eci",
        "--right",
        out.to_str().unwrap(),
        "--right-metric",
        "fitness_mfcm",
    ]);
    assert_eq!(cmp.status.code(), Some(0), "{}", String::from_utf8_lossy(&cmp.stderr));
    let text = String::from_utf8_lossy(&cmp.stdout);
    assert!(text.starts_with("year,rho,n\n"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn regress_on_gdp_only() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(40, 8, 1990..2011, 9);
    let files = write_panel(&panel, dir.path()).unwrap();
    let json = dir.path().join("r.json");
    let o = bin(&[
        "regress",
        "--gdp",
        files.gdp.to_str().unwrap(),
        "--periods",
        "1990-2000,2000-2010",
        "--regressors",
        "log_initial_gdp",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("log_initial_gdp"));
    let v: Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    assert_eq!(v["result"]["n_obs"], 80);
}

fn record() -> impl Strategy<Value = TradeRecord> {
    (1990i32..2020, "[A-Z]{3}", "[0-9]{2,4}", 0.0f64..1e9)
        .prop_map(|(y, c, p, v)| TradeRecord::new(y, c, p, (v * 1e3).round() / 1e3).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trade_csv_round_trips(records in proptest::collection::vec(record(), 1..40)) {
        let (table, _) = TradeTable::aggregate(records, "prop");
        let mut buf = Vec::new();
        write_trade_csv(&table, &mut buf).unwrap();
        let (back, dups) = parse_trade_csv(buf.as_slice(), "prop").unwrap();
        prop_assert_eq!(dups, 0);
        prop_assert_eq!(back.records(), table.records());
    }
}
