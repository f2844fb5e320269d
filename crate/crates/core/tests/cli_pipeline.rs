use std::collections::BTreeSet;
use std::net::TcpListener;
use std::path::Path;

use serde_json::Value;

use restflake::cli::run;
use restflake::mocksut::{MockConfig, MockServer, FIXTURE_SUITE};

fn mock(deterministic: bool) -> MockServer {
    MockServer::start(MockConfig {
        port: 0,
        seed: None,
        deterministic_mode: deterministic,
    })
    .unwrap()
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("restflake").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

struct Work {
    _tmp: tempfile::TempDir,
    suite: std::path::PathBuf,
    root: std::path::PathBuf,
}

fn work() -> Work {
    let tmp = tempfile::tempdir().unwrap();
    let suite = tmp.path().join("suite.json");
    std::fs::write(&suite, FIXTURE_SUITE).unwrap();
    Work {
        root: tmp.path().to_path_buf(),
        suite,
        _tmp: tmp,
    }
}

fn finding_set(dir: &Path) -> BTreeSet<(String, String)> {
    json(&dir.join("findings.json"))["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let t = &f["target"];
            let target = t["path"].as_str().or(t["name"].as_str()).unwrap_or("status").to_string();
            (f["test"].as_str().unwrap().to_string(), target)
        })
        .collect()
}

#[test]
fn record_detect_stabilize_classify() {
    let w = work();
    let server = mock(false);
    let url = server.base_url();
    let rd = w.root.join("rd");
    assert_eq!(cli(&["record", p(&w.suite), "--base-url", &url, "--out", p(&rd)]), 0);
    let meta = json(&rd.join("run.json"));
    let baseline = meta["baseline"].as_str().unwrap();
    assert!(rd.join(format!("archives/{baseline}.json")).exists());
    assert_eq!(std::fs::read(rd.join("suite.json")).unwrap(), FIXTURE_SUITE.as_bytes());

    assert_eq!(cli(&["record", p(&w.suite), "--base-url", &url, "--out", p(&rd)]), 3);
    assert_eq!(json(&rd.join("run.json"))["baseline"], baseline);
    assert_eq!(cli(&["record", p(&w.suite), "--base-url", &url, "--out", p(&rd), "--force"]), 0);

    // Unioning four re-executions makes a coincidental equal jitter draw negligible.
    assert_eq!(cli(&["detect", p(&rd), "--repeat-detect", "4"]), 1);
    let found = finding_set(&rd);
    let tests: BTreeSet<&str> = found.iter().map(|(t, _)| t.as_str()).collect();
    for expected in ["Estimate", "Time", "Token", "Hash", "Tags", "Malformed", "Counter"] {
        assert!(tests.iter().any(|t| t.contains(expected)), "{expected} missing from {found:?}");
    }
    assert!(!tests.iter().any(|t| t.contains("Stable") || t.contains("Wrong")), "{found:?}");
    assert!(!found.iter().any(|(_, target)| target == "/base"));

    assert_eq!(cli(&["stabilize", p(&rd)]), 0);
    let stab = json(&rd.join("stabilization.json"));
    let n_actionable = json(&rd.join("findings.json"))["findings"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["actionable"] == true)
        .count();
    assert_eq!(stab["resolved_flaky"].as_u64().unwrap() as usize, n_actionable);
    let notes = std::fs::read_to_string(rd.join("annotations.txt")).unwrap();
    assert_eq!(notes.lines().filter(|l| l.starts_with("Flaky value of field")).count(), n_actionable);
    assert!(notes.contains("Flaky value of field \"/jitter\""));

    let labels = w.root.join("labels.json");
    std::fs::write(&labels, "[{\"test\": \"test_6_getOnCounterReturnsObject\", \"category\": \"State\"}]").unwrap();
    assert_eq!(cli(&["classify", p(&rd), "--labels", p(&labels)]), 0);
    let cats = json(&rd.join("categories.json"));
    assert_eq!(cats["counts"]["State"], 1);
    assert_eq!(cats["counts"]["Time"], 1);
    assert_eq!(cats["counts"]["Unord"], 1);
    assert_eq!(cats["counts"]["RunMsg"], 1);
    assert_eq!(cats["heuristic"]["test_6_getOnCounterReturnsObject"], serde_json::json!(["Unk"]));

    std::fs::write(&labels, "{not json").unwrap();
    assert_eq!(cli(&["classify", p(&rd), "--labels", p(&labels)]), 4);
    assert_eq!(cli(&["classify", p(&rd), "--labels", p(&w.root.join("absent.json"))]), 3);
}

#[test]
fn unreachable_sut_exits_with_transport_code_and_keeps_the_archive() {
    let w = work();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let rd = w.root.join("rd");
    let url = format!("http://127.0.0.1:{port}");
    assert_eq!(cli(&["record", p(&w.suite), "--base-url", &url, "--out", p(&rd), "--timeout-ms", "2000"]), 2);
    let meta = json(&rd.join("run.json"));
    assert!(rd.join(format!("archives/{}.json", meta["baseline"].as_str().unwrap())).exists());
}

#[test]
fn missing_inputs_exit_three() {
    let w = work();
    let server = mock(true);
    let url = server.base_url();
    let rd = w.root.join("rd");
    assert_eq!(cli(&["detect", p(&rd)]), 3);
    assert_eq!(cli(&["stabilize", p(&rd)]), 3);
    assert_eq!(cli(&["report", p(&rd)]), 3);
    assert_eq!(cli(&["report"]), 3);
    assert_eq!(cli(&["record", p(&w.root.join("nope.json")), "--base-url", &url, "--out", p(&rd)]), 3);
    assert_eq!(cli(&["record", p(&w.suite), "--base-url", "ftp://x", "--out", p(&rd)]), 3);

    // A repeated run without a recorded baseline.
    assert_eq!(cli(&["run", p(&w.suite), "--base-url", &url, "--out", p(&rd), "-n", "2"]), 0);
    assert_eq!(cli(&["detect", p(&rd)]), 3);
    assert_eq!(cli(&["detect", p(&rd), "--from-literals", "--infer", "off"]), 1);
    let found = finding_set(&rd);
    assert_eq!(found, BTreeSet::from([("test_8_getOnWrongReturnsObject".to_string(), "/answer".to_string())]));
    assert_eq!(cli(&["run", p(&w.suite), "--base-url", &url, "--out", p(&rd), "-n", "2"]), 3);

    let garbled = w.root.join("garbled.json");
    std::fs::write(&garbled, "{\"name\": 1}").unwrap();
    assert_eq!(cli(&["record", p(&garbled), "--base-url", &url, "--out", p(&w.root.join("g"))]), 4);
}

#[test]
fn deterministic_sut_yields_no_reexecution_findings() {
    let w = work();
    let server = mock(true);
    let url = server.base_url();
    let rd = w.root.join("rd");
    assert_eq!(cli(&["record", p(&w.suite), "--base-url", &url, "--out", p(&rd)]), 0);
    assert_eq!(cli(&["detect", p(&rd), "--infer", "off"]), 0);
    assert!(finding_set(&rd).is_empty());

    assert_eq!(cli(&["detect", p(&rd), "--infer", "on"]), 1);
    let found = finding_set(&rd);
    let targets: BTreeSet<&str> = found.iter().map(|(_, t)| t.as_str()).collect();
    assert_eq!(targets, BTreeSet::from(["/calculatedPastTime", "/digest", "/message", "/token"]));
    let doc = json(&rd.join("findings.json"));
    assert!(doc["findings"].as_array().unwrap().iter().all(|f| f["origin"] == "inference"));
}

#[test]
fn stages_are_reproducible_from_rundir_contents() {
    let w = work();
    let server = mock(true);
    let url = server.base_url();
    let a = w.root.join("a");
    let b = w.root.join("b");
    for dir in [&a, &b] {
        assert_eq!(cli(&["record", p(&w.suite), "--base-url", &url, "--out", p(dir)]), 0);
        assert_eq!(cli(&["detect", p(dir)]), 1);
        assert_eq!(cli(&["classify", p(dir)]), 0);
        assert_eq!(cli(&["stabilize", p(dir)]), 0);
    }
    for file in ["findings.json", "stabilized_suite.json", "annotations.txt", "stabilization.json", "categories.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let before = std::fs::read(a.join("stabilized_suite.json")).unwrap();
    assert_eq!(cli(&["stabilize", p(&a)]), 0);
    assert_eq!(std::fs::read(a.join("stabilized_suite.json")).unwrap(), before);
}

#[test]
fn report_over_identical_sets_is_neutral() {
    let w = work();
    let server = mock(false);
    let url = server.base_url();
    let dirs: Vec<_> = (0..3).map(|i| w.root.join(format!("r{i}"))).collect();
    for d in &dirs {
        assert_eq!(cli(&["run", p(&w.suite), "--base-url", &url, "--out", p(d), "-n", "3"]), 0);
    }
    let out = w.root.join("report.json");
    let names: Vec<&str> = dirs.iter().map(|d| p(d)).collect();
    let mut args = vec!["report", "--format", "doc", "--out", p(&out), "--baseline"];
    args.extend(&names);
    args.push("--treated");
    args.extend(&names);
    assert_eq!(cli(&args), 0);
    let doc = json(&out);
    let cmp = doc["comparison"].as_array().unwrap();
    assert_eq!(cmp.len(), 4);
    for c in cmp {
        assert_eq!(c["a12"], 0.5, "{c}");
    }

    let mut table_args = vec!["report", "--out", p(&out)];
    table_args.extend(&names);
    assert_eq!(cli(&table_args), 0);
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.lines().next().unwrap().contains("#F (#F_c, #F_u)"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn fixture_and_serve_mock_commands() {
    let w = work();
    let out = w.root.join("f.json");
    assert_eq!(cli(&["fixture", "--out", p(&out)]), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), FIXTURE_SUITE);
    let holder = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port().to_string();
    assert_eq!(cli(&["serve-mock", "--port", &port]), 2);
    assert_eq!(cli(&["detect", "x", "--infer", "maybe"]), 3);
}
