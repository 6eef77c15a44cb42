use std::path::PathBuf;
use std::process::Command;

use selinf::input::{parse_str, to_json};
use selinf::run::parse_metric;
use selinf::transforms::parse_transforms;
use selinf::{run, run_text, Format, RunConfig};
use selinf_core::{MetricSpec, TestKind, EPS_PROB};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn json_run(name: &str, tests: &[TestKind]) -> (i32, Value) {
    let mut config = RunConfig::new(data(name));
    config.tests = tests.to_vec();
    config.format = Format::Json;
    let out = run(&config);
    let report = serde_json::from_str(&out.output).unwrap_or(Value::Null);
    (out.code, report)
}

fn verdicts(report: &Value) -> Vec<String> {
    report["tests"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["verdict"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn feasible_system_reports_a_witness() {
    let (code, report) = json_run("jdc.json", &[TestKind::Lp]);
    assert_eq!(code, 0);
    assert_eq!(report["schema"], "selinf-report/1");
    assert_eq!(report["outcome"], "consistent");
    let witness = &report["tests"][0]["evidence"]["witness"];
    assert!(witness["residual"].as_f64().unwrap() <= 1e-8);
    let total: f64 = witness["support"].as_array().unwrap().iter().map(|e| e["q"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-8);
}

#[test]
fn pr_box_is_ruled_out_by_lp_only() {
    let (code, report) = json_run("pr-box.json", &[TestKind::Marginal, TestKind::Lp, TestKind::Fine]);
    assert_eq!(code, 1);
    assert_eq!(verdicts(&report), ["consistent", "ruled-out", "ruled-out"]);
}

#[test]
fn marginal_violation_names_the_output() {
    let mut config = RunConfig::new(data("marginal-violation.json"));
    config.tests = vec![TestKind::Marginal];
    let out = run(&config);
    assert_eq!(out.code, 1);
    assert!(out.output.contains("A2"), "{}", out.output);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&RunConfig::new(data("empty-treatments.json")));
    assert_eq!(out.code, 2);
    assert!(out.output.starts_with("error:"));

    let mut config = RunConfig::new(data("jdc.json"));
    config.tests = vec![TestKind::Contrast];
    assert_eq!(run(&config).code, 2);

    let out = run(&RunConfig::new(data("no-such-file.json")));
    assert_eq!(out.code, 2);
}

#[test]
fn malformed_input_points_at_the_field() {
    let text = r#"{"inputs": [{"name": "l1", "levels": ["1"]}],
        "outputs": [{"name": "A1", "values": ["x", "y"]}],
        "treatments": [{"levels": {"l1": "1"}, "pmf": [{"tuple": ["z"], "p": 1}]}]}"#;
    let out = run_text(&RunConfig::new("inline.json"), text);
    assert_eq!(out.code, 2);
    assert!(out.output.contains("treatments[0].pmf[0].tuple[0]"), "{}", out.output);

    let out = run_text(&RunConfig::new("inline.json"), "{\"inputs\": [");
    assert_eq!(out.code, 2);
    assert!(out.output.contains("line"), "{}", out.output);
}

#[test]
fn unnormalized_pmf_is_rejected() {
    let text = r#"{"inputs": [{"name": "l1", "levels": ["1"]}],
        "outputs": [{"name": "A1", "values": ["x", "y"]}],
        "treatments": [{"levels": {"l1": "1"}, "pmf": [{"tuple": ["x"], "p": 0.5}, {"tuple": ["y"], "p": 0.4}]}]}"#;
    let out = run_text(&RunConfig::new("inline.json"), text);
    assert_eq!(out.code, 2);
    assert!(out.output.contains("0.9"), "{}", out.output);
}

#[test]
fn round_trip_preserves_the_system() {
    for name in ["jdc.json", "pr-box.json", "marginal-violation.json", "chain.json"] {
        let text = std::fs::read_to_string(data(name)).unwrap();
        let first = parse_str(&text, EPS_PROB).unwrap().system.unwrap();
        let second = parse_str(&to_json(&first, None), EPS_PROB).unwrap().system.unwrap();
        assert_eq!(first, second, "{}", name);
    }
    let text = std::fs::read_to_string(data("rt-min.json")).unwrap();
    let parsed = parse_str(&text, EPS_PROB).unwrap();
    assert!(parsed.rt.is_some());
}

#[test]
fn json_reports_are_byte_deterministic() {
    let mut config = RunConfig::new(data("chain.json"));
    config.format = Format::Json;
    config.seed = 5;
    let a = run(&config);
    let b = run(&config);
    assert_eq!(a, b);
    assert_eq!(a.code, 1);
}

#[test]
fn user_transform_refutes_the_chain_example() {
    let mut config = RunConfig::new(data("chain.json"));
    config.tests = vec![TestKind::Battery];
    config.transforms = Some(data("chain-grouping.transforms.json"));
    config.battery_size = 0;
    config.format = Format::Json;
    let out = run(&config);
    assert_eq!(out.code, 1);
    assert!(out.output.contains("[grouping]"), "{}", out.output);
}

#[test]
fn transforms_file_validates_against_the_design() {
    let text = std::fs::read_to_string(data("chain.json")).unwrap();
    let system = parse_str(&text, EPS_PROB).unwrap().system.unwrap();
    let specs = parse_transforms(&std::fs::read_to_string(data("chain-grouping.transforms.json")).unwrap(), &system.design)
        .unwrap();
    assert_eq!(specs.len(), 1);
    assert_eq!(specs[0].name, "grouping");

    let bad = r#"{"transforms": [{"name": "t", "outputs": {"A9": {"values": [1], "maps": {"*": {}}}}}]}"#;
    assert!(parse_transforms(bad, &system.design).is_err());
    let partial = r#"{"transforms": [{"name": "t", "outputs": {"A1": {"values": [1, 2], "maps": {"*": {"0": "1"}}}}}]}"#;
    assert!(parse_transforms(partial, &system.design).is_err());
}

#[test]
fn metric_specs_parse() {
    let text = std::fs::read_to_string(data("chain.json")).unwrap();
    let system = parse_str(&text, EPS_PROB).unwrap().system.unwrap();
    assert_eq!(parse_metric("power", &system).unwrap(), MetricSpec::power(1.0));
    assert_eq!(parse_metric("power:p=0.5", &system).unwrap(), MetricSpec::power(0.5));
    assert!(matches!(
        parse_metric("class:0,2|4;0,1|2", &system).unwrap(),
        MetricSpec::Classification { .. }
    ));
    assert!(parse_metric("power:p=-1", &system).is_err());
    assert!(parse_metric("class:0,2|4", &system).is_err());
    assert!(parse_metric("class:0,2|7;0,1|2", &system).is_err());
    assert!(parse_metric("euclid", &system).is_err());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_selinf");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    let jdc = data("jdc.json");
    let pr = data("pr-box.json");
    let empty = data("empty-treatments.json");
    assert_eq!(code(&[jdc.to_str().unwrap(), "--tests", "marginal,lp"]), Some(0));
    assert_eq!(code(&[pr.to_str().unwrap()]), Some(1));
    assert_eq!(code(&[empty.to_str().unwrap()]), Some(2));
    assert_eq!(code(&[jdc.to_str().unwrap(), "--tests", "bogus"]), Some(2));
}

#[test]
fn dump_matrix_writes_labelled_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let mut config = RunConfig::new(data("jdc.json"));
    config.tests = vec![TestKind::Lp];
    config.dump_matrix = Some(path.clone());
    assert_eq!(run(&config).code, 0);
    let grid = std::fs::read_to_string(path).unwrap();
    assert!(grid.lines().any(|l| l.contains("1000010000100001") || l.contains("1 0 0 0")), "{}", grid);
}
