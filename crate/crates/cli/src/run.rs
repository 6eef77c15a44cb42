use std::path::PathBuf;
use std::thread;

use serde_json::{json, Value};

use selinf_core::distance::{run_distance_test, DEFAULT_MAX_LENGTH};
use selinf_core::feasibility::{build_feasibility_system, solve_feasibility};
use selinf_core::transform::{random_groupings, random_monotone_relabelings};
use selinf_core::{
    battery, contrast_test, cosphericity_test, fine_inequality_check, marginal_test,
    Evidence, MetricSpec, RtSystem, System, TestKind, TestReport, TransformSpec, Verdict, EPS_COSPH, EPS_LP,
    EPS_PROB, EPS_TEST,
};

use crate::input::{parse_str, Parsed};
use crate::render::{evidence, witness_support, SCHEMA};
use crate::transforms::parse_transforms;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    /// Empty selects the default set.
    pub tests: Vec<TestKind>,
    /// `power:p=<x>` or `class:<partition>`; empty means `power:p=1`.
    pub metrics: Vec<String>,
    pub transforms: Option<PathBuf>,
    pub eps_prob: f64,
    pub eps_test: f64,
    pub eps_lp: f64,
    pub eps_cosph: f64,
    /// Largest output subset for the marginal test; `None` means `n - 1`.
    pub max_subset: Option<usize>,
    pub max_length: usize,
    /// Random groupings and monotone relabelings each added to the battery.
    pub battery_size: usize,
    pub format: Format,
    pub seed: u64,
    pub dump_matrix: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            tests: Vec::new(),
            metrics: Vec::new(),
            transforms: None,
            eps_prob: EPS_PROB,
            eps_test: EPS_TEST,
            eps_lp: EPS_LP,
            eps_cosph: EPS_COSPH,
            max_subset: None,
            max_length: DEFAULT_MAX_LENGTH,
            battery_size: 10,
            format: Format::Text,
            seed: 0,
            dump_matrix: None,
        }
    }
}

/// Exit status and rendered report (or diagnostics on exit 2).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

impl Outcome {
    fn usage(msg: impl Into<String>) -> Self {
        Outcome {
            code: 2,
            output: format!("error: {}\n", msg.into()),
        }
    }
}

/// Parses a `--metric` value. Partitions list classes per output separated
/// by `;`, classes by `|`, and value labels by `,`.
pub fn parse_metric(spec: &str, system: &System) -> Result<MetricSpec, String> {
    if let Some(rest) = spec.strip_prefix("power") {
        let rest = rest.strip_prefix(':').unwrap_or(rest);
        let p = match rest.trim() {
            "" => 1.0,
            r => r
                .strip_prefix("p=")
                .and_then(|x| x.parse::<f64>().ok())
                .ok_or_else(|| format!("metric '{}': expected power:p=<number>", spec))?,
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("metric '{}': p must lie in [0, 1]", spec));
        }
        return Ok(MetricSpec::power(p));
    }
    let Some(body) = spec.strip_prefix("class:") else {
        return Err(format!("metric '{}': expected power:p=<x> or class:<partition>", spec));
    };
    let outputs = &system.design.outputs;
    let parts: Vec<&str> = body.split(';').collect();
    if parts.len() != outputs.len() {
        return Err(format!("metric '{}': need one partition per output ({})", spec, outputs.len()));
    }
    let mut partitions = Vec::with_capacity(parts.len());
    for (part, out) in parts.iter().zip(outputs) {
        let mut classes = Vec::new();
        for class in part.split('|') {
            let mut members = Vec::new();
            for label in class.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                members.push(
                    out.value_index(label)
                        .ok_or_else(|| format!("metric '{}': output {} has no value '{}'", spec, out.name, label))?,
                );
            }
            classes.push(members);
        }
        selinf_core::distance::class_map(&classes, out.values.len())
            .map_err(|e| format!("metric '{}': output {}: {}", spec, out.name, e))?;
        partitions.push(classes);
    }
    Ok(MetricSpec::Classification { partitions })
}

fn default_tests(parsed: &Parsed) -> Vec<TestKind> {
    let mut tests = Vec::new();
    if parsed.system.is_some() {
        tests.extend([
            TestKind::Marginal,
            TestKind::Lp,
            TestKind::Fine,
            TestKind::Distance,
            TestKind::Cosphericity,
            TestKind::Battery,
        ]);
    }
    if parsed.rt.is_some() {
        tests.push(TestKind::Contrast);
    }
    tests
}

/// A finished test with its rendered evidence.
struct Done {
    report: TestReport,
    evidence: Value,
}

fn combine(reports: Vec<TestReport>) -> TestReport {
    let verdict = if reports.iter().any(|r| r.verdict == Verdict::RuledOut) {
        Verdict::RuledOut
    } else if reports.iter().any(|r| r.verdict == Verdict::Consistent) {
        Verdict::Consistent
    } else {
        Verdict::Inapplicable
    };
    let summary = reports
        .iter()
        .map(|r| format!("{}: {}", r.test.name(), r.summary))
        .collect::<Vec<_>>()
        .join("; ");
    let notes = reports.iter().flat_map(|r| r.notes.clone()).collect();
    TestReport {
        test: TestKind::Battery,
        verdict,
        summary,
        evidence: Evidence::None,
        notes,
    }
}

struct Job<'a> {
    config: &'a RunConfig,
    system: Option<&'a System>,
    rt: Option<&'a RtSystem>,
    metrics: &'a [MetricSpec],
    specs: &'a [TransformSpec],
}

impl Job<'_> {
    fn run(&self, test: TestKind) -> Result<Vec<Done>, String> {
        let c = self.config;
        let plain = |report: TestReport| Done {
            evidence: evidence(self.system, &report),
            report,
        };
        let system = || self.system.ok_or_else(|| format!("test {} needs treatments", test.name()));
        match test {
            TestKind::Marginal => {
                let s = system()?;
                let max = c.max_subset.unwrap_or(s.n().saturating_sub(1)).max(1);
                Ok(vec![plain(marginal_test(s, max, c.eps_test))])
            }
            TestKind::Lp => {
                let s = system()?;
                let fs = build_feasibility_system(s).map_err(|e| e.to_string())?;
                let v = solve_feasibility(&fs, c.eps_lp).map_err(|e| e.to_string())?;
                let support = v.witness.as_ref().map(|w| witness_support(&fs, &w.q));
                let report = if v.feasible {
                    let w = v.witness.as_ref().expect("feasible verdict has a witness");
                    TestReport::new(
                        TestKind::Lp,
                        Verdict::Consistent,
                        format!("feasible over {} coupling assignments (residual {:e})", fs.cols(), w.residual),
                        Evidence::Feasibility(v),
                    )
                } else {
                    TestReport::new(
                        TestKind::Lp,
                        Verdict::RuledOut,
                        format!("infeasible (phase-one optimum {:e})", v.infeasibility),
                        Evidence::Feasibility(v),
                    )
                };
                let mut ev = evidence(self.system, &report);
                if let (Some(support), Some(w)) = (support, ev.get_mut("witness").and_then(Value::as_object_mut)) {
                    w.insert("support".into(), Value::Array(support));
                }
                Ok(vec![Done { report, evidence: ev }])
            }
            TestKind::Fine => Ok(vec![plain(fine_inequality_check(system()?, c.eps_test))]),
            TestKind::Distance => {
                let s = system()?;
                self.metrics
                    .iter()
                    .map(|m| {
                        run_distance_test(s, m, c.max_length, c.eps_test)
                            .map(plain)
                            .map_err(|e| e.to_string())
                    })
                    .collect()
            }
            TestKind::Cosphericity => Ok(vec![plain(
                cosphericity_test(system()?, c.eps_cosph).map_err(|e| e.to_string())?,
            )]),
            TestKind::Battery => {
                let s = system()?;
                let mut powers: Vec<MetricSpec> = self
                    .metrics
                    .iter()
                    .filter(|m| matches!(m, MetricSpec::Power { .. }))
                    .cloned()
                    .collect();
                if powers.is_empty() {
                    powers.push(MetricSpec::power(1.0));
                }
                let member = |t: &System| -> selinf_core::Result<TestReport> {
                    let mut parts = Vec::new();
                    for m in &powers {
                        parts.push(run_distance_test(t, m, c.max_length, c.eps_test)?);
                    }
                    parts.push(cosphericity_test(t, c.eps_cosph)?);
                    Ok(combine(parts))
                };
                let report = battery(s, self.specs, member).map_err(|e| e.to_string())?;
                Ok(vec![plain(report)])
            }
            TestKind::Contrast => {
                let rt = self
                    .rt
                    .ok_or_else(|| String::from("test contrast needs response-time data (\"rt\")"))?;
                Ok(vec![plain(contrast_test(rt, c.eps_test))])
            }
        }
    }
}

pub fn run(config: &RunConfig) -> Outcome {
    let text = match std::fs::read_to_string(&config.input) {
        Ok(t) => t,
        Err(e) => return Outcome::usage(format!("cannot read {}: {}", config.input.display(), e)),
    };
    run_text(config, &text)
}

pub fn run_text(config: &RunConfig, text: &str) -> Outcome {
    for (name, eps) in [
        ("eps-prob", config.eps_prob),
        ("eps-test", config.eps_test),
        ("eps-lp", config.eps_lp),
        ("eps-cosph", config.eps_cosph),
    ] {
        if !(eps > 0.0 && eps.is_finite()) {
            return Outcome::usage(format!("--{} must be a positive number", name));
        }
    }
    if config.max_length < 3 {
        return Outcome::usage("--max-length must be at least 3");
    }
    let parsed = match parse_str(text, config.eps_prob) {
        Ok(p) => p,
        Err(e) => return Outcome::usage(format!("{}: invalid input\n{}", config.input.display(), e)),
    };
    let tests = if config.tests.is_empty() {
        default_tests(&parsed)
    } else {
        let mut t = config.tests.clone();
        t.sort();
        t.dedup();
        t
    };
    if tests.is_empty() {
        return Outcome::usage("no tests selected");
    }
    let system = parsed.system.as_ref();
    let needs_system = tests.iter().any(|&t| t != TestKind::Contrast);
    if needs_system && system.is_none() {
        return Outcome::usage("the selected tests need at least one treatment");
    }
    if tests.contains(&TestKind::Contrast) && parsed.rt.is_none() {
        return Outcome::usage("test contrast needs response-time data (\"rt\")");
    }

    let mut metrics = Vec::new();
    if let Some(s) = system {
        let specs: Vec<String> = if config.metrics.is_empty() {
            vec![String::from("power:p=1")]
        } else {
            config.metrics.clone()
        };
        for spec in &specs {
            match parse_metric(spec, s) {
                Ok(m) => metrics.push(m),
                Err(e) => return Outcome::usage(e),
            }
        }
    }
    let mut specs = Vec::new();
    if let Some(path) = &config.transforms {
        let Some(s) = system else {
            return Outcome::usage("--transforms needs a system with treatments");
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return Outcome::usage(format!("cannot read {}: {}", path.display(), e)),
        };
        match parse_transforms(&text, &s.design) {
            Ok(t) => specs.extend(t),
            Err(e) => return Outcome::usage(e.to_string()),
        }
    }
    let user_transforms = specs.len();
    if let Some(s) = system {
        specs.extend(random_groupings(&s.design, config.battery_size, config.seed));
        specs.extend(random_monotone_relabelings(
            &s.design,
            config.battery_size,
            config.seed.wrapping_add(1),
        ));
    }

    if let Some(path) = &config.dump_matrix {
        let Some(s) = system else {
            return Outcome::usage("--dump-matrix needs a system with treatments");
        };
        let grid = match build_feasibility_system(s) {
            Ok(fs) => fs.render_grid(),
            Err(e) => return Outcome::usage(e.to_string()),
        };
        if let Err(e) = std::fs::write(path, grid) {
            return Outcome::usage(format!("cannot write {}: {}", path.display(), e));
        }
    }

    let job = Job {
        config,
        system,
        rt: parsed.rt.as_ref(),
        metrics: &metrics,
        specs: &specs,
    };
    let results: Vec<Result<Vec<Done>, String>> = thread::scope(|scope| {
        let job = &job;
        let handles: Vec<_> = tests.iter().map(|&t| scope.spawn(move || job.run(t))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(String::from("test panicked"))))
            .collect()
    });
    let mut done = Vec::new();
    for (t, r) in tests.iter().zip(results) {
        match r {
            Ok(d) => done.extend(d),
            Err(e) => return Outcome::usage(format!("test {}: {}", t.name(), e)),
        }
    }

    let ruled_out = done.iter().any(|d| d.report.verdict == Verdict::RuledOut);
    let code = i32::from(ruled_out);
    let outcome = if ruled_out { "ruled-out" } else { "consistent" };
    let output = match config.format {
        Format::Json => {
            let report = json!({
                "schema": SCHEMA,
                "input": config.input.display().to_string(),
                "config": {
                    "tests": tests.iter().map(|t| t.name()).collect::<Vec<_>>(),
                    "metrics": metrics.iter().map(|m| m.label()).collect::<Vec<_>>(),
                    "eps_prob": config.eps_prob,
                    "eps_test": config.eps_test,
                    "eps_lp": config.eps_lp,
                    "eps_cosph": config.eps_cosph,
                    "max_length": config.max_length,
                    "seed": config.seed,
                    "battery_size": config.battery_size,
                    "user_transforms": user_transforms,
                },
                "tests": done.iter().map(|d| json!({
                    "test": d.report.test.name(),
                    "verdict": d.report.verdict.name(),
                    "summary": d.report.summary,
                    "notes": d.report.notes,
                    "evidence": d.evidence,
                })).collect::<Vec<_>>(),
                "outcome": outcome,
                "exit_code": code,
            });
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => text_report(config, &tests, &done, outcome, code),
    };
    Outcome { code, output }
}

fn text_report(config: &RunConfig, tests: &[TestKind], done: &[Done], outcome: &str, code: i32) -> String {
    let mut out = String::new();
    out.push_str(&format!("input: {}\n", config.input.display()));
    out.push_str(&format!(
        "tests: {}; eps-test {:e}, eps-lp {:e}, eps-prob {:e}, seed {}\n\n",
        tests.iter().map(|t| t.name()).collect::<Vec<_>>().join(","),
        config.eps_test,
        config.eps_lp,
        config.eps_prob,
        config.seed
    ));
    for d in done {
        out.push_str(&format!(
            "{:<13} {:<13} {}\n",
            d.report.test.name(),
            d.report.verdict.name(),
            d.report.summary
        ));
        for note in &d.report.notes {
            out.push_str(&format!("{:27}note: {}\n", "", note));
        }
        if let Some(support) = d.evidence.pointer("/witness/support").and_then(Value::as_array) {
            out.push_str(&format!("{:27}witness ({} nonzero entries):\n", "", support.len()));
            for entry in support.iter().take(32) {
                let a = entry["assignment"]
                    .as_object()
                    .map(|m| {
                        m.iter()
                            .map(|(k, v)| format!("{}:{}", k, v.as_str().unwrap_or("?")))
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .unwrap_or_default();
                out.push_str(&format!("{:29}{} -> {}\n", "", a, entry["q"]));
            }
            if support.len() > 32 {
                out.push_str(&format!("{:29}({} more)\n", "", support.len() - 32));
            }
        }
    }
    out.push_str(&format!("\noutcome: {} (exit {})\n", outcome, code));
    out
}
