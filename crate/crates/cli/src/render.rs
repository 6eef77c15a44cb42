//! Report rendering: JSON evidence per test and the text layout.

use serde_json::{json, Map, Value};

use selinf_core::architecture::TotalCheck;
use selinf_core::feasibility::FineBound;
use selinf_core::{Design, Evidence, FeasibilitySystem, System, TestReport};

/// Version tag written into every JSON report.
pub const SCHEMA: &str = "selinf-report/1";

fn treatment(d: &Design, t: usize) -> String {
    d.treatment_label(&d.treatments[t])
}

/// Nonzero witness entries with their coupling assignments.
pub fn witness_support(fs: &FeasibilitySystem, q: &[f64]) -> Vec<Value> {
    let d = fs.design();
    let coords = fs.coordinates();
    q.iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(j, &x)| {
            let a = fs.column_assignment(j);
            let mut assignment = Map::new();
            for (c, &(k, l)) in coords.iter().enumerate() {
                assignment.insert(d.level_label(k, l), Value::from(d.outputs[k].values[a[c]].label.clone()));
            }
            json!({ "assignment": assignment, "q": x })
        })
        .collect()
}

pub fn evidence(system: Option<&System>, report: &TestReport) -> Value {
    match &report.evidence {
        Evidence::None => Value::Null,
        Evidence::Marginal(m) => {
            let d = &system.expect("marginal test has a system").design;
            json!({
                "worst_subset": m.worst_subset.iter().map(|&k| d.outputs[k].name.clone()).collect::<Vec<_>>(),
                "worst_pair": m.worst_pair.map(|(a, b)| vec![treatment(d, a), treatment(d, b)]),
                "discrepancy": m.discrepancy,
                "total_variation": m.total_variation,
                "subsets_checked": m.subsets_checked,
                "pairs_compared": m.pairs_compared,
            })
        }
        Evidence::Feasibility(v) => json!({
            "feasible": v.feasible,
            "iterations": v.iterations,
            "infeasibility": v.infeasibility,
            "witness": v.witness.as_ref().map(|w| json!({ "residual": w.residual, "sum": w.sum })),
        }),
        Evidence::Fine(f) => json!({
            "values": f.values.iter().map(|v| json!({ "i": v.i + 1, "j": v.j + 1, "value": v.value })).collect::<Vec<_>>(),
            "worst": f.worst.map(|w| json!({
                "i": w.i + 1,
                "j": w.j + 1,
                "bound": match w.bound { FineBound::Lower => "lower", FineBound::Upper => "upper" },
                "excess": w.excess,
            })),
        }),
        Evidence::Chain { sequences_checked, violation } => {
            let d = &system.expect("distance test has a system").design;
            json!({
                "sequences_checked": sequences_checked,
                "violation": violation.as_ref().map(|v| json!({
                    "sequence": v.sequence.iter().map(|&(k, l)| d.level_label(k, l)).collect::<Vec<_>>(),
                    "lhs": v.lhs,
                    "rhs": v.rhs,
                    "closing_treatment": treatment(d, v.closing_treatment),
                    "link_treatments": v.link_treatments.iter().map(|&t| treatment(d, t)).collect::<Vec<_>>(),
                })),
            })
        }
        Evidence::Cosphericity(results) => {
            let d = &system.expect("cosphericity test has a system").design;
            Value::Array(
                results
                    .iter()
                    .map(|r| {
                        let s = r.subdesign;
                        json!({
                            "inputs": [d.inputs[s.k].name.clone(), d.inputs[s.k2].name.clone()],
                            "levels": [
                                [d.inputs[s.k].levels[s.i].clone(), d.inputs[s.k].levels[s.i2].clone()],
                                [d.inputs[s.k2].levels[s.j].clone(), d.inputs[s.k2].levels[s.j2].clone()],
                            ],
                            "rho": r.rho.to_vec(),
                            "lhs": r.lhs,
                            "rhs": r.rhs,
                            "pass": r.pass,
                            "boundary": r.boundary,
                        })
                    })
                    .collect(),
            )
        }
        Evidence::Battery(members) => Value::Array(
            members
                .iter()
                .map(|m| json!({ "verdict": m.verdict.name(), "summary": m.summary, "notes": m.notes }))
                .collect(),
        ),
        Evidence::Architecture(a) => json!({
            "consistent": a.consistent.iter().map(|x| x.name()).collect::<Vec<_>>(),
            "max_c": a.max_c,
            "min_c": a.min_c,
            "min_cumulative": a.min_cumulative,
            "total": a.profile.total,
            "serial_total": match a.serial_total {
                TotalCheck::Holds => "holds",
                TotalCheck::Fails => "fails",
                TotalCheck::Indeterminate => "indeterminate",
            },
            "c": a.profile.c,
            "cumulative": a.profile.cumulative,
        }),
    }
}
