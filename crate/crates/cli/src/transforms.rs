//! The JSON transforms format.
//!
//! ```json
//! {"transforms": [
//!   {"name": "grouping",
//!    "outputs": {
//!      "A1": {"values": [1, 2], "maps": {"*": {"0": "2", "2": "1", "4": "1"}}},
//!      "A2": {"values": [1, 2], "maps": {"1": {"0": "2", "1": "1", "2": "1"},
//!                                        "2": {"0": "1", "1": "2", "2": "2"}}}
//!    }}
//! ]}
//! ```
//!
//! Each listed output gets new `values` (same syntax as the system file)
//! and a map per level of its input, keyed by level label, with `"*"`
//! covering unlisted levels. Unlisted outputs are left unchanged.

use std::collections::BTreeMap;

use serde::Deserialize;

use selinf_core::{Design, OutputSpec, OutputValue, TransformSpec};

use crate::input::{InputError, Label, ValueEntry};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformsFile {
    transforms: Vec<TransformEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformEntry {
    name: String,
    outputs: BTreeMap<String, OutputMap>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputMap {
    #[serde(default)]
    rename: Option<String>,
    values: Vec<ValueEntry>,
    maps: BTreeMap<String, BTreeMap<String, Label>>,
}

fn value_of(v: &ValueEntry) -> OutputValue {
    match v {
        ValueEntry::Full { label, numeric } => OutputValue {
            label: label.text(),
            numeric: *numeric,
        },
        ValueEntry::Bare(Label::Text(s)) => OutputValue::labelled(s.clone()),
        ValueEntry::Bare(Label::Number(n)) => OutputValue {
            label: n.to_string(),
            numeric: n.as_f64(),
        },
    }
}

pub fn parse_transforms(text: &str, design: &Design) -> Result<Vec<TransformSpec>, InputError> {
    let file: TransformsFile = serde_json::from_str(text)
        .map_err(|e| InputError(vec![format!("transforms: line {}, column {}: {}", e.line(), e.column(), e)]))?;
    let mut errors = Vec::new();
    let mut specs = Vec::with_capacity(file.transforms.len());
    for (ti, entry) in file.transforms.iter().enumerate() {
        let at = format!("transforms[{}] ({})", ti, entry.name);
        for name in entry.outputs.keys() {
            if !design.outputs.iter().any(|o| &o.name == name) {
                errors.push(format!("{}: unknown output {}", at, name));
            }
        }
        let mut outputs = Vec::with_capacity(design.n());
        let mut maps = Vec::with_capacity(design.n());
        for (k, out) in design.outputs.iter().enumerate() {
            let input = &design.inputs[k];
            let Some(m) = entry.outputs.get(&out.name) else {
                outputs.push(out.clone());
                maps.push(vec![(0..out.values.len()).collect(); input.levels.len()]);
                continue;
            };
            let new = OutputSpec::new(
                m.rename.clone().unwrap_or_else(|| out.name.clone()),
                m.values.iter().map(value_of).collect(),
            );
            for key in m.maps.keys() {
                if key != "*" && !input.levels.contains(key) {
                    errors.push(format!("{}.{}.maps: input {} has no level '{}'", at, out.name, input.name, key));
                }
            }
            let mut per_level = Vec::with_capacity(input.levels.len());
            for level in &input.levels {
                let Some(table) = m.maps.get(level).or_else(|| m.maps.get("*")) else {
                    errors.push(format!("{}.{}.maps: no map for level {}", at, out.name, level));
                    continue;
                };
                let mut map = Vec::with_capacity(out.values.len());
                for v in &out.values {
                    match table.get(&v.label) {
                        None => errors.push(format!("{}.{}.maps.{}: value '{}' is unmapped", at, out.name, level, v.label)),
                        Some(target) => match new.value_index(&target.text()) {
                            Some(i) => map.push(i),
                            None => errors.push(format!(
                                "{}.{}.maps.{}: target '{}' is not among the new values",
                                at,
                                out.name,
                                level,
                                target.text()
                            )),
                        },
                    }
                }
                for old in table.keys() {
                    if out.value_index(old).is_none() {
                        errors.push(format!("{}.{}.maps.{}: output has no value '{}'", at, out.name, level, old));
                    }
                }
                per_level.push(map);
            }
            outputs.push(new);
            maps.push(per_level);
        }
        specs.push(TransformSpec::new(entry.name.clone(), outputs, maps));
    }
    if errors.is_empty() {
        Ok(specs)
    } else {
        Err(InputError(errors))
    }
}
