//! The JSON system format.
//!
//! ```json
//! {
//!   "inputs":  [{"name": "l1", "levels": ["1", "2"]}, ...],
//!   "outputs": [{"name": "A1", "values": [{"label": "lo", "numeric": 0}, "hi", 5]}, ...],
//!   "treatments": [
//!     {"levels": {"l1": "1", "l2": "2"},
//!      "pmf": [{"tuple": ["lo", "hi"], "p": ".25"}, ...]}
//!   ],
//!   "rt": {"grid": [0, 1, 2], "cdfs": {"1,1": [0, .5, 1], "1,2": [...], "2,1": [...], "2,2": [...]}}
//! }
//! ```
//!
//! A value written as a bare number is labelled by its text and carries it
//! as payload; a bare string has no payload. Probabilities may be numbers
//! or decimal strings. Tuples not listed in a pmf have mass zero. `rt` keys
//! name a level of the first input and a level of the second.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Number;

use selinf_core::{Design, InputSpec, JointPmf, OutputSpec, OutputValue, RtSystem, System, Treatment};

#[derive(Debug, Clone)]
pub struct InputError(pub Vec<String>);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("\n"))
    }
}

impl std::error::Error for InputError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, InputError> {
    Err(InputError(vec![msg.into()]))
}

/// A label given as a string or a bare number.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Label {
    Text(String),
    Number(Number),
}

impl Label {
    pub fn text(&self) -> String {
        match self {
            Label::Text(s) => s.clone(),
            Label::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Prob {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputEntry {
    pub name: String,
    pub levels: Vec<Label>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ValueEntry {
    Full {
        label: Label,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        numeric: Option<f64>,
    },
    Bare(Label),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputEntry {
    pub name: String,
    pub values: Vec<ValueEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MassEntry {
    pub tuple: Vec<Label>,
    pub p: Prob,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentEntry {
    pub levels: BTreeMap<String, Label>,
    pub pmf: Vec<MassEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RtEntry {
    pub grid: Vec<f64>,
    pub cdfs: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub inputs: Vec<InputEntry>,
    #[serde(default)]
    pub outputs: Vec<OutputEntry>,
    #[serde(default)]
    pub treatments: Vec<TreatmentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt: Option<RtEntry>,
}

/// Parsed input: the system (if treatments were given) and RT data.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub design: Design,
    pub system: Option<System>,
    pub rt: Option<RtSystem>,
}

pub fn parse_str(text: &str, eps_prob: f64) -> Result<Parsed, InputError> {
    let file: SystemFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => return fail(format!("line {}, column {}: {}", e.line(), e.column(), e)),
    };
    from_file(&file, eps_prob)
}

fn parse_prob(p: &Prob, at: &str) -> Result<f64, String> {
    let x = match p {
        Prob::Number(x) => *x,
        Prob::Text(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("{}: '{}' is not a probability", at, s))?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{}: probability is not finite", at))
    }
}

fn design_of(file: &SystemFile) -> Result<Design, InputError> {
    let mut errors = Vec::new();
    let inputs: Vec<InputSpec> = file
        .inputs
        .iter()
        .map(|i| InputSpec::new(i.name.clone(), i.levels.iter().map(Label::text)))
        .collect();
    let outputs: Vec<OutputSpec> = file
        .outputs
        .iter()
        .map(|o| {
            let values = o
                .values
                .iter()
                .map(|v| match v {
                    ValueEntry::Full { label, numeric } => OutputValue {
                        label: label.text(),
                        numeric: *numeric,
                    },
                    ValueEntry::Bare(Label::Text(s)) => OutputValue::labelled(s.clone()),
                    ValueEntry::Bare(Label::Number(n)) => OutputValue {
                        label: n.to_string(),
                        numeric: n.as_f64(),
                    },
                })
                .collect();
            OutputSpec::new(o.name.clone(), values)
        })
        .collect();
    for (i, input) in inputs.iter().enumerate() {
        if inputs[..i].iter().any(|j| j.name == input.name) {
            errors.push(format!("inputs[{}]: name {} is used twice", i, input.name));
        }
    }
    let mut treatments = Vec::with_capacity(file.treatments.len());
    for (t, entry) in file.treatments.iter().enumerate() {
        let mut levels = Vec::with_capacity(inputs.len());
        for input in &inputs {
            match entry.levels.get(&input.name) {
                None => errors.push(format!("treatments[{}].levels: no level for input {}", t, input.name)),
                Some(l) => match input.levels.iter().position(|x| *x == l.text()) {
                    Some(i) => levels.push(i),
                    None => errors.push(format!(
                        "treatments[{}].levels.{}: input {} has no level '{}'",
                        t,
                        input.name,
                        input.name,
                        l.text()
                    )),
                },
            }
        }
        for name in entry.levels.keys() {
            if !inputs.iter().any(|i| &i.name == name) {
                errors.push(format!("treatments[{}].levels: unknown input {}", t, name));
            }
        }
        treatments.push(Treatment(levels));
    }
    if errors.is_empty() {
        Ok(Design::new(inputs, outputs, treatments))
    } else {
        Err(InputError(errors))
    }
}

pub fn from_file(file: &SystemFile, eps_prob: f64) -> Result<Parsed, InputError> {
    let design = design_of(file)?;
    let rt = match &file.rt {
        None => None,
        Some(entry) => Some(rt_of(&design, entry)?),
    };
    if file.treatments.is_empty() {
        if rt.is_some() {
            return Ok(Parsed { design, system: None, rt });
        }
        return fail("treatments: at least one allowable treatment is required");
    }
    let mut errors = Vec::new();
    let dims = design.value_counts();
    let mut distributions = Vec::with_capacity(file.treatments.len());
    for (t, entry) in file.treatments.iter().enumerate() {
        let mut pmf = match JointPmf::zeros(dims.clone()) {
            Ok(p) => p,
            Err(e) => return fail(format!("outputs: {}", e)),
        };
        let mut seen = vec![false; pmf.len()];
        for (e, mass) in entry.pmf.iter().enumerate() {
            let at = format!("treatments[{}].pmf[{}]", t, e);
            if mass.tuple.len() != design.n() {
                errors.push(format!("{}.tuple: expected {} labels, got {}", at, design.n(), mass.tuple.len()));
                continue;
            }
            let mut tuple = Vec::with_capacity(design.n());
            for (k, label) in mass.tuple.iter().enumerate() {
                match design.outputs.get(k).and_then(|o| o.value_index(&label.text())) {
                    Some(v) => tuple.push(v),
                    None => errors.push(format!(
                        "{}.tuple[{}]: output {} has no value '{}'",
                        at,
                        k,
                        design.outputs.get(k).map_or("?", |o| o.name.as_str()),
                        label.text()
                    )),
                }
            }
            if tuple.len() != design.n() {
                continue;
            }
            let p = match parse_prob(&mass.p, &format!("{}.p", at)) {
                Ok(p) => p,
                Err(msg) => {
                    errors.push(msg);
                    continue;
                }
            };
            let idx = pmf.index_of(&tuple).expect("labels resolved");
            if seen[idx] {
                errors.push(format!("{}: tuple listed twice", at));
            }
            seen[idx] = true;
            pmf.masses_mut()[idx] = p;
        }
        distributions.push(pmf);
    }
    if !errors.is_empty() {
        return Err(InputError(errors));
    }
    let system = System::new(design.clone(), distributions)
        .validated(eps_prob)
        .map_err(InputError)?;
    Ok(Parsed {
        design,
        system: Some(system),
        rt,
    })
}

fn rt_of(design: &Design, entry: &RtEntry) -> Result<RtSystem, InputError> {
    if design.n() != 2 || design.level_counts() != [2, 2] {
        return fail("rt: response-time data needs exactly two inputs with two levels each");
    }
    let mut cdfs: [[Vec<f64>; 2]; 2] = Default::default();
    let mut found = [[false; 2]; 2];
    for (key, values) in &entry.cdfs {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        let idx = match parts.as_slice() {
            [a, b] => design.inputs[0]
                .levels
                .iter()
                .position(|l| l == a)
                .zip(design.inputs[1].levels.iter().position(|l| l == b)),
            _ => None,
        };
        let Some((i, j)) = idx else {
            return fail(format!("rt.cdfs.{}: key must name a level of each input, as \"i,j\"", key));
        };
        cdfs[i][j] = values.clone();
        found[i][j] = true;
    }
    for (i, row) in found.iter().enumerate() {
        for (j, &ok) in row.iter().enumerate() {
            if !ok {
                return fail(format!(
                    "rt.cdfs: missing \"{},{}\"",
                    design.inputs[0].levels[i], design.inputs[1].levels[j]
                ));
            }
        }
    }
    RtSystem::new(entry.grid.clone(), cdfs, 1e-9).map_err(|e| InputError(vec![format!("rt: {}", e)]))
}

/// The file form of a system, listing every tuple with nonzero mass.
pub fn to_file(system: &System, rt: Option<&RtSystem>) -> SystemFile {
    let d = &system.design;
    let inputs = d
        .inputs
        .iter()
        .map(|i| InputEntry {
            name: i.name.clone(),
            levels: i.levels.iter().cloned().map(Label::Text).collect(),
        })
        .collect();
    let outputs = d
        .outputs
        .iter()
        .map(|o| OutputEntry {
            name: o.name.clone(),
            values: o
                .values
                .iter()
                .map(|v| ValueEntry::Full {
                    label: Label::Text(v.label.clone()),
                    numeric: v.numeric,
                })
                .collect(),
        })
        .collect();
    let treatments = d
        .treatments
        .iter()
        .zip(&system.distributions)
        .map(|(t, pmf)| TreatmentEntry {
            levels: d
                .inputs
                .iter()
                .zip(&t.0)
                .map(|(i, &l)| (i.name.clone(), Label::Text(i.levels[l].clone())))
                .collect(),
            pmf: pmf
                .iter()
                .filter(|(_, p)| *p != 0.0)
                .map(|(tuple, p)| MassEntry {
                    tuple: tuple
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| Label::Text(d.outputs[k].values[v].label.clone()))
                        .collect(),
                    p: Prob::Number(p),
                })
                .collect(),
        })
        .collect();
    let rt = rt.map(|rt| RtEntry {
        grid: rt.grid.clone(),
        cdfs: (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| {
                (
                    format!("{},{}", d.inputs[0].levels[i], d.inputs[1].levels[j]),
                    rt.cdfs[i][j].clone(),
                )
            })
            .collect(),
    });
    SystemFile {
        inputs,
        outputs,
        treatments,
        rt,
    }
}

pub fn to_json(system: &System, rt: Option<&RtSystem>) -> String {
    serde_json::to_string_pretty(&to_file(system, rt)).expect("system file serializes")
}
