//! Canonical-form data model: inputs paired one-to-one with random outputs,
//! the allowable treatments, and one joint pmf of the outputs per treatment.
//!
//! Everything is addressed by declaration order. Level `l` of input `k` is
//! `inputs[k].levels[l]`, value `v` of output `k` is `outputs[k].values[v]`,
//! and a treatment is the vector of level indices, one per input.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{usage, Result};
use crate::pmf::JointPmf;

/// Default tolerance on probability masses.
pub const EPS_PROB: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub name: String,
    pub levels: Vec<String>,
}

impl InputSpec {
    pub fn new<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        InputSpec {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputValue {
    pub label: String,
    pub numeric: Option<f64>,
}

impl OutputValue {
    pub fn labelled(label: impl Into<String>) -> Self {
        OutputValue {
            label: label.into(),
            numeric: None,
        }
    }

    /// A value whose label is the decimal rendering of its payload.
    pub fn number(x: f64) -> Self {
        let mut label = String::new();
        let _ = write!(label, "{}", x);
        OutputValue {
            label,
            numeric: Some(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub name: String,
    pub values: Vec<OutputValue>,
}

impl OutputSpec {
    pub fn new(name: impl Into<String>, values: Vec<OutputValue>) -> Self {
        OutputSpec {
            name: name.into(),
            values,
        }
    }

    /// An output whose values are the given numbers, labelled by themselves.
    pub fn numeric(name: impl Into<String>, values: &[f64]) -> Self {
        OutputSpec::new(name, values.iter().map(|&x| OutputValue::number(x)).collect())
    }

    pub fn labelled<S: Into<String>>(name: impl Into<String>, labels: impl IntoIterator<Item = S>) -> Self {
        OutputSpec::new(name, labels.into_iter().map(OutputValue::labelled).collect())
    }

    /// Numeric payloads of all values, or `None` if any value lacks one.
    pub fn payloads(&self) -> Option<Vec<f64>> {
        self.values.iter().map(|v| v.numeric).collect()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v.label == label)
    }
}

/// One level index per input, in input order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Treatment(pub Vec<usize>);

impl Treatment {
    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn level(&self, input: usize) -> usize {
        self.0[input]
    }
}

impl From<Vec<usize>> for Treatment {
    fn from(levels: Vec<usize>) -> Self {
        Treatment(levels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub inputs: Vec<InputSpec>,
    pub outputs: Vec<OutputSpec>,
    pub treatments: Vec<Treatment>,
}

impl Design {
    pub fn new(inputs: Vec<InputSpec>, outputs: Vec<OutputSpec>, treatments: Vec<Treatment>) -> Self {
        Design {
            inputs,
            outputs,
            treatments,
        }
    }

    /// All combinations of levels, in lexicographic order.
    pub fn fully_crossed(inputs: Vec<InputSpec>, outputs: Vec<OutputSpec>) -> Self {
        let dims: Vec<usize> = inputs.iter().map(|i| i.levels.len()).collect();
        let treatments = crate::pmf::TupleIter::new(&dims).map(Treatment).collect();
        Design::new(inputs, outputs, treatments)
    }

    /// Number of input/output pairs.
    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.inputs.iter().map(|i| i.levels.len()).collect()
    }

    pub fn value_counts(&self) -> Vec<usize> {
        self.outputs.iter().map(|o| o.values.len()).collect()
    }

    pub fn treatment_index(&self, treatment: &Treatment) -> Option<usize> {
        self.treatments.iter().position(|t| t == treatment)
    }

    /// Indices of treatments that set every listed `(input, level)` pair.
    pub fn treatments_containing<'a>(
        &'a self,
        pairs: &'a [(usize, usize)],
    ) -> impl Iterator<Item = usize> + 'a {
        self.treatments
            .iter()
            .enumerate()
            .filter(move |(_, t)| pairs.iter().all(|&(k, l)| t.0.get(k) == Some(&l)))
            .map(|(i, _)| i)
    }

    /// True when the allowable treatments are exactly the product of all levels.
    pub fn is_fully_crossed(&self) -> bool {
        let full: usize = self.level_counts().iter().product();
        let mut seen: Vec<&Treatment> = self.treatments.iter().collect();
        seen.sort();
        seen.dedup();
        seen.len() == self.treatments.len()
            && seen.len() == full
            && self.treatments.iter().all(|t| self.treatment_is_declared(t))
    }

    fn treatment_is_declared(&self, t: &Treatment) -> bool {
        t.0.len() == self.n() && t.0.iter().zip(&self.inputs).all(|(&l, i)| l < i.levels.len())
    }

    /// Human-readable label such as `(lambda1=1, lambda2=2)`.
    pub fn treatment_label(&self, t: &Treatment) -> String {
        let mut s = String::from("(");
        for (k, &l) in t.0.iter().enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            let name = self.inputs.get(k).map_or("?", |i| i.name.as_str());
            let level = self
                .inputs
                .get(k)
                .and_then(|i| i.levels.get(l))
                .map_or("?", |s| s.as_str());
            let _ = write!(s, "{}={}", name, level);
        }
        s.push(')');
        s
    }

    pub fn level_label(&self, input: usize, level: usize) -> String {
        format!("{}={}", self.inputs[input].name, self.inputs[input].levels[level])
    }
}

/// A design together with the observed joint pmf at every allowable treatment.
///
/// `distributions[i]` belongs to `design.treatments[i]` and ranges over
/// output-value tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub design: Design,
    pub distributions: Vec<JointPmf>,
}

impl System {
    pub fn new(design: Design, distributions: Vec<JointPmf>) -> Self {
        System {
            design,
            distributions,
        }
    }

    /// Builds a system from row-major mass tables, one per treatment.
    pub fn from_tables(design: Design, tables: Vec<Vec<f64>>) -> Result<Self> {
        let dims = design.value_counts();
        let distributions = tables
            .into_iter()
            .map(|t| JointPmf::new(dims.clone(), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(System::new(design, distributions))
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn pmf(&self, treatment: usize) -> &JointPmf {
        &self.distributions[treatment]
    }

    /// Validates and clips tiny negative masses, or reports every violation.
    pub fn validated(mut self, eps_prob: f64) -> core::result::Result<System, Vec<String>> {
        let violations = validate_system(&self, eps_prob);
        if !violations.is_empty() {
            return Err(violations);
        }
        for pmf in &mut self.distributions {
            pmf.clip_negative(eps_prob);
        }
        Ok(self)
    }
}

/// Every violated design or pmf invariant; empty means the system is valid.
pub fn validate_system(system: &System, eps_prob: f64) -> Vec<String> {
    let design = &system.design;
    let mut out = Vec::new();
    if design.inputs.len() != design.outputs.len() {
        out.push(format!(
            "{} inputs but {} outputs; the canonical form pairs them one-to-one",
            design.inputs.len(),
            design.outputs.len()
        ));
    }
    for input in &design.inputs {
        if input.levels.is_empty() {
            out.push(format!("input {} has no levels", input.name));
        }
        for (i, l) in input.levels.iter().enumerate() {
            if input.levels[..i].contains(l) {
                out.push(format!("input {} declares level {} twice", input.name, l));
            }
        }
    }
    for output in &design.outputs {
        if output.values.is_empty() {
            out.push(format!("output {} has no values", output.name));
        }
        for (i, v) in output.values.iter().enumerate() {
            if output.values[..i].iter().any(|w| w.label == v.label) {
                out.push(format!("output {} declares value {} twice", output.name, v.label));
            }
            if let Some(x) = v.numeric {
                if !x.is_finite() {
                    out.push(format!("output {} value {} has a non-finite payload", output.name, v.label));
                }
            }
        }
    }
    if design.treatments.is_empty() {
        out.push(String::from("no allowable treatments"));
    }
    for (i, t) in design.treatments.iter().enumerate() {
        if !design.treatment_is_declared(t) {
            out.push(format!(
                "treatment #{} {:?} assigns an undeclared level or has the wrong length",
                i + 1,
                t.0
            ));
        } else if design.treatments[..i].contains(t) {
            out.push(format!("treatment {} is listed twice", design.treatment_label(t)));
        }
    }
    if system.distributions.len() != design.treatments.len() {
        out.push(format!(
            "{} treatments but {} distributions",
            design.treatments.len(),
            system.distributions.len()
        ));
    }
    let dims = design.value_counts();
    for (t, pmf) in design.treatments.iter().zip(&system.distributions) {
        let label = design.treatment_label(t);
        if pmf.dims() != dims.as_slice() {
            out.push(format!(
                "pmf at {} ranges over {:?}, expected {:?}",
                label,
                pmf.dims(),
                dims
            ));
            continue;
        }
        for v in pmf.violations(eps_prob) {
            out.push(format!("{}: {}", label, v));
        }
    }
    out
}

/// A latent source `R` with pmf `latent` and response tables
/// `responses[k][level][r]`, the index of the value of output `k` produced
/// when input `k` is at `level` and `R` takes its `r`-th value.
///
/// `r` indexes the cells of `latent` in lexicographic order, so a latent
/// with several coordinates (a common source plus specific sources, say)
/// is handled the same way as a scalar one.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub latent: JointPmf,
    pub responses: Vec<Vec<Vec<usize>>>,
}

impl LatentModel {
    pub fn new(latent: JointPmf, responses: Vec<Vec<Vec<usize>>>) -> Self {
        LatentModel { latent, responses }
    }

    pub fn latent_size(&self) -> usize {
        self.latent.len()
    }

    /// Checks that every table is total over the design's levels and latent
    /// values and maps into declared output values.
    pub fn check_against(&self, design: &Design) -> Result<()> {
        if self.responses.len() != design.n() {
            return Err(usage(format!(
                "latent model has {} response functions for {} outputs",
                self.responses.len(),
                design.n()
            )));
        }
        let size = self.latent_size();
        for (k, table) in self.responses.iter().enumerate() {
            let input = &design.inputs[k];
            let output = &design.outputs[k];
            if table.len() != input.levels.len() {
                return Err(usage(format!(
                    "response function {} covers {} levels, input {} has {}",
                    k + 1,
                    table.len(),
                    input.name,
                    input.levels.len()
                )));
            }
            for (l, row) in table.iter().enumerate() {
                if row.len() != size {
                    return Err(usage(format!(
                        "response function {} at level {} covers {} latent values, expected {}",
                        k + 1,
                        input.levels[l],
                        row.len(),
                        size
                    )));
                }
                if let Some(r) = row.iter().position(|&v| v >= output.values.len()) {
                    return Err(usage(format!(
                        "response function {} at level {} maps latent value {} outside output {}",
                        k + 1,
                        input.levels[l],
                        r,
                        output.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The system induced by a latent model: at each treatment, the pmf of
/// `(f_1(level_1, R), …, f_n(level_n, R))` by exact enumeration over `R`.
pub fn generate_system(design: &Design, model: &LatentModel) -> Result<System> {
    model.check_against(design)?;
    let dims = design.value_counts();
    let mut distributions = Vec::with_capacity(design.treatments.len());
    let mut tuple = alloc::vec![0; design.n()];
    for t in &design.treatments {
        if !design.treatment_is_declared(t) {
            return Err(usage(format!("treatment {:?} assigns an undeclared level", t.0)));
        }
        let mut pmf = JointPmf::zeros(dims.clone())?;
        for (r, &p) in model.latent.masses().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (k, slot) in tuple.iter_mut().enumerate() {
                *slot = model.responses[k][t.0[k]][r];
            }
            let idx = pmf.index_of(&tuple).expect("checked response range");
            pmf.masses_mut()[idx] += p;
        }
        distributions.push(pmf);
    }
    Ok(System::new(design.clone(), distributions))
}
