//! Input-value-specific transformations `B^k = g_k(lambda^k, A^k)`.
//!
//! Selective influences survive any such transformation, so a necessary
//! test that is not invariant under them can be rerun on a battery of
//! transformed systems; a failure on any member rules the original out.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{usage, Result};
use crate::model::{Design, OutputSpec, OutputValue, System};
use crate::pmf::JointPmf;
use crate::report::{Evidence, TestKind, TestReport, Verdict};

/// New output specs plus, for every output and level of its input, a map
/// from old value index to new value index.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub name: String,
    pub outputs: Vec<OutputSpec>,
    /// `maps[k][level][old] = new`.
    pub maps: Vec<Vec<Vec<usize>>>,
}

impl TransformSpec {
    pub fn new(name: impl Into<String>, outputs: Vec<OutputSpec>, maps: Vec<Vec<Vec<usize>>>) -> Self {
        TransformSpec {
            name: name.into(),
            outputs,
            maps,
        }
    }

    /// The same map at every level of each input.
    pub fn level_independent(
        name: impl Into<String>,
        design: &Design,
        outputs: Vec<OutputSpec>,
        maps: Vec<Vec<usize>>,
    ) -> Self {
        let maps = maps
            .into_iter()
            .zip(design.level_counts())
            .map(|(map, m)| vec![map; m])
            .collect();
        TransformSpec::new(name, outputs, maps)
    }

    pub fn identity(design: &Design) -> Self {
        let maps = design
            .value_counts()
            .into_iter()
            .map(|v| (0..v).collect())
            .collect();
        TransformSpec::level_independent("identity", design, design.outputs.clone(), maps)
    }

    /// Checks that the spec is total over `design` and maps into the new values.
    pub fn check_against(&self, design: &Design) -> Result<()> {
        if self.outputs.len() != design.n() || self.maps.len() != design.n() {
            return Err(usage(format!(
                "transform {} must cover all {} outputs",
                self.name,
                design.n()
            )));
        }
        for (k, per_level) in self.maps.iter().enumerate() {
            let old = &design.outputs[k];
            let new = &self.outputs[k];
            if new.values.is_empty() {
                return Err(usage(format!("transform {}: output {} has no target values", self.name, new.name)));
            }
            if per_level.len() != design.inputs[k].levels.len() {
                return Err(usage(format!(
                    "transform {}: output {} needs one map per level of input {}",
                    self.name, old.name, design.inputs[k].name
                )));
            }
            for (l, map) in per_level.iter().enumerate() {
                if map.len() != old.values.len() {
                    return Err(usage(format!(
                        "transform {}: map for {} at {} leaves values unmapped",
                        self.name,
                        old.name,
                        design.level_label(k, l)
                    )));
                }
                if let Some(v) = map.iter().position(|&t| t >= new.values.len()) {
                    return Err(usage(format!(
                        "transform {}: value {} of {} maps outside the target values",
                        self.name, old.values[v].label, old.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Pushes each treatment's pmf forward through the maps its levels select.
pub fn apply_transform(system: &System, spec: &TransformSpec) -> Result<System> {
    let design = &system.design;
    spec.check_against(design)?;
    let dims: Vec<usize> = spec.outputs.iter().map(|o| o.values.len()).collect();
    let mut distributions = Vec::with_capacity(system.distributions.len());
    let mut target = vec![0; design.n()];
    for (t, pmf) in design.treatments.iter().zip(&system.distributions) {
        let mut out = JointPmf::zeros(dims.clone())?;
        for (tuple, mass) in pmf.iter() {
            for (k, slot) in target.iter_mut().enumerate() {
                *slot = spec.maps[k][t.level(k)][tuple[k]];
            }
            let idx = out.index_of(&target).expect("checked targets");
            out.masses_mut()[idx] += mass;
        }
        distributions.push(out);
    }
    let new_design = Design::new(design.inputs.clone(), spec.outputs.clone(), design.treatments.clone());
    Ok(System::new(new_design, distributions))
}

/// Runs `test` on every transformed system. The battery rules selective
/// influences out if any member does.
pub fn battery<F>(system: &System, specs: &[TransformSpec], test: F) -> Result<TestReport>
where
    F: Fn(&System) -> Result<TestReport>,
{
    if specs.is_empty() {
        return Ok(TestReport::new(
            TestKind::Battery,
            Verdict::Consistent,
            "empty battery",
            Evidence::Battery(Vec::new()),
        )
        .with_note("no transforms supplied; the battery is vacuous"));
    }
    let mut members = Vec::with_capacity(specs.len());
    for spec in specs {
        let transformed = apply_transform(system, spec)?;
        let mut report = test(&transformed)?;
        report.summary = format!("[{}] {}", spec.name, report.summary);
        members.push(report);
    }
    let failed: Vec<&str> = specs
        .iter()
        .zip(&members)
        .filter(|(_, r)| r.verdict == Verdict::RuledOut)
        .map(|(s, _)| s.name.as_str())
        .collect();
    let applicable = members.iter().filter(|r| r.verdict != Verdict::Inapplicable).count();
    let (verdict, summary) = if !failed.is_empty() {
        (
            Verdict::RuledOut,
            format!("{} of {} transforms rule out: {}", failed.len(), specs.len(), failed.join(", ")),
        )
    } else if applicable == 0 {
        (Verdict::Inapplicable, format!("the test applies to none of {} transforms", specs.len()))
    } else {
        (
            Verdict::Consistent,
            format!("consistent under {} of {} transforms ({} inapplicable)", applicable, specs.len(), specs.len() - applicable),
        )
    };
    Ok(TestReport::new(TestKind::Battery, verdict, summary, Evidence::Battery(members)))
}

fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
    v
}

fn random_onto(rng: &mut ChaCha8Rng, from: usize, to: usize) -> Vec<usize> {
    let order = shuffled(rng, from);
    let mut map = vec![0; from];
    for (pos, &v) in order.iter().enumerate() {
        map[v] = if pos < to { pos } else { rng.gen_range(0..to) };
    }
    map
}

/// `count` random groupings. Each output with `v >= 3` values is merged into
/// `2..v` groups, with an independent onto map at every level; other outputs
/// are left alone. Numeric outputs get group indices as payloads.
pub fn random_groupings(design: &Design, count: usize, seed: u64) -> Vec<TransformSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = design.level_counts();
    (0..count)
        .map(|c| {
            let mut outputs = Vec::with_capacity(design.n());
            let mut maps = Vec::with_capacity(design.n());
            for (k, out) in design.outputs.iter().enumerate() {
                let v = out.values.len();
                if v < 3 {
                    outputs.push(out.clone());
                    maps.push(vec![(0..v).collect(); m[k]]);
                    continue;
                }
                let g = rng.gen_range(2..v);
                let values = if out.payloads().is_some() {
                    (0..g).map(|i| OutputValue::number(i as f64)).collect()
                } else {
                    (0..g).map(|i| OutputValue::labelled(format!("g{}", i + 1))).collect()
                };
                outputs.push(OutputSpec::new(out.name.clone(), values));
                maps.push((0..m[k]).map(|_| random_onto(&mut rng, v, g)).collect());
            }
            TransformSpec::new(format!("grouping-{}", c + 1), outputs, maps)
        })
        .collect()
}

/// `count` random strictly increasing relabelings of numeric payloads.
/// Outputs without payloads are left alone.
pub fn random_monotone_relabelings(design: &Design, count: usize, seed: u64) -> Vec<TransformSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|c| {
            let outputs = design
                .outputs
                .iter()
                .map(|out| {
                    let Some(xs) = out.payloads() else {
                        return out.clone();
                    };
                    let mut order: Vec<usize> = (0..xs.len()).collect();
                    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
                    let mut ys = vec![0.0; xs.len()];
                    let mut acc: f64 = 0.0;
                    for (pos, &i) in order.iter().enumerate() {
                        if pos > 0 && xs[i] != xs[order[pos - 1]] {
                            acc += rng.gen_range(0.25..4.0);
                        }
                        ys[i] = acc;
                    }
                    let values = out
                        .values
                        .iter()
                        .zip(&ys)
                        .map(|(v, &y)| OutputValue {
                            label: v.label.clone(),
                            numeric: Some(y),
                        })
                        .collect();
                    OutputSpec::new(out.name.clone(), values)
                })
                .collect();
            let maps = design.value_counts().into_iter().map(|v| (0..v).collect()).collect();
            TransformSpec::level_independent(format!("monotone-{}", c + 1), design, outputs, maps)
        })
        .collect()
}

/// `count` random bijective relabelings, the same permutation at every level.
pub fn random_permutations(design: &Design, count: usize, seed: u64) -> Vec<TransformSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|c| {
            let mut outputs = Vec::with_capacity(design.n());
            let mut maps = Vec::with_capacity(design.n());
            for out in &design.outputs {
                let perm = shuffled(&mut rng, out.values.len());
                let mut values = out.values.clone();
                for (old, &new) in perm.iter().enumerate() {
                    values[new] = out.values[old].clone();
                }
                outputs.push(OutputSpec::new(out.name.clone(), values));
                maps.push(perm);
            }
            TransformSpec::level_independent(format!("permutation-{}", c + 1), design, outputs, maps)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InputSpec;

    fn system() -> System {
        let design = Design::fully_crossed(
            vec![InputSpec::new("a", ["1", "2"])],
            vec![OutputSpec::numeric("A", &[0.0, 1.0, 5.0])],
        );
        System::from_tables(design, vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]]).unwrap()
    }

    #[test]
    fn identity_transform_is_identity() {
        let s = system();
        assert_eq!(apply_transform(&s, &TransformSpec::identity(&s.design)).unwrap(), s);
    }

    #[test]
    fn unmapped_value_is_a_usage_error() {
        let s = system();
        let spec = TransformSpec::level_independent("short", &s.design, s.design.outputs.clone(), vec![vec![0, 1]]);
        assert!(apply_transform(&s, &spec).is_err());
    }

    #[test]
    fn generators_are_seeded() {
        let s = system();
        assert_eq!(random_groupings(&s.design, 5, 7), random_groupings(&s.design, 5, 7));
        assert_eq!(
            random_monotone_relabelings(&s.design, 5, 7),
            random_monotone_relabelings(&s.design, 5, 7)
        );
        for spec in random_groupings(&s.design, 20, 3) {
            let t = apply_transform(&s, &spec).unwrap();
            for pmf in &t.distributions {
                assert!((pmf.total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monotone_relabeling_preserves_order() {
        let s = system();
        for spec in random_monotone_relabelings(&s.design, 10, 1) {
            let ys = spec.outputs[0].payloads().unwrap();
            assert!(ys[0] < ys[1] && ys[1] < ys[2]);
        }
    }

    #[test]
    fn empty_battery_passes_with_note() {
        let r = battery(&system(), &[], |_| unreachable!()).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        assert_eq!(r.notes.len(), 1);
    }
}
