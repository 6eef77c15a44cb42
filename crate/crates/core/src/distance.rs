//! Chain-inequality tests built from pseudo-quasi-metrics on outputs.
//!
//! Under selective influences the coupling variables `H^k_l` are jointly
//! distributed, so any p.q.-metric `d` on them satisfies
//! `d(x_1, x_L) <= d(x_1, x_2) + … + d(x_{L-1}, x_L)` for every sequence of
//! coupling coordinates. When every consecutive pair and the closing pair
//! co-occur in some allowable treatment, both sides are observable.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{inapplicable, usage, Error, Result};
use crate::marginal::check_marginal_selectivity;
use crate::model::{Design, System};
use crate::pmf::JointPmf;
use crate::report::{Evidence, TestKind, TestReport, Verdict};

/// Default bound on sequence length for designs that are not fully crossed.
pub const DEFAULT_MAX_LENGTH: usize = 6;

/// A coupling coordinate `H^input_level`.
pub type Node = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    /// `d_p(X, Y) = sum over x < y of |x - y|^p Pr(X = x, Y = y)`, `0 <= p <= 1`.
    Power { p: f64 },
    /// `d(X, Y) = sum over i < i' of Pr(X in S^i, Y in S^i')`.
    ///
    /// `partitions[k]` is an ordered list of classes of value indices of
    /// output `k`; class order is what the metric compares.
    Classification { partitions: Vec<Vec<Vec<usize>>> },
}

impl MetricSpec {
    pub fn power(p: f64) -> Self {
        MetricSpec::Power { p }
    }

    pub fn label(&self) -> String {
        match self {
            MetricSpec::Power { p } => format!("power(p={})", p),
            MetricSpec::Classification { .. } => String::from("classification"),
        }
    }
}

/// What a metric needs from each output, resolved once per system.
enum Coding {
    Power { p: f64, payloads: Vec<Vec<f64>> },
    Class { classes: Vec<Vec<usize>> },
}

fn resolve(system: &System, metric: &MetricSpec) -> Result<Coding> {
    let outputs = &system.design.outputs;
    match metric {
        MetricSpec::Power { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(usage(format!("power metric needs 0 <= p <= 1, got {}", p)));
            }
            let payloads = outputs
                .iter()
                .map(|o| {
                    o.payloads()
                        .ok_or_else(|| inapplicable(format!("output {} has values without numeric payloads", o.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Coding::Power { p: *p, payloads })
        }
        MetricSpec::Classification { partitions } => {
            if partitions.len() != outputs.len() {
                return Err(usage(format!(
                    "classification needs one partition per output ({} given, {} outputs)",
                    partitions.len(),
                    outputs.len()
                )));
            }
            let mut classes = Vec::with_capacity(outputs.len());
            for (o, partition) in outputs.iter().zip(partitions) {
                classes.push(class_map(partition, o.values.len()).map_err(|e| usage(format!("output {}: {}", o.name, e)))?);
            }
            Ok(Coding::Class { classes })
        }
    }
}

/// Class index of every value, checking that `partition` covers `0..values`
/// disjointly with at least two nonempty classes.
pub fn class_map(partition: &[Vec<usize>], values: usize) -> core::result::Result<Vec<usize>, String> {
    if partition.len() < 2 {
        return Err(String::from("a partition needs at least two classes"));
    }
    let mut map = vec![usize::MAX; values];
    for (c, class) in partition.iter().enumerate() {
        if class.is_empty() {
            return Err(format!("class {} is empty", c + 1));
        }
        for &v in class {
            match map.get_mut(v) {
                None => return Err(format!("value index {} is out of range", v)),
                Some(slot) if *slot != usize::MAX => return Err(format!("value index {} appears twice", v)),
                Some(slot) => *slot = c,
            }
        }
    }
    if let Some(v) = map.iter().position(|&c| c == usize::MAX) {
        return Err(format!("value index {} is in no class", v));
    }
    Ok(map)
}

/// `d_p` from a two-variable pmf with payloads `xs` and `ys`.
pub fn power_distance(pmf: &JointPmf, xs: &[f64], ys: &[f64], p: f64) -> f64 {
    let mut d = 0.0;
    for (t, mass) in pmf.iter() {
        let (x, y) = (xs[t[0]], ys[t[1]]);
        if x < y && mass != 0.0 {
            d += libm::pow(y - x, p) * mass;
        }
    }
    d
}

/// Classification distance from a two-variable pmf with class maps.
pub fn class_distance(pmf: &JointPmf, x_class: &[usize], y_class: &[usize]) -> f64 {
    pmf.iter()
        .filter(|(t, _)| x_class[t[0]] < y_class[t[1]])
        .map(|(_, m)| m)
        .sum()
}

fn directed(pmf2: &JointPmf, coding: &Coding, k: usize, k2: usize) -> (f64, f64) {
    let swapped = pmf2.marginalize(&[1, 0]).expect("two-variable pmf");
    match coding {
        Coding::Power { p, payloads } => (
            power_distance(pmf2, &payloads[k], &payloads[k2], *p),
            power_distance(&swapped, &payloads[k2], &payloads[k], *p),
        ),
        Coding::Class { classes } => (
            class_distance(pmf2, &classes[k], &classes[k2]),
            class_distance(&swapped, &classes[k2], &classes[k]),
        ),
    }
}

/// `(d(A^k, A^k2), d(A^k2, A^k))` from the 2-marginal at one treatment.
pub fn pairwise_distance(
    system: &System,
    metric: &MetricSpec,
    treatment: usize,
    k: usize,
    k2: usize,
) -> Result<(f64, f64)> {
    let n = system.n();
    if k >= n || k2 >= n || k == k2 {
        return Err(usage(format!("outputs {} and {} are not two distinct outputs of {}", k, k2, n)));
    }
    if treatment >= system.distributions.len() {
        return Err(usage(format!("treatment index {} out of range", treatment)));
    }
    let coding = resolve(system, metric)?;
    let pmf2 = system.pmf(treatment).marginalize(&[k, k2])?;
    Ok(directed(&pmf2, &coding, k, k2))
}

/// A sequence of coupling coordinates whose chain inequality is observable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSequence {
    pub nodes: Vec<Node>,
    /// Treatments realizing `(nodes[i], nodes[i + 1])`, in declared order.
    pub links: Vec<Vec<usize>>,
    /// Treatments realizing `(nodes[0], nodes[last])`.
    pub closing: Vec<usize>,
}

/// Treatments realizing every pair of coordinates from different inputs.
struct Realizers {
    nodes: Vec<Node>,
    index: BTreeMap<Node, usize>,
    pairs: Vec<Vec<Vec<usize>>>,
}

impl Realizers {
    fn new(design: &Design) -> Self {
        let nodes: Vec<Node> = design
            .inputs
            .iter()
            .enumerate()
            .flat_map(|(k, i)| (0..i.levels.len()).map(move |l| (k, l)))
            .collect();
        let index = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut pairs = vec![vec![Vec::new(); nodes.len()]; nodes.len()];
        for (a, &x) in nodes.iter().enumerate() {
            for (b, &y) in nodes.iter().enumerate() {
                if x.0 != y.0 {
                    pairs[a][b] = design.treatments_containing(&[x, y]).collect();
                }
            }
        }
        Realizers { nodes, index, pairs }
    }

    fn get(&self, x: Node, y: Node) -> &[usize] {
        &self.pairs[self.index[&x]][self.index[&y]]
    }

    fn sequence(&self, nodes: Vec<Node>) -> TestSequence {
        let links = nodes.windows(2).map(|w| self.get(w[0], w[1]).to_vec()).collect();
        let closing = self.get(nodes[0], nodes[nodes.len() - 1]).to_vec();
        TestSequence { nodes, links, closing }
    }
}

/// Sequences whose chain inequalities make up the distance test.
///
/// For a fully crossed design these are the quadruples
/// `(k, j1), (k', j2), (k, j3), (k', j4)` with `k != k'`, `j1 != j3`,
/// `j2 != j4`. Otherwise they are the realizable sequences of length
/// `3..=max_length` with distinct elements and no realizable chord; a
/// sequence with a chord or a repeated element splits into shorter
/// sequences whose inequalities imply its own.
pub fn enumerate_test_sequences(design: &Design, max_length: usize) -> Result<Vec<TestSequence>> {
    if max_length < 3 {
        return Err(usage("sequences need a maximum length of at least 3"));
    }
    let r = Realizers::new(design);
    if design.is_fully_crossed() {
        Ok(crossed_quadruples(design).into_iter().map(|s| r.sequence(s)).collect())
    } else {
        Ok(irreducible_sequences(&r, max_length)
            .into_iter()
            .map(|s| r.sequence(s))
            .collect())
    }
}

fn crossed_quadruples(design: &Design) -> Vec<Vec<Node>> {
    let m = design.level_counts();
    let n = m.len();
    let mut out = Vec::new();
    for k in 0..n {
        for j1 in 0..m[k] {
            for k2 in (0..n).filter(|&k2| k2 != k) {
                for j2 in 0..m[k2] {
                    for j3 in (0..m[k]).filter(|&j| j != j1) {
                        for j4 in (0..m[k2]).filter(|&j| j != j2) {
                            out.push(vec![(k, j1), (k2, j2), (k, j3), (k2, j4)]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Realizable, chordless sequences with distinct elements, in lexicographic order.
pub fn irreducible_sequences_of(design: &Design, max_length: usize) -> Vec<Vec<Node>> {
    irreducible_sequences(&Realizers::new(design), max_length)
}

fn irreducible_sequences(r: &Realizers, max_length: usize) -> Vec<Vec<Node>> {
    let realizable = |a: Node, b: Node| !r.get(a, b).is_empty();
    let mut out = Vec::new();
    let mut path: Vec<Node> = Vec::with_capacity(max_length);

    fn extend(
        r: &Realizers,
        realizable: &dyn Fn(Node, Node) -> bool,
        path: &mut Vec<Node>,
        max_length: usize,
        out: &mut Vec<Vec<Node>>,
    ) {
        let last = *path.last().expect("nonempty path");
        for &next in &r.nodes {
            if path.contains(&next) || next.0 == last.0 || !realizable(last, next) {
                continue;
            }
            let inner = if path.len() > 2 { &path[1..path.len() - 1] } else { &[][..] };
            if inner.iter().any(|&x| realizable(x, next)) {
                continue;
            }
            let closes = realizable(path[0], next);
            path.push(next);
            if closes {
                if path.len() >= 3 {
                    out.push(path.clone());
                } else if path.len() < max_length {
                    extend(r, realizable, path, max_length, out);
                }
            } else if path.len() < max_length {
                extend(r, realizable, path, max_length, out);
            }
            path.pop();
        }
    }

    for &start in &r.nodes {
        path.push(start);
        extend(r, &realizable, &mut path, max_length, &mut out);
        path.pop();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainViolation {
    pub sequence: Vec<Node>,
    /// `d(first, last)`.
    pub lhs: f64,
    /// Sum of link distances.
    pub rhs: f64,
    pub closing_treatment: usize,
    /// Treatment used for each link.
    pub link_treatments: Vec<usize>,
}

/// Evaluates every chain inequality of `enumerate_test_sequences`.
///
/// When a pair is realized by several treatments, the largest closing
/// distance and the smallest link distances are used; under marginal
/// selectivity these coincide with the first realizing treatment's.
pub fn run_distance_test(system: &System, metric: &MetricSpec, max_length: usize, eps_test: f64) -> Result<TestReport> {
    let coding = match resolve(system, metric) {
        Ok(c) => c,
        Err(Error::Inapplicable(why)) => return Ok(TestReport::inapplicable(TestKind::Distance, why)),
        Err(e) => return Err(e),
    };
    let sequences = enumerate_test_sequences(&system.design, max_length)?;
    let n = system.n();
    // dist[t][k][k2] = d(A^k, A^k2) at treatment t.
    let mut dist = vec![vec![vec![0.0; n]; n]; system.distributions.len()];
    for (t, table) in dist.iter_mut().enumerate() {
        for k in 0..n {
            for k2 in k + 1..n {
                let pmf2 = system.pmf(t).marginalize(&[k, k2])?;
                let (a, b) = directed(&pmf2, &coding, k, k2);
                table[k][k2] = a;
                table[k2][k] = b;
            }
        }
    }
    let d = |t: usize, x: Node, y: Node| dist[t][x.0][y.0];
    let pick = |ts: &[usize], x: Node, y: Node, worst_high: bool| -> (usize, f64) {
        let mut best = (ts[0], d(ts[0], x, y));
        for &t in &ts[1..] {
            let v = d(t, x, y);
            if (worst_high && v > best.1) || (!worst_high && v < best.1) {
                best = (t, v);
            }
        }
        best
    };

    let mut worst: Option<(f64, ChainViolation)> = None;
    for s in &sequences {
        let (first, last) = (s.nodes[0], s.nodes[s.nodes.len() - 1]);
        let (closing_treatment, lhs) = pick(&s.closing, first, last, true);
        let mut rhs = 0.0;
        let mut link_treatments = Vec::with_capacity(s.links.len());
        for (w, ts) in s.nodes.windows(2).zip(&s.links) {
            let (t, v) = pick(ts, w[0], w[1], false);
            rhs += v;
            link_treatments.push(t);
        }
        let excess = lhs - rhs;
        if excess > eps_test && worst.as_ref().is_none_or(|(e, _)| excess > *e) {
            worst = Some((
                excess,
                ChainViolation {
                    sequence: s.nodes.clone(),
                    lhs,
                    rhs,
                    closing_treatment,
                    link_treatments,
                },
            ));
        }
    }

    let label = metric.label();
    let count = sequences.len();
    let mut report = match worst {
        None => TestReport::new(
            TestKind::Distance,
            Verdict::Consistent,
            format!("{}: all {} chain inequalities hold", label, count),
            Evidence::Chain {
                sequences_checked: count,
                violation: None,
            },
        ),
        Some((_, v)) => {
            let chain: Vec<String> = v.sequence.iter().map(|&(k, l)| system.design.level_label(k, l)).collect();
            TestReport::new(
                TestKind::Distance,
                Verdict::RuledOut,
                format!("{}: chain [{}] has {} > {}", label, chain.join(", "), v.lhs, v.rhs),
                Evidence::Chain {
                    sequences_checked: count,
                    violation: Some(v),
                },
            )
        }
    };
    if count == 0 {
        report = report.with_note("no realizable sequences; the test is vacuous");
    }
    if !check_marginal_selectivity(system, n.saturating_sub(1), eps_test).pass {
        report = report.with_note(
            "marginal selectivity fails, so link distances depend on the treatment; worst case over realizing treatments used",
        );
    }
    Ok(report)
}
