//! Complete marginal selectivity: for every subset of input/output pairs,
//! the joint distribution of the subset's outputs may depend only on the
//! levels of the subset's inputs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::model::System;
use crate::pmf::JointPmf;
use crate::report::{Evidence, TestKind, TestReport, Verdict};

/// Default tolerance for necessary-condition tests.
pub const EPS_TEST: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    /// Output indices of the worst subset, empty when nothing was comparable.
    pub worst_subset: Vec<usize>,
    /// Treatment indices of the worst pair, in declaration order.
    pub worst_pair: Option<(usize, usize)>,
    /// Largest cellwise difference between two comparable marginals.
    pub discrepancy: f64,
    /// Total variation between the marginals of the worst pair.
    pub total_variation: f64,
    pub subsets_checked: usize,
    pub pairs_compared: usize,
    pub pass: bool,
}

/// Compares, for every output subset of size `1..=max_subset_size`, the
/// subset's marginal pmf across treatments that agree on the subset's input
/// levels, and reports the worst sup-norm discrepancy.
///
/// `max_subset_size` is clamped to `n - 1`; `1` gives the simple test.
pub fn check_marginal_selectivity(system: &System, max_subset_size: usize, eps_test: f64) -> MarginalReport {
    let n = system.n();
    let max = max_subset_size.min(n.saturating_sub(1));
    let mut report = MarginalReport {
        worst_subset: Vec::new(),
        worst_pair: None,
        discrepancy: 0.0,
        total_variation: 0.0,
        subsets_checked: 0,
        pairs_compared: 0,
        pass: true,
    };
    for size in 1..=max {
        for subset in combinations(n, size) {
            report.subsets_checked += 1;
            // Group treatments by their levels on the subset's inputs.
            let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            for (i, t) in system.design.treatments.iter().enumerate() {
                let key = subset.iter().map(|&k| t.level(k)).collect();
                groups.entry(key).or_default().push(i);
            }
            for members in groups.values() {
                if members.len() < 2 {
                    continue;
                }
                report.pairs_compared += members.len() * (members.len() - 1) / 2;
                let marginals: Vec<JointPmf> = members
                    .iter()
                    .map(|&i| system.pmf(i).marginalize(&subset).expect("subset within arity"))
                    .collect();
                // The largest pairwise sup-norm gap is the largest cellwise range.
                for cell in 0..marginals[0].len() {
                    let (mut lo, mut hi) = (0, 0);
                    for (m, pmf) in marginals.iter().enumerate() {
                        let p = pmf.masses()[cell];
                        if p < marginals[lo].masses()[cell] {
                            lo = m;
                        }
                        if p > marginals[hi].masses()[cell] {
                            hi = m;
                        }
                    }
                    let gap = marginals[hi].masses()[cell] - marginals[lo].masses()[cell];
                    if gap > report.discrepancy {
                        let (a, b) = (lo.min(hi), lo.max(hi));
                        report.discrepancy = gap;
                        report.worst_subset = subset.clone();
                        report.worst_pair = Some((members[a], members[b]));
                        report.total_variation = marginals[a].total_variation(&marginals[b]);
                    }
                }
            }
        }
    }
    report.pass = report.discrepancy <= eps_test;
    report
}

pub fn marginal_test(system: &System, max_subset_size: usize, eps_test: f64) -> TestReport {
    let report = check_marginal_selectivity(system, max_subset_size, eps_test);
    let (verdict, summary) = if report.pass {
        (
            Verdict::Consistent,
            format!(
                "marginal selectivity holds over {} subsets (max discrepancy {:e})",
                report.subsets_checked, report.discrepancy
            ),
        )
    } else {
        let (a, b) = report.worst_pair.expect("failing report names a pair");
        let names: Vec<&str> = report
            .worst_subset
            .iter()
            .map(|&k| system.design.outputs[k].name.as_str())
            .collect();
        (
            Verdict::RuledOut,
            format!(
                "marginal of {:?} differs by {} between {} and {}",
                names,
                report.discrepancy,
                system.design.treatment_label(&system.design.treatments[a]),
                system.design.treatment_label(&system.design.treatments[b]),
            ),
        )
    };
    TestReport::new(TestKind::Marginal, verdict, summary, Evidence::Marginal(report))
}

/// `k`-element subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < n - k + i {
                current[i] += 1;
                for j in i + 1..k {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(1, 2).is_empty());
    }

    #[test]
    fn single_treatment_passes_vacuously() {
        use crate::model::{Design, InputSpec, OutputSpec};
        let design = Design::fully_crossed(
            vec![InputSpec::new("a", ["1"]), InputSpec::new("b", ["1"])],
            vec![OutputSpec::labelled("A", ["x", "y"]), OutputSpec::labelled("B", ["x", "y"])],
        );
        let system = System::from_tables(design, vec![vec![0.1, 0.2, 0.3, 0.4]]).unwrap();
        let r = check_marginal_selectivity(&system, 1, EPS_TEST);
        assert!(r.pass);
        assert_eq!(r.discrepancy, 0.0);
        assert_eq!(r.pairs_compared, 0);
    }
}
