//! The linear feasibility test.
//!
//! Selective influences hold for a finite system exactly when there is a
//! joint distribution `Q` of the reduced coupling vector
//! `H = (H^1_1, …, H^1_{m_1}, …, H^n_1, …, H^n_{m_n})`, one variable per
//! input level, whose marginals at every allowable treatment reproduce the
//! observed pmf. Writing the marginal constraints as `M Q = P` with a 0/1
//! matrix `M` turns the question into a linear feasibility problem.
//!
//! Rows of `M` are `(treatment, outcome tuple)` pairs: treatments in
//! declaration order, tuples lexicographic with the first output slowest.
//! Columns are coupling assignments, lexicographic with `H^1_1` slowest.
//! Cell `(I, J)` is 1 iff the values assignment `J` gives to the coupling
//! variables selected by `I`'s treatment equal `I`'s outcome tuple.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{inapplicable, usage, Error, Result};
use crate::marginal::check_marginal_selectivity;
use crate::model::{Design, System};
use crate::pmf::{linear_index, JointPmf, TupleIter};
use crate::report::{Evidence, TestKind, TestReport, Verdict};
use crate::simplex::{phase_one, SimplexOptions, UnitColumns};

/// Default tolerance on LP residuals.
pub const EPS_LP: f64 = 1e-8;
/// Default cap on the number of coupling assignments.
pub const DEFAULT_COLUMN_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowLabel {
    pub treatment: usize,
    pub outcome: Vec<usize>,
}

/// `M` and `P` for one system.
///
/// Every column of `M` has exactly one 1 in each treatment block, so the
/// matrix is stored as the row index of that 1 per block.
#[derive(Debug, Clone)]
pub struct FeasibilitySystem {
    design: Design,
    pub row_labels: Vec<RowLabel>,
    pub p: Vec<f64>,
    cols: usize,
    block_rows: Vec<u32>,
    /// Position of `H^k_1` in a column assignment.
    offsets: Vec<usize>,
}

impl FeasibilitySystem {
    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn blocks(&self) -> usize {
        self.design.treatments.len()
    }

    /// Rows holding a 1 in column `j`, one per treatment block.
    pub fn column_rows(&self, j: usize) -> &[u32] {
        let t = self.blocks();
        &self.block_rows[j * t..(j + 1) * t]
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        let block = self.row_labels[row].treatment;
        u8::from(self.column_rows(col)[block] as usize == row)
    }

    /// The matrix as rows of 0/1 entries.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.cols]; self.rows()];
        for j in 0..self.cols {
            for &i in self.column_rows(j) {
                out[i as usize][j] = 1;
            }
        }
        out
    }

    /// Number of coupling coordinates, `m_1 + … + m_n`.
    pub fn coordinate_count(&self) -> usize {
        self.design.level_counts().iter().sum()
    }

    /// Position of `H^input_level` within a column assignment.
    pub fn coordinate(&self, input: usize, level: usize) -> Option<usize> {
        let m = self.design.inputs.get(input)?.levels.len();
        (level < m).then(|| self.offsets[input] + level)
    }

    /// `(input, level)` for every coupling coordinate, in column-label order.
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        self.design
            .inputs
            .iter()
            .enumerate()
            .flat_map(|(k, i)| (0..i.levels.len()).map(move |l| (k, l)))
            .collect()
    }

    fn coordinate_dims(&self) -> Vec<usize> {
        self.coordinates()
            .into_iter()
            .map(|(k, _)| self.design.outputs[k].values.len())
            .collect()
    }

    /// Output-value index taken by each coupling coordinate in column `j`.
    pub fn column_assignment(&self, j: usize) -> Vec<usize> {
        let dims = self.coordinate_dims();
        let mut out = vec![0; dims.len()];
        let mut rest = j;
        for (slot, &d) in out.iter_mut().zip(&dims).rev() {
            *slot = rest % d;
            rest /= d;
        }
        out
    }

    /// `max |M q - P|`.
    pub fn residual(&self, q: &[f64]) -> f64 {
        let mut mq = vec![0.0; self.rows()];
        for (j, &qj) in q.iter().enumerate() {
            if qj != 0.0 {
                for &i in self.column_rows(j) {
                    mq[i as usize] += qj;
                }
            }
        }
        mq.iter()
            .zip(&self.p)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    /// Checks a candidate `Q` against the witness contract at `eps`, clipping
    /// entries in `[-eps, 0)` to zero.
    pub fn validate_witness(&self, q: &[f64], eps: f64) -> core::result::Result<CouplingWitness, String> {
        if q.len() != self.cols {
            return Err(format!("witness has {} entries, expected {}", q.len(), self.cols));
        }
        if let Some(j) = q.iter().position(|&v| !(v >= -eps)) {
            return Err(format!("witness entry {} is negative ({})", j, q[j]));
        }
        let q: Vec<f64> = q.iter().map(|&v| v.max(0.0)).collect();
        let sum: f64 = q.iter().sum();
        let residual = self.residual(&q);
        if residual > eps {
            return Err(format!("residual |MQ-P| = {:e} exceeds {:e}", residual, eps));
        }
        if libm::fabs(sum - 1.0) > eps {
            return Err(format!("witness sums to {}", sum));
        }
        Ok(CouplingWitness { q, residual, sum })
    }

    pub fn row_label_string(&self, row: usize) -> String {
        let label = &self.row_labels[row];
        let mut s = self
            .design
            .treatment_label(&self.design.treatments[label.treatment]);
        s.push(' ');
        for (k, &v) in label.outcome.iter().enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            let out = &self.design.outputs[k];
            let _ = write!(s, "{}={}", out.name, out.values[v].label);
        }
        s
    }

    /// Plain-text grid of `M`: one header line per coupling coordinate
    /// listing the value it takes in each column, then one line per row.
    pub fn render_grid(&self) -> String {
        let row_labels: Vec<String> = (0..self.rows()).map(|i| self.row_label_string(i)).collect();
        let head_labels: Vec<String> = self
            .coordinates()
            .into_iter()
            .map(|(k, l)| format!("H[{}]", self.design.level_label(k, l)))
            .collect();
        let width = row_labels
            .iter()
            .chain(&head_labels)
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(0);
        let assignments: Vec<Vec<usize>> = (0..self.cols).map(|j| self.column_assignment(j)).collect();
        let cell = assignments
            .iter()
            .flat_map(|a| a.iter().zip(self.coordinates()))
            .map(|(&v, (k, _))| self.design.outputs[k].values[v].label.chars().count())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut out = String::new();
        for (c, head) in head_labels.iter().enumerate() {
            let k = self.coordinates()[c].0;
            let _ = write!(out, "{:>w$} |", head, w = width);
            for a in &assignments {
                let _ = write!(out, " {:>w$}", self.design.outputs[k].values[a[c]].label, w = cell);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{}-+{}", "-".repeat(width), "-".repeat((cell + 1) * self.cols));
        for (i, label) in row_labels.iter().enumerate() {
            let _ = write!(out, "{:>w$} |", label, w = width);
            for j in 0..self.cols {
                let _ = write!(out, " {:>w$}", self.entry(i, j), w = cell);
            }
            out.push('\n');
        }
        out
    }
}

impl UnitColumns for FeasibilitySystem {
    fn rows(&self) -> usize {
        self.row_labels.len()
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn column(&self, j: usize) -> &[u32] {
        self.column_rows(j)
    }
}

pub fn build_feasibility_system(system: &System) -> Result<FeasibilitySystem> {
    build_feasibility_system_with_cap(system, DEFAULT_COLUMN_CAP)
}

pub fn build_feasibility_system_with_cap(system: &System, column_cap: usize) -> Result<FeasibilitySystem> {
    let design = &system.design;
    let values = design.value_counts();
    let levels = design.level_counts();
    if system.distributions.len() != design.treatments.len() {
        return Err(usage("every treatment needs exactly one pmf"));
    }

    let columns: u128 = values
        .iter()
        .zip(&levels)
        .try_fold(1u128, |acc, (&v, &m)| acc.checked_mul((v as u128).checked_pow(m as u32)?))
        .unwrap_or(u128::MAX);
    if columns > column_cap as u128 {
        return Err(Error::Capacity {
            columns,
            cap: column_cap,
        });
    }
    let cols = columns as usize;
    let cells: usize = values.iter().product();
    let t = design.treatments.len();
    if (t * cells) as u64 > u32::MAX as u64 {
        return Err(usage("too many rows for the feasibility matrix"));
    }

    let mut row_labels = Vec::with_capacity(t * cells);
    let mut p = Vec::with_capacity(t * cells);
    for (b, pmf) in system.distributions.iter().enumerate() {
        if pmf.dims() != values.as_slice() {
            return Err(usage(format!("pmf #{} does not range over the output values", b + 1)));
        }
        for (outcome, mass) in pmf.iter() {
            row_labels.push(RowLabel {
                treatment: b,
                outcome,
            });
            p.push(mass);
        }
    }

    let mut offsets = Vec::with_capacity(levels.len());
    let mut acc = 0;
    for &m in &levels {
        offsets.push(acc);
        acc += m;
    }
    let coord_dims: Vec<usize> = levels
        .iter()
        .zip(&values)
        .flat_map(|(&m, &v)| core::iter::repeat(v).take(m))
        .collect();

    let mut block_rows = Vec::with_capacity(cols * t);
    let mut outcome = vec![0; design.n()];
    for assignment in TupleIter::new(&coord_dims) {
        for (b, treatment) in design.treatments.iter().enumerate() {
            for (k, slot) in outcome.iter_mut().enumerate() {
                *slot = assignment[offsets[k] + treatment.level(k)];
            }
            let idx = linear_index(&values, &outcome).expect("assignment within value sets");
            block_rows.push((b * cells + idx) as u32);
        }
    }
    debug_assert_eq!(block_rows.len(), cols * t);

    Ok(FeasibilitySystem {
        design: design.clone(),
        row_labels,
        p,
        cols,
        block_rows,
        offsets,
    })
}

/// A feasible `Q`, aligned with the columns of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingWitness {
    pub q: Vec<f64>,
    /// `max |M Q - P|`.
    pub residual: f64,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpVerdict {
    pub feasible: bool,
    pub witness: Option<CouplingWitness>,
    /// Phase-I optimum: total mass the artificial variables must carry.
    pub infeasibility: f64,
    pub iterations: usize,
}

/// Columns of `M` restricted to rows with positive `P`.
///
/// A row with zero observed mass forces every column touching it to zero,
/// so those columns and rows can be dropped before pivoting.
struct Reduced {
    rows: usize,
    t: usize,
    kept: Vec<usize>,
    block_rows: Vec<u32>,
}

impl UnitColumns for Reduced {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.kept.len()
    }

    fn column(&self, j: usize) -> &[u32] {
        &self.block_rows[j * self.t..(j + 1) * self.t]
    }
}

fn reduce(fs: &FeasibilitySystem) -> (Reduced, Vec<f64>) {
    let mut new_index = vec![u32::MAX; fs.rows()];
    let mut b = Vec::new();
    for (i, &p) in fs.p.iter().enumerate() {
        if p > 0.0 {
            new_index[i] = b.len() as u32;
            b.push(p);
        }
    }
    let t = fs.blocks();
    let mut kept = Vec::new();
    let mut block_rows = Vec::new();
    for j in 0..fs.cols {
        let rows = fs.column_rows(j);
        if rows.iter().all(|&i| new_index[i as usize] != u32::MAX) {
            kept.push(j);
            block_rows.extend(rows.iter().map(|&i| new_index[i as usize]));
        }
    }
    (
        Reduced {
            rows: b.len(),
            t,
            kept,
            block_rows,
        },
        b,
    )
}

/// Decides whether `M Q = P` has a solution `Q >= 0` by phase-I simplex.
pub fn solve_feasibility(fs: &FeasibilitySystem, eps_lp: f64) -> Result<LpVerdict> {
    solve_feasibility_with(fs, eps_lp, &SimplexOptions::default())
}

pub fn solve_feasibility_with(fs: &FeasibilitySystem, eps_lp: f64, opts: &SimplexOptions) -> Result<LpVerdict> {
    if let Some(i) = fs.p.iter().position(|&v| !(v >= -eps_lp)) {
        return Err(usage(format!("observed probability at row {} is negative", i)));
    }
    let (reduced, b) = reduce(fs);
    let sol = phase_one(&reduced, &b, opts)?;
    if sol.objective > eps_lp {
        return Ok(LpVerdict {
            feasible: false,
            witness: None,
            infeasibility: sol.objective,
            iterations: sol.iterations,
        });
    }
    let mut q = vec![0.0; fs.cols];
    for (x, &j) in sol.x.iter().zip(&reduced.kept) {
        q[j] = *x;
    }
    let witness = fs
        .validate_witness(&q, eps_lp)
        .map_err(|e| Error::Numerical(format!("phase one reported feasible but {}", e)))?;
    Ok(LpVerdict {
        feasible: true,
        witness: Some(witness),
        infeasibility: sol.objective,
        iterations: sol.iterations,
    })
}

/// Builds `M`, `P` and runs the linear feasibility test.
pub fn lp_test(system: &System, eps_lp: f64) -> Result<TestReport> {
    let fs = build_feasibility_system(system)?;
    let verdict = solve_feasibility(&fs, eps_lp)?;
    let report = if verdict.feasible {
        let w = verdict.witness.as_ref().expect("feasible verdict carries a witness");
        TestReport::new(
            TestKind::Lp,
            Verdict::Consistent,
            format!(
                "feasible: a coupling over {} assignments reproduces every treatment (residual {:e})",
                fs.cols(),
                w.residual
            ),
            Evidence::Feasibility(verdict),
        )
    } else {
        TestReport::new(
            TestKind::Lp,
            Verdict::RuledOut,
            format!(
                "infeasible: no coupling exists (phase-one optimum {:e})",
                verdict.infeasibility
            ),
            Evidence::Feasibility(verdict),
        )
    };
    Ok(report)
}

/// Joint pmf of the coupling coordinates `which`, each an `(input, level)`
/// pair, under the witness distribution.
pub fn extract_coupling_marginals(
    witness: &CouplingWitness,
    fs: &FeasibilitySystem,
    which: &[(usize, usize)],
) -> Result<JointPmf> {
    if witness.q.len() != fs.cols() {
        return Err(usage("witness does not match this feasibility system"));
    }
    let mut positions = Vec::with_capacity(which.len());
    for (i, &(k, l)) in which.iter().enumerate() {
        let pos = fs
            .coordinate(k, l)
            .ok_or_else(|| usage(format!("coupling coordinate (input {}, level {}) is not in the design", k, l)))?;
        if which[..i].contains(&(k, l)) {
            return Err(usage(format!("coupling coordinate (input {}, level {}) listed twice", k, l)));
        }
        positions.push(pos);
    }
    let dims: Vec<usize> = which
        .iter()
        .map(|&(k, _)| fs.design().outputs[k].values.len())
        .collect();
    let mut pmf = JointPmf::zeros(dims)?;
    let mut tuple = vec![0; which.len()];
    for (j, &qj) in witness.q.iter().enumerate() {
        if qj == 0.0 {
            continue;
        }
        let a = fs.column_assignment(j);
        for (slot, &pos) in tuple.iter_mut().zip(&positions) {
            *slot = a[pos];
        }
        let idx = pmf.index_of(&tuple).expect("assignment in range");
        pmf.masses_mut()[idx] += qj;
    }
    Ok(pmf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FineBound {
    Lower,
    Upper,
}

/// One double inequality `0 <= value <= 1`, for the level pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineValue {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineViolation {
    pub i: usize,
    pub j: usize,
    pub bound: FineBound,
    /// Amount by which the bound is exceeded.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineReport {
    pub values: Vec<FineValue>,
    pub worst: Option<FineViolation>,
    pub pass: bool,
}

/// Closed-form check for two binary inputs, two binary outputs, and all
/// four treatments allowable.
///
/// With `p_i.` = Pr(A1 = first value | lambda1 = i), `p_.j` likewise for A2,
/// and `p_ij` = Pr(A1 = first, A2 = first | (i, j)), a coupling exists iff
/// `0 <= p_i. + p_.j + p_i'j' - p_ij - p_ij' - p_i'j <= 1` for all four
/// choices of `(i, j)` with `i' != i`, `j' != j`, given marginal selectivity.
pub fn fine_inequalities(system: &System, eps_test: f64) -> Result<FineReport> {
    let d = &system.design;
    if d.n() != 2 {
        return Err(inapplicable("needs exactly two input/output pairs"));
    }
    if d.level_counts() != [2, 2] {
        return Err(inapplicable("needs both inputs binary"));
    }
    if d.value_counts() != [2, 2] {
        return Err(inapplicable("needs both outputs binary"));
    }
    if !d.is_fully_crossed() {
        return Err(inapplicable("needs all four treatments allowable"));
    }
    let ms = check_marginal_selectivity(system, 1, eps_test);
    if !ms.pass {
        return Err(inapplicable(format!(
            "marginal selectivity fails (discrepancy {})",
            ms.discrepancy
        )));
    }
    let at = |i: usize, j: usize| {
        let t = d
            .treatments
            .iter()
            .position(|t| t.0 == [i, j])
            .expect("fully crossed");
        system.pmf(t)
    };
    let p_row = |i: usize| at(i, 0).get(&[0, 0]) + at(i, 0).get(&[0, 1]);
    let p_col = |j: usize| at(0, j).get(&[0, 0]) + at(0, j).get(&[1, 0]);
    let p_cell = |i: usize, j: usize| at(i, j).get(&[0, 0]);

    let mut values = Vec::with_capacity(4);
    let mut worst: Option<FineViolation> = None;
    for i in 0..2 {
        for j in 0..2 {
            let (i2, j2) = (1 - i, 1 - j);
            let value = p_row(i) + p_col(j) + p_cell(i2, j2) - p_cell(i, j) - p_cell(i, j2) - p_cell(i2, j);
            values.push(FineValue { i, j, value });
            for (bound, excess) in [(FineBound::Lower, -value), (FineBound::Upper, value - 1.0)] {
                if excess > eps_test && worst.is_none_or(|w| excess > w.excess) {
                    worst = Some(FineViolation { i, j, bound, excess });
                }
            }
        }
    }
    Ok(FineReport {
        pass: worst.is_none(),
        values,
        worst,
    })
}

pub fn fine_inequality_check(system: &System, eps_test: f64) -> TestReport {
    match fine_inequalities(system, eps_test) {
        Err(Error::Inapplicable(why)) => TestReport::inapplicable(TestKind::Fine, why),
        Err(e) => TestReport::inapplicable(TestKind::Fine, format!("{}", e)),
        Ok(report) => {
            let d = &system.design;
            let (verdict, summary) = match report.worst {
                None => (Verdict::Consistent, String::from("all eight Fine inequalities hold")),
                Some(w) => (
                    Verdict::RuledOut,
                    format!(
                        "{} bound violated by {} at ({}, {})",
                        match w.bound {
                            FineBound::Lower => "lower",
                            FineBound::Upper => "upper",
                        },
                        w.excess,
                        d.level_label(0, w.i),
                        d.level_label(1, w.j)
                    ),
                ),
            };
            TestReport::new(TestKind::Fine, verdict, summary, Evidence::Fine(report))
        }
    }
}
