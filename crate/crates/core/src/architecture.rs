//! Interaction contrast of composed response times.
//!
//! With two binary inputs and response times `T_ij`, the contrast is
//! `c(t) = F11(t) + F22(t) - F12(t) - F21(t)`. When each input prolongs its
//! own process and both processes share only a common source `R`, the
//! contrast is never positive under `min`, never negative under `max`, and
//! under `+` its running integral is never negative and vanishes at infinity.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{usage, Result};
use crate::model::{Design, LatentModel};
use crate::report::{Evidence, TestKind, TestReport, Verdict};

/// Cdfs of the four response times on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RtSystem {
    pub grid: Vec<f64>,
    /// `cdfs[i][j]` is `Pr(T_ij <= t)` on the grid, levels counted from 0.
    pub cdfs: [[Vec<f64>; 2]; 2],
}

impl RtSystem {
    /// Checks the grid is strictly increasing and every cdf is a
    /// nondecreasing sequence in `[0, 1]` (to within `eps`).
    pub fn new(grid: Vec<f64>, cdfs: [[Vec<f64>; 2]; 2], eps: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(usage("time grid is empty"));
        }
        if grid.iter().any(|t| !t.is_finite()) {
            return Err(usage("time grid has non-finite points"));
        }
        if let Some(i) = grid.windows(2).position(|w| w[0] >= w[1]) {
            return Err(usage(format!("time grid is not strictly increasing at position {}", i + 1)));
        }
        for (i, row) in cdfs.iter().enumerate() {
            for (j, f) in row.iter().enumerate() {
                let name = format!("cdf ({},{})", i + 1, j + 1);
                if f.len() != grid.len() {
                    return Err(usage(format!("{} has {} points, grid has {}", name, f.len(), grid.len())));
                }
                if f.iter().any(|&v| !(v >= -eps && v <= 1.0 + eps)) {
                    return Err(usage(format!("{} leaves [0, 1]", name)));
                }
                if let Some(k) = f.windows(2).position(|w| w[1] < w[0] - eps) {
                    return Err(usage(format!("{} decreases at position {}", name, k + 1)));
                }
            }
        }
        Ok(RtSystem { grid, cdfs })
    }

    pub fn cdf(&self, i: usize, j: usize) -> &[f64] {
        &self.cdfs[i][j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastProfile {
    pub c: Vec<f64>,
    /// Trapezoid-rule integral of `c` from the first grid point.
    pub cumulative: Vec<f64>,
    pub total: f64,
}

pub fn interaction_contrast(rt: &RtSystem) -> ContrastProfile {
    let f = &rt.cdfs;
    let c: Vec<f64> = (0..rt.grid.len())
        .map(|t| (f[0][0][t] + f[1][1][t]) - (f[0][1][t] + f[1][0][t]))
        .collect();
    let mut cumulative = Vec::with_capacity(c.len());
    let mut acc = 0.0;
    cumulative.push(acc);
    for t in 1..c.len() {
        acc += (rt.grid[t] - rt.grid[t - 1]) * (c[t] + c[t - 1]) / 2.0;
        cumulative.push(acc);
    }
    ContrastProfile { c, cumulative, total: acc }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Architecture {
    ParallelOr,
    ParallelAnd,
    Serial,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::ParallelOr, Architecture::ParallelAnd, Architecture::Serial];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::ParallelOr => "parallel-OR",
            Architecture::ParallelAnd => "parallel-AND",
            Architecture::Serial => "serial",
        }
    }
}

/// Whether the grid reaches far enough to judge `integral of c = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TotalCheck {
    Holds,
    Fails,
    /// Some cdf is still below 1 at the last grid point.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureReport {
    pub profile: ContrastProfile,
    pub max_c: f64,
    pub min_c: f64,
    pub min_cumulative: f64,
    pub serial_total: TotalCheck,
    /// Architectures whose necessary sign conditions hold.
    pub consistent: Vec<Architecture>,
}

/// Architectures whose sign conditions the contrast satisfies.
///
/// The serial label needs a nonnegative running integral and, when the grid
/// covers every jump, a total within `eps_test` of zero. If the grid stops
/// early the total is reported as indeterminate and does not exclude serial.
pub fn classify_architecture(rt: &RtSystem, eps_test: f64) -> ArchitectureReport {
    let profile = interaction_contrast(rt);
    let max_c = profile.c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_c = profile.c.iter().copied().fold(f64::INFINITY, f64::min);
    let min_cumulative = profile.cumulative.iter().copied().fold(f64::INFINITY, f64::min);
    let last = rt.grid.len() - 1;
    let complete = rt.cdfs.iter().flatten().all(|f| f[last] >= 1.0 - eps_test);
    let serial_total = if !complete {
        TotalCheck::Indeterminate
    } else if libm::fabs(profile.total) <= eps_test {
        TotalCheck::Holds
    } else {
        TotalCheck::Fails
    };
    let mut consistent = Vec::new();
    if max_c <= eps_test {
        consistent.push(Architecture::ParallelOr);
    }
    if min_c >= -eps_test {
        consistent.push(Architecture::ParallelAnd);
    }
    if min_cumulative >= -eps_test && serial_total != TotalCheck::Fails {
        consistent.push(Architecture::Serial);
    }
    ArchitectureReport {
        profile,
        max_c,
        min_c,
        min_cumulative,
        serial_total,
        consistent,
    }
}

pub fn contrast_test(rt: &RtSystem, eps_test: f64) -> TestReport {
    let report = classify_architecture(rt, eps_test);
    let names: Vec<&str> = report.consistent.iter().map(|a| a.name()).collect();
    let (verdict, summary) = if names.is_empty() {
        (
            Verdict::RuledOut,
            format!(
                "no architecture fits: c ranges over [{}, {}], running integral dips to {}",
                report.min_c, report.max_c, report.min_cumulative
            ),
        )
    } else {
        (Verdict::Consistent, format!("consistent with {}", names.join(", ")))
    };
    let indeterminate = report.serial_total == TotalCheck::Indeterminate;
    let mut out = TestReport::new(TestKind::Contrast, verdict, summary, Evidence::Architecture(report));
    if indeterminate {
        out = out.with_note("grid ends before every cdf reaches 1; the serial total is indeterminate");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionRule {
    Plus,
    Min,
    Max,
}

impl CompositionRule {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            CompositionRule::Plus => a + b,
            CompositionRule::Min => a.min(b),
            CompositionRule::Max => a.max(b),
        }
    }
}

/// Exact cdfs of `T_ij = rule(g1_i(R), g2_j(R))` on `grid`, where `gk_l(r)`
/// is the numeric payload of output `k`'s response at level `l` and latent
/// cell `r`.
///
/// The design must have two inputs with two levels each and numeric,
/// nonnegative output payloads. Every latent cell must satisfy the
/// prolongation constraints `gk_1(r) <= gk_2(r)`.
pub fn compose_rt(design: &Design, model: &LatentModel, rule: CompositionRule, grid: &[f64]) -> Result<RtSystem> {
    if design.n() != 2 || design.level_counts() != [2, 2] {
        return Err(usage("composition needs two inputs with two levels each"));
    }
    model.check_against(design)?;
    let mut durations = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for k in 0..2 {
        let out = &design.outputs[k];
        let payloads = out
            .payloads()
            .ok_or_else(|| usage(format!("output {} needs numeric durations", out.name)))?;
        if payloads.iter().any(|&x| !(x >= 0.0)) {
            return Err(usage(format!("output {} has a negative duration", out.name)));
        }
        for l in 0..2 {
            durations[k][l] = model.responses[k][l].iter().map(|&v| payloads[v]).collect();
        }
    }
    for k in 0..2 {
        if let Some(r) = (0..model.latent_size()).find(|&r| durations[k][0][r] > durations[k][1][r]) {
            return Err(usage(format!(
                "prolongation fails for input {} at latent value {}: {} > {}",
                design.inputs[k].name,
                r,
                durations[k][0][r],
                durations[k][1][r]
            )));
        }
    }
    let mut cdfs: [[Vec<f64>; 2]; 2] = Default::default();
    for (i, row) in cdfs.iter_mut().enumerate() {
        for (j, f) in row.iter_mut().enumerate() {
            *f = alloc::vec![0.0; grid.len()];
            for (r, &p) in model.latent.masses().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let t = rule.apply(durations[0][i][r], durations[1][j][r]);
                for (slot, &g) in f.iter_mut().zip(grid) {
                    if t <= g {
                        *slot += p;
                    }
                }
            }
        }
    }
    RtSystem::new(grid.to_vec(), cdfs, 1e-9)
}
