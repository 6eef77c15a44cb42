use alloc::string::String;
use alloc::vec::Vec;

use crate::architecture::ArchitectureReport;
use crate::cosphericity::CosphericityResult;
use crate::distance::ChainViolation;
use crate::feasibility::{FineReport, LpVerdict};
use crate::marginal::MarginalReport;

/// Which test produced a report. The declaration order is the fixed order
/// in which reports are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TestKind {
    Marginal,
    Lp,
    Fine,
    Distance,
    Cosphericity,
    Battery,
    Contrast,
}

impl TestKind {
    pub const ALL: [TestKind; 7] = [
        TestKind::Marginal,
        TestKind::Lp,
        TestKind::Fine,
        TestKind::Distance,
        TestKind::Cosphericity,
        TestKind::Battery,
        TestKind::Contrast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Marginal => "marginal",
            TestKind::Lp => "lp",
            TestKind::Fine => "fine",
            TestKind::Distance => "distance",
            TestKind::Cosphericity => "cosphericity",
            TestKind::Battery => "battery",
            TestKind::Contrast => "contrast",
        }
    }

    pub fn from_name(name: &str) -> Option<TestKind> {
        TestKind::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The test found nothing contradicting selective influences.
    Consistent,
    /// The test rules selective influences out.
    RuledOut,
    /// The test's preconditions do not hold for this system.
    Inapplicable,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::RuledOut => "ruled-out",
            Verdict::Inapplicable => "inapplicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    None,
    Marginal(MarginalReport),
    Feasibility(LpVerdict),
    Fine(FineReport),
    Chain {
        sequences_checked: usize,
        violation: Option<ChainViolation>,
    },
    Cosphericity(Vec<CosphericityResult>),
    Battery(Vec<TestReport>),
    Architecture(ArchitectureReport),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub test: TestKind,
    pub verdict: Verdict,
    pub summary: String,
    pub evidence: Evidence,
    /// Warnings that do not change the verdict.
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn new(test: TestKind, verdict: Verdict, summary: impl Into<String>, evidence: Evidence) -> Self {
        TestReport {
            test,
            verdict,
            summary: summary.into(),
            evidence,
            notes: Vec::new(),
        }
    }

    pub fn inapplicable(test: TestKind, reason: impl Into<String>) -> Self {
        TestReport::new(test, Verdict::Inapplicable, reason, Evidence::None)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::RuledOut
    }
}
