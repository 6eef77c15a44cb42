//! Tests of selective influences for finite systems of random outputs.
//!
//! A [`System`] pairs a [`Design`] (inputs, outputs, allowable treatments)
//! with the joint output pmf observed at each treatment. The linear
//! feasibility test in [`feasibility`] decides whether the outputs are
//! selectively influenced by their paired inputs; the remaining modules
//! provide cheaper necessary conditions and response-time contrasts.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod architecture;
pub mod cosphericity;
pub mod distance;
pub mod error;
pub mod feasibility;
pub mod marginal;
pub mod model;
pub mod pmf;
pub mod report;
pub mod simplex;
pub mod transform;

pub use architecture::{
    classify_architecture, compose_rt, contrast_test, interaction_contrast, Architecture, ArchitectureReport,
    CompositionRule, ContrastProfile, RtSystem, TotalCheck,
};
pub use cosphericity::{correlation, cosphericity_test, run_cosphericity, CosphericityResult, EPS_COSPH};
pub use distance::{enumerate_test_sequences, pairwise_distance, run_distance_test, ChainViolation, MetricSpec};
pub use error::{Error, Result};
pub use feasibility::{
    build_feasibility_system, extract_coupling_marginals, fine_inequality_check, lp_test, solve_feasibility,
    CouplingWitness, FeasibilitySystem, FineReport, LpVerdict, EPS_LP,
};
pub use marginal::{check_marginal_selectivity, marginal_test, MarginalReport, EPS_TEST};
pub use model::{
    generate_system, validate_system, Design, InputSpec, LatentModel, OutputSpec, OutputValue, System, Treatment,
    EPS_PROB,
};
pub use pmf::JointPmf;
pub use report::{Evidence, TestKind, TestReport, Verdict};
pub use transform::{apply_transform, battery, TransformSpec};
