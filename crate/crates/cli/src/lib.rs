//! File formats, test dispatch, and reports for the `selinf` command.

pub mod input;
pub mod render;
pub mod run;
pub mod transforms;

pub use run::{run, run_text, Format, Outcome, RunConfig};
