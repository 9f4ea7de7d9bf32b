//! Workload scripts, the generator, replay and reporting.

mod generate;
mod runner;
mod script;
mod stats;

pub use generate::{generate, GenerateError, GenerateParams};
pub use runner::{run, Rejection, Report, RunOptions, Verify};
pub use script::{Batch, BatchKind, Script, ScriptError};
pub use stats::{sweep, teardown_script, Summary, SweepPoint};
