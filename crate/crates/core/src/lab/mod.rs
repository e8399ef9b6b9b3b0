//! Configuration files, command pipelines and run artifacts.

pub mod config;
pub mod fit;
pub mod output;
pub mod run;
pub mod svg;

pub use config::{load_config, RunConfig};
pub use fit::{fit_width, SweepRecord, WidthFit};
pub use run::{run_command, Command, RunContext, RunReport};

use crate::error::Error;

/// Process exit code for a failed run: 2 for invalid input, 3 for solver failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::InvalidParameter(_)
        | Error::BoundaryDirection { .. }
        | Error::RegimeMismatch(_)
        | Error::GeometryViolation { .. } => 2,
        _ => 3,
    }
}
