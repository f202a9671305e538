//! Experiment driver for the `stsvd` crate: matrix generation and ingestion,
//! repeated seeded runs and CSV / JSON-lines output.

pub mod config;
pub mod experiments;

pub use config::{Command, ExperimentConfig, MatrixSource, SketchSize};
pub use experiments::{cmd_gen, cmd_nearest, cmd_ortho, cmd_spectrum, Report};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT_ERROR: i32 = 2;
    pub const NUMERICAL_FAILURE: i32 = 3;
    pub const BOUND_VIOLATIONS: i32 = 4;
}

/// Exit code for a library error.
pub fn exit_code(err: &stsvd::Error) -> i32 {
    if err.is_input_error() || matches!(err, stsvd::Error::RankDeficient { .. }) {
        exit::INPUT_ERROR
    } else {
        exit::NUMERICAL_FAILURE
    }
}
