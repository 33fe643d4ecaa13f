//! Orchestration behind the `canalplan` command: configuration, the staged
//! pipeline, re-planning, rendering and benchmarking.

pub mod bench;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod render;
pub mod replan;
pub mod synth;

use canalplan_core::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for an error: malformed input is a usage error,
/// failed file access is I/O, and everything the model or solver rejects
/// is infeasible.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Parse { .. } => EXIT_USAGE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INFEASIBLE,
    }
}
