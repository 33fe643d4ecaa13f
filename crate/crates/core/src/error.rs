use thiserror::Error;

/// Errors raised anywhere in the planning toolkit.
///
/// The variants line up with the CLI's exit-code classes: parse, model,
/// coverage, solver and planning failures are "infeasible model" class
/// errors; usage and I/O have their own codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    #[error("model error: {0}")]
    Model(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("partition error: {0}")]
    Partition(String),

    /// The subgraph could not be covered within the battery-limited horizon.
    #[error("planning error: subgraph exceeds fleet battery budget ({edges} edges, {uavs} UAVs, no feasible horizon up to {max_horizon})")]
    BatteryBudget {
        edges: usize,
        uavs: usize,
        max_horizon: usize,
    },

    #[error("planning error: {0}")]
    Planning(String),

    #[error("routing error: {0}")]
    Routing(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
