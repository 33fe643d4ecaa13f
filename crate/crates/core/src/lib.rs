//! Minimum-effort inspection planning for UAV/car fleets over canal networks.
//!
//! The pipeline partitions the canal tree into battery-sized subtrees
//! ([`partition`]), plans joint UAV/car motion on each ([`fleet`]), and routes
//! the cars between subtrees ([`routing`]). Every optimisation step is a
//! [`model::BinaryProgram`] handed to the built-in exact [`solver`].

pub mod error;
pub mod fleet;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod routing;
pub mod sample;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};

/// Exact coefficient type used by every formulation in this crate.
pub type Rational = num_rational::Rational64;

pub type Program = model::BinaryProgram<Rational>;
pub type Objective = model::QuadraticObjective<Rational>;
pub type Constraint = model::LinearConstraint<Rational>;
pub type Evaluation = model::Evaluation<Rational>;
pub type Outcome = solver::SolveResult<Rational>;

/// The double-precision relaxation engine.
pub type Simplex = solver::simplex::DenseSimplex<f64>;
pub type Lp = solver::simplex::LpProblem<f64>;
