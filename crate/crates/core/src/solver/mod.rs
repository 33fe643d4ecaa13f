//! Exact optimisation of binary linear programs.
//!
//! [`solve`] runs LP-based branch-and-bound on top of
//! [`simplex::DenseSimplex`]; [`enumerate`] is the exhaustive reference
//! used by tests and for tiny instances.

mod bnb;
mod enumerate;
pub mod simplex;

use std::time::Duration;

use crate::model::{linearize, BinaryProgram};
use crate::scalar::Coefficient;
use crate::Result;

pub use bnb::solve;
pub use enumerate::{enumerate, MAX_ENUMERATION_VARS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BranchRule {
    #[default]
    MostFractional,
    FirstFractional,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub time_limit: Duration,
    pub integrality_tol: f64,
    pub node_limit: usize,
    pub branch_rule: BranchRule,
    /// Switch from depth-first to best-bound selection every this many nodes.
    pub restart_interval: usize,
    /// Record one [`TraceEntry`] per node (also logged at `trace` level).
    pub trace: bool,
    /// A feasible assignment to seed the incumbent with.
    pub initial: Option<Vec<bool>>,
    /// A proven lower bound on the optimum; the search stops as soon as the
    /// incumbent reaches it.
    pub objective_floor: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(600),
            integrality_tol: 1e-6,
            node_limit: 5_000_000,
            branch_rule: BranchRule::MostFractional,
            restart_interval: 1000,
            trace: false,
            initial: None,
            objective_floor: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_limit.is_zero() {
            return Err(crate::Error::Usage("time limit must be positive".into()));
        }
        if !(self.integrality_tol > 0.0 && self.integrality_tol < 0.5) {
            return Err(crate::Error::Usage(format!(
                "integrality tolerance {} outside (0, 0.5)",
                self.integrality_tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// A time or node limit stopped the search; the result still carries the
    /// best incumbent if one was found.
    TimedOut,
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub nodes_explored: usize,
    pub lp_iterations: usize,
    pub wall_time: Duration,
}

/// One branch-and-bound node as seen by the trace log.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub depth: usize,
    /// LP bound, `None` when the relaxation was infeasible.
    pub bound: Option<f64>,
    pub incumbent: Option<f64>,
    pub fixings: Vec<(usize, bool)>,
}

#[derive(Clone, Debug)]
pub struct SolveResult<C> {
    pub status: SolveStatus,
    pub assignment: Option<Vec<bool>>,
    pub objective: Option<C>,
    pub stats: SolveStats,
    pub trace: Vec<TraceEntry>,
}

impl<C> SolveResult<C> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Linearizes a quadratic program, solves it, and projects the assignment
/// back onto the original variables.
pub fn solve_quadratic<C: Coefficient>(p: &BinaryProgram<C>, cfg: &SolveConfig) -> Result<SolveResult<C>> {
    let n = p.var_count();
    if p.is_linear() {
        return solve(p, cfg);
    }
    let lin = linearize(p);
    let mut cfg = cfg.clone();
    if let Some(init) = cfg.initial.take() {
        cfg.initial = Some(extend_with_products(&lin, init));
    }
    let mut res = solve(&lin, &cfg)?;
    if let Some(a) = res.assignment.as_mut() {
        a.truncate(n);
    }
    Ok(res)
}

/// Completes an assignment of original variables with the implied values of
/// the linearization's product variables.
fn extend_with_products<C: Coefficient>(lin: &BinaryProgram<C>, mut a: Vec<bool>) -> Vec<bool> {
    for v in &lin.variables[a.len()..] {
        let s = &v.label.subscripts;
        a.push(a[s[0]] && a[s[1]]);
    }
    a
}
