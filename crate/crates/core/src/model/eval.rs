use super::BinaryProgram;
use crate::scalar::Coefficient;
use crate::{Error, Result};

/// Outcome of evaluating one assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<C> {
    pub objective: C,
    pub feasible: bool,
    /// Indices into `constraints` of every violated row.
    pub violated: Vec<usize>,
}

pub fn evaluate<C: Coefficient>(p: &BinaryProgram<C>, assignment: &[bool]) -> Result<Evaluation<C>> {
    if assignment.len() != p.var_count() {
        return Err(Error::Usage(format!(
            "assignment has {} entries but program {:?} has {} variables",
            assignment.len(),
            p.name,
            p.var_count()
        )));
    }
    let violated: Vec<usize> = p
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_satisfied(assignment))
        .map(|(i, _)| i)
        .collect();
    Ok(Evaluation {
        objective: p.objective.value(assignment),
        feasible: violated.is_empty(),
        violated,
    })
}
