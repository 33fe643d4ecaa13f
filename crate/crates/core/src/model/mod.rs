//! Binary programs: quadratic objectives over 0/1 variables with linear
//! constraints, plus the exact reductions to binary *linear* form.

mod eval;
mod linearize;
mod lp_format;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::scalar::Coefficient;

pub use eval::{evaluate, Evaluation};
pub use linearize::{fold_binary_squares, linearize};
pub use lp_format::write_lp;

/// Dense index of a variable within its program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Structured tag such as `x[k,t,i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarLabel {
    pub kind: &'static str,
    pub subscripts: Vec<usize>,
}

impl VarLabel {
    pub fn new(kind: &'static str, subscripts: impl Into<Vec<usize>>) -> Self {
        Self {
            kind,
            subscripts: subscripts.into(),
        }
    }
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.kind)?;
        for (n, s) in self.subscripts.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

/// How the relaxation treats a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// Branched on.
    Binary,
    /// Relaxed to `[0, 1]` and never branched on; integrality is implied by
    /// the constraints once every `Binary` variable is integral.
    Auxiliary,
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub label: VarLabel,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// `Σ coef·x  (<=|=|>=)  rhs`, with terms sorted by variable and merged.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint<C> {
    pub terms: Vec<(VarId, C)>,
    pub relation: Relation,
    pub rhs: C,
}

impl<C: Coefficient> LinearConstraint<C> {
    pub fn new(terms: impl IntoIterator<Item = (VarId, C)>, relation: Relation, rhs: C) -> Self {
        Self {
            terms: merge_terms(terms),
            relation,
            rhs,
        }
    }

    pub fn lhs(&self, assignment: &[bool]) -> C {
        self.terms
            .iter()
            .filter(|(v, _)| assignment[v.0])
            .fold(C::zero(), |acc, (_, c)| acc + c.clone())
    }

    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        let lhs = self.lhs(assignment);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

fn merge_terms<C: Coefficient>(terms: impl IntoIterator<Item = (VarId, C)>) -> Vec<(VarId, C)> {
    let mut map: BTreeMap<VarId, C> = BTreeMap::new();
    for (v, c) in terms {
        let e = map.entry(v).or_insert_with(C::zero);
        *e = e.clone() + c;
    }
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Minimisation objective `constant + Σ lin·x + Σ quad·x_i·x_j`.
///
/// After [`QuadraticObjective::canonicalize`] the linear part is merged and
/// sorted, and quadratic pairs are unique with `i <= j`. Diagonal pairs
/// survive until [`fold_binary_squares`] turns them into linear terms.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective<C> {
    pub linear: Vec<(VarId, C)>,
    pub quadratic: Vec<(VarId, VarId, C)>,
    pub constant: C,
}

impl<C: Coefficient> Default for QuadraticObjective<C> {
    fn default() -> Self {
        Self {
            linear: Vec::new(),
            quadratic: Vec::new(),
            constant: C::zero(),
        }
    }
}

impl<C: Coefficient> QuadraticObjective<C> {
    pub fn add_linear(&mut self, v: VarId, c: C) {
        self.linear.push((v, c));
    }

    pub fn add_quadratic(&mut self, a: VarId, b: VarId, c: C) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.quadratic.push((a, b, c));
    }

    /// Adds `(Σ coef·x + offset)²`, expanded term by term.
    pub fn add_squared_sum(&mut self, terms: &[(VarId, C)], offset: C) {
        let two = C::int(2);
        for (n, (a, ca)) in terms.iter().enumerate() {
            self.add_quadratic(*a, *a, ca.clone() * ca.clone());
            for (b, cb) in &terms[n + 1..] {
                self.add_quadratic(*a, *b, two.clone() * ca.clone() * cb.clone());
            }
            self.add_linear(*a, two.clone() * ca.clone() * offset.clone());
        }
        self.constant = self.constant.clone() + offset.clone() * offset;
    }

    pub fn canonicalize(&mut self) {
        self.linear = merge_terms(std::mem::take(&mut self.linear));
        let mut map: BTreeMap<(VarId, VarId), C> = BTreeMap::new();
        for (a, b, c) in std::mem::take(&mut self.quadratic) {
            let key = if a <= b { (a, b) } else { (b, a) };
            let e = map.entry(key).or_insert_with(C::zero);
            *e = e.clone() + c;
        }
        self.quadratic = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((a, b), c)| (a, b, c))
            .collect();
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic.is_empty()
    }

    pub fn value(&self, assignment: &[bool]) -> C {
        let mut acc = self.constant.clone();
        for (v, c) in &self.linear {
            if assignment[v.0] {
                acc = acc + c.clone();
            }
        }
        for (a, b, c) in &self.quadratic {
            if assignment[a.0] && assignment[b.0] {
                acc = acc + c.clone();
            }
        }
        acc
    }
}

/// A minimisation over binary (and implied-binary auxiliary) variables.
#[derive(Clone, Debug)]
pub struct BinaryProgram<C> {
    pub name: String,
    pub variables: Vec<Variable>,
    pub objective: QuadraticObjective<C>,
    pub constraints: Vec<LinearConstraint<C>>,
}

impl<C: Coefficient> BinaryProgram<C> {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            objective: QuadraticObjective::default(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, label: VarLabel) -> VarId {
        self.add_var_of_kind(label, VarKind::Binary)
    }

    pub fn add_var_of_kind(&mut self, label: VarLabel, kind: VarKind) -> VarId {
        self.variables.push(Variable { label, kind });
        VarId(self.variables.len() - 1)
    }

    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn label(&self, v: VarId) -> &VarLabel {
        &self.variables[v.0].label
    }

    pub fn add_constraint(&mut self, terms: impl IntoIterator<Item = (VarId, C)>, relation: Relation, rhs: C) {
        self.constraints.push(LinearConstraint::new(terms, relation, rhs));
    }

    /// Pins `v` to `value`.
    pub fn fix(&mut self, v: VarId, value: bool) {
        let rhs = if value { C::one() } else { C::zero() };
        self.add_constraint([(v, C::one())], Relation::Eq, rhs);
    }

    pub fn is_linear(&self) -> bool {
        self.objective.is_linear()
    }

    /// Checks the index invariant: every referenced variable exists.
    pub fn validate(&self) -> crate::Result<()> {
        let n = self.var_count();
        let bad = |v: &VarId| v.0 >= n;
        if self.objective.linear.iter().any(|(v, _)| bad(v))
            || self.objective.quadratic.iter().any(|(a, b, _)| bad(a) || bad(b))
            || self
                .constraints
                .iter()
                .any(|c| c.terms.iter().any(|(v, _)| bad(v)))
        {
            return Err(crate::Error::Model(format!(
                "program {:?} references a variable index >= {n}",
                self.name
            )));
        }
        Ok(())
    }
}
