use std::time::Instant;

use super::{SolveResult, SolveStats, SolveStatus};
use crate::model::{evaluate, BinaryProgram, Relation};
use crate::scalar::{common_denominator, Coefficient};
use crate::{Error, Result};

pub const MAX_ENUMERATION_VARS: usize = 25;

/// Integer image of a program: every row and the objective scaled by the
/// common denominator of its coefficients.
struct Scaled {
    rows: Vec<(Vec<(usize, i128)>, Relation, i128)>,
    linear: Vec<i128>,
    /// `(other, coef)` per variable, each pair listed under both ends
    neighbours: Vec<Vec<(usize, i128)>>,
    constant: i128,
    scale: i64,
}

impl Scaled {
    fn new<C: Coefficient>(p: &BinaryProgram<C>) -> Option<Self> {
        let n = p.var_count();
        let mut rows = Vec::with_capacity(p.constraints.len());
        for c in &p.constraints {
            let d = common_denominator(c.terms.iter().map(|(_, a)| a).chain([&c.rhs]))?;
            let terms = c
                .terms
                .iter()
                .map(|(v, a)| Some((v.0, a.scaled_integer(d)?)))
                .collect::<Option<Vec<_>>>()?;
            rows.push((terms, c.relation, c.rhs.scaled_integer(d)?));
        }
        let obj = &p.objective;
        let scale = common_denominator(
            obj.linear
                .iter()
                .map(|(_, c)| c)
                .chain(obj.quadratic.iter().map(|(_, _, c)| c))
                .chain([&obj.constant]),
        )?;
        let mut linear = vec![0i128; n];
        let mut neighbours = vec![Vec::new(); n];
        for (v, c) in &obj.linear {
            linear[v.0] += c.scaled_integer(scale)?;
        }
        for (a, b, c) in &obj.quadratic {
            let q = c.scaled_integer(scale)?;
            if a == b {
                linear[a.0] += q;
            } else {
                neighbours[a.0].push((b.0, q));
                neighbours[b.0].push((a.0, q));
            }
        }
        Some(Self {
            rows,
            linear,
            neighbours,
            constant: obj.constant.scaled_integer(scale)?,
            scale,
        })
    }
}

fn result<C: Coefficient>(
    p: &BinaryProgram<C>,
    best: Option<Vec<bool>>,
    nodes: usize,
    start: Instant,
) -> Result<SolveResult<C>> {
    let stats = SolveStats {
        nodes_explored: nodes,
        lp_iterations: 0,
        wall_time: start.elapsed(),
    };
    Ok(match best {
        Some(a) => {
            let e = evaluate(p, &a)?;
            SolveResult {
                status: SolveStatus::Optimal,
                objective: Some(e.objective),
                assignment: Some(a),
                stats,
                trace: Vec::new(),
            }
        }
        None => SolveResult {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: None,
            stats,
            trace: Vec::new(),
        },
    })
}

/// Exhaustive scan of all `2^n` assignments in Gray-code order. Ties keep
/// the first optimum met. Quadratic objectives are accepted as-is.
pub fn enumerate<C: Coefficient>(p: &BinaryProgram<C>) -> Result<SolveResult<C>> {
    p.validate()?;
    let n = p.var_count();
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::Usage(format!(
            "enumeration supports at most {MAX_ENUMERATION_VARS} variables, program {:?} has {n}",
            p.name
        )));
    }
    let start = Instant::now();
    let total: u64 = 1 << n;
    let Some(s) = Scaled::new(p) else {
        // inexact coefficients: evaluate every point directly
        let mut best: Option<(Vec<bool>, C)> = None;
        for mask in 0..total {
            let a: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let e = evaluate(p, &a)?;
            if e.feasible && best.as_ref().is_none_or(|(_, o)| e.objective < *o) {
                best = Some((a, e.objective));
            }
        }
        return result(p, best.map(|(a, _)| a), total as usize, start);
    };
    debug_assert!(s.scale > 0);

    let mut x = vec![false; n];
    let mut lhs: Vec<i128> = vec![0; s.rows.len()];
    let mut var_rows: Vec<Vec<(usize, i128)>> = vec![Vec::new(); n];
    for (r, (terms, _, _)) in s.rows.iter().enumerate() {
        for &(v, a) in terms {
            var_rows[v].push((r, a));
        }
    }
    let feasible = |lhs: &[i128]| {
        s.rows.iter().zip(lhs).all(|((_, rel, rhs), &l)| match rel {
            Relation::Le => l <= *rhs,
            Relation::Eq => l == *rhs,
            Relation::Ge => l >= *rhs,
        })
    };
    let mut value = s.constant;
    let mut best: Option<(Vec<bool>, i128)> = None;
    if feasible(&lhs) {
        best = Some((x.clone(), value));
    }
    for k in 1..total {
        let v = k.trailing_zeros() as usize;
        let on = !x[v];
        let mut delta = s.linear[v];
        for &(u, q) in &s.neighbours[v] {
            if x[u] {
                delta += q;
            }
        }
        x[v] = on;
        if on {
            value += delta;
            for &(r, a) in &var_rows[v] {
                lhs[r] += a;
            }
        } else {
            value -= delta;
            for &(r, a) in &var_rows[v] {
                lhs[r] -= a;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| value < *b) && feasible(&lhs) {
            best = Some((x.clone(), value));
        }
    }
    result(p, best.map(|(a, _)| a), total as usize, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VarLabel;
    use crate::Rational;

    #[test]
    fn empty_program_returns_constant() {
        let mut p = BinaryProgram::<Rational>::new("t");
        p.objective.constant = Rational::new(7, 3);
        let res = enumerate(&p).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.assignment.unwrap(), Vec::<bool>::new());
        assert_eq!(res.objective, Some(Rational::new(7, 3)));
    }

    #[test]
    fn single_var_negative_cost() {
        let mut p = BinaryProgram::<Rational>::new("t");
        let x = p.add_var(VarLabel::new("x", [0]));
        p.objective.add_linear(x, Rational::from_integer(-1));
        let res = enumerate(&p).unwrap();
        assert_eq!(res.assignment.unwrap(), vec![true]);
        assert_eq!(res.objective, Some(Rational::from_integer(-1)));
    }

    #[test]
    fn too_many_variables() {
        let mut p = BinaryProgram::<Rational>::new("t");
        for i in 0..26 {
            p.add_var(VarLabel::new("x", [i]));
        }
        assert!(matches!(enumerate(&p), Err(Error::Usage(_))));
    }

    #[test]
    fn float_coefficients_use_direct_evaluation() {
        let mut p = BinaryProgram::<f64>::new("t");
        let a = p.add_var(VarLabel::new("x", [0]));
        let b = p.add_var(VarLabel::new("x", [1]));
        p.objective.add_linear(a, 0.5);
        p.objective.add_linear(b, 0.25);
        p.add_constraint([(a, 1.0), (b, 1.0)], Relation::Ge, 1.0);
        let res = enumerate(&p).unwrap();
        assert_eq!(res.assignment.unwrap(), vec![false, true]);
    }
}
