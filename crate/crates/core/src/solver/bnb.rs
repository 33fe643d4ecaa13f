use std::collections::HashSet;
use std::time::Instant;

use super::simplex::{DenseSimplex, LpProblem, LpStatus};
use super::{BranchRule, SolveConfig, SolveResult, SolveStats, SolveStatus, TraceEntry};
use crate::model::{evaluate, BinaryProgram, LinearConstraint, VarKind};
use crate::scalar::{common_denominator, Coefficient};
use crate::{Error, Result};

struct Node {
    fixings: Vec<(usize, bool)>,
    bound: f64,
    depth: usize,
}

struct Incumbent<C> {
    assignment: Vec<bool>,
    objective: C,
    value: f64,
}

/// Drops constraints that repeat an earlier row verbatim.
fn dedup_rows<C: Coefficient>(rows: &[LinearConstraint<C>]) -> Vec<&LinearConstraint<C>> {
    let mut seen = HashSet::new();
    rows.iter()
        .filter(|c| seen.insert(format!("{:?}", (&c.terms, c.relation, &c.rhs))))
        .collect()
}

/// Pruning test that exploits integral objectives: with every objective
/// coefficient a multiple of `1/scale`, any better solution improves by at
/// least `1/scale`.
struct Pruner {
    scale: Option<f64>,
}

impl Pruner {
    fn new<C: Coefficient>(p: &BinaryProgram<C>) -> Self {
        let coefs = p
            .objective
            .linear
            .iter()
            .map(|(_, c)| c)
            .chain(std::iter::once(&p.objective.constant));
        let scale = common_denominator(coefs).filter(|&d| d <= 1 << 40).map(|d| d as f64);
        Self { scale }
    }

    fn dominated(&self, bound: f64, incumbent: f64) -> bool {
        match self.scale {
            Some(d) => (bound * d - 1e-6).ceil() >= (incumbent * d).round(),
            None => bound >= incumbent - 1e-9 * (1.0 + incumbent.abs()),
        }
    }
}

/// LP-relaxation branch-and-bound for binary linear programs.
///
/// Depth-first with the rounded child first; every `restart_interval` nodes
/// the open node with the smallest bound is taken instead. Ties always go to
/// the lowest variable index, so runs are deterministic.
pub fn solve<C: Coefficient>(p: &BinaryProgram<C>, cfg: &SolveConfig) -> Result<SolveResult<C>> {
    cfg.validate()?;
    p.validate()?;
    if !p.is_linear() {
        return Err(Error::Usage(format!(
            "program {:?} has {} quadratic terms; linearize it first",
            p.name,
            p.objective.quadratic.len()
        )));
    }
    let start = Instant::now();
    let n = p.var_count();
    let constant = p.objective.constant.as_f64();

    let mut cost = vec![0.0; n];
    for (v, c) in &p.objective.linear {
        cost[v.0] += c.as_f64();
    }
    let mut lp = LpProblem::boxed(cost);
    for c in dedup_rows(&p.constraints) {
        lp.add_row(
            c.terms.iter().map(|(v, a)| (v.0, a.as_f64())).collect(),
            c.relation,
            c.rhs.as_f64(),
        );
    }
    let mut simplex = DenseSimplex::new(&lp)?;
    simplex.set_deadline(start.checked_add(cfg.time_limit));
    let pruner = Pruner::new(p);
    let binaries: Vec<usize> = (0..n).filter(|&j| p.variables[j].kind == VarKind::Binary).collect();

    let mut incumbent: Option<Incumbent<C>> = None;
    if let Some(init) = &cfg.initial {
        let e = evaluate(p, init)?;
        if e.feasible {
            let value = e.objective.as_f64();
            incumbent = Some(Incumbent {
                assignment: init.clone(),
                objective: e.objective,
                value,
            });
        } else {
            log::debug!("initial assignment violates {} rows, ignored", e.violated.len());
        }
    }
    let floor_reached = |inc: &Option<Incumbent<C>>| match (inc, cfg.objective_floor) {
        (Some(i), Some(f)) => i.value <= f + 1e-9,
        _ => false,
    };

    let mut stats = SolveStats::default();
    let mut trace = Vec::new();
    let mut open = vec![Node {
        fixings: Vec::new(),
        bound: f64::NEG_INFINITY,
        depth: 0,
    }];
    let mut applied: Vec<usize> = Vec::new();
    let mut limited = false;

    while !open.is_empty() {
        if floor_reached(&incumbent) {
            break;
        }
        if stats.nodes_explored >= cfg.node_limit || start.elapsed() >= cfg.time_limit {
            limited = true;
            break;
        }
        let take = if cfg.restart_interval > 0
            && stats.nodes_explored > 0
            && stats.nodes_explored % cfg.restart_interval == 0
        {
            let mut best = 0;
            for (k, node) in open.iter().enumerate() {
                if node.bound < open[best].bound {
                    best = k;
                }
            }
            best
        } else {
            open.len() - 1
        };
        let node = open.remove(take);
        if let Some(inc) = &incumbent {
            if pruner.dominated(node.bound, inc.value) {
                continue;
            }
        }
        stats.nodes_explored += 1;

        for j in applied.drain(..) {
            simplex.set_bounds(j, 0.0, 1.0);
        }
        for &(j, v) in &node.fixings {
            let b = if v { 1.0 } else { 0.0 };
            simplex.set_bounds(j, b, b);
            applied.push(j);
        }
        let sol = simplex.solve()?;
        stats.lp_iterations += sol.iterations;
        if sol.status == LpStatus::Interrupted {
            limited = true;
            break;
        }

        let bound = (sol.status == LpStatus::Optimal).then_some(sol.objective + constant);
        if cfg.trace {
            let entry = TraceEntry {
                depth: node.depth,
                bound,
                incumbent: incumbent.as_ref().map(|i| i.value),
                fixings: node.fixings.clone(),
            };
            log::trace!(
                "node depth={} bound={:?} incumbent={:?}",
                entry.depth,
                entry.bound,
                entry.incumbent
            );
            trace.push(entry);
        }
        let Some(bound) = bound else { continue };
        if let Some(inc) = &incumbent {
            if pruner.dominated(bound, inc.value) {
                continue;
            }
        }

        let tol = cfg.integrality_tol;
        let frac = |j: usize| {
            let x = sol.x[j];
            (x - x.floor()).min(x.ceil() - x)
        };
        let mut branch: Option<usize> = None;
        for &j in &binaries {
            let f = frac(j);
            if f <= tol {
                continue;
            }
            match cfg.branch_rule {
                BranchRule::FirstFractional => {
                    branch = Some(j);
                    break;
                }
                BranchRule::MostFractional => {
                    if branch.is_none_or(|b| f > frac(b) + 1e-12) {
                        branch = Some(j);
                    }
                }
            }
        }

        if branch.is_none() {
            let rounded: Vec<bool> = sol.x.iter().map(|&x| x > 0.5).collect();
            let e = evaluate(p, &rounded)?;
            if e.feasible {
                let value = e.objective.as_f64();
                if incumbent.as_ref().is_none_or(|i| e.objective < i.objective) {
                    log::debug!("incumbent {value} at node {}", stats.nodes_explored);
                    incumbent = Some(Incumbent {
                        assignment: rounded,
                        objective: e.objective,
                        value,
                    });
                }
                continue;
            }
            // implied-integral auxiliaries came out fractional; branch on one
            branch = (0..n).filter(|&j| frac(j) > tol).max_by(|&a, &b| {
                frac(a).partial_cmp(&frac(b)).unwrap().then(b.cmp(&a))
            });
            if branch.is_none() {
                log::warn!(
                    "integral LP point violates {} exact rows at depth {}; node dropped",
                    e.violated.len(),
                    node.depth
                );
                continue;
            }
        }

        let j = branch.unwrap();
        let first = sol.x[j] >= 0.5;
        for v in [!first, first] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            open.push(Node {
                fixings,
                bound,
                depth: node.depth + 1,
            });
        }
    }

    stats.wall_time = start.elapsed();
    let status = match (&incumbent, limited) {
        (_, true) => SolveStatus::TimedOut,
        (Some(_), false) => SolveStatus::Optimal,
        (None, false) => SolveStatus::Infeasible,
    };
    let (assignment, objective) = match incumbent {
        Some(i) => (Some(i.assignment), Some(i.objective)),
        None => (None, None),
    };
    Ok(SolveResult {
        status,
        assignment,
        objective,
        stats,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, VarLabel};
    use crate::Rational;

    fn r(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    #[test]
    fn positive_costs_give_all_zeros() {
        let mut p = BinaryProgram::<Rational>::new("t");
        for i in 0..5 {
            let v = p.add_var(VarLabel::new("x", [i]));
            p.objective.add_linear(v, r(i as i64 + 1));
        }
        let res = solve(&p, &SolveConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.objective, Some(r(0)));
        assert_eq!(res.assignment.unwrap(), vec![false; 5]);
    }

    #[test]
    fn quadratic_program_is_rejected() {
        let mut p = BinaryProgram::<Rational>::new("t");
        let a = p.add_var(VarLabel::new("x", [0]));
        let b = p.add_var(VarLabel::new("x", [1]));
        p.objective.add_quadratic(a, b, r(1));
        assert!(matches!(solve(&p, &SolveConfig::default()), Err(Error::Usage(_))));
    }

    #[test]
    fn infeasible_parity() {
        // x0 + x1 = 1, x0 + x1 >= 2
        let mut p = BinaryProgram::<Rational>::new("t");
        let a = p.add_var(VarLabel::new("x", [0]));
        let b = p.add_var(VarLabel::new("x", [1]));
        p.add_constraint([(a, r(1)), (b, r(1))], Relation::Eq, r(1));
        p.add_constraint([(a, r(1)), (b, r(1))], Relation::Ge, r(2));
        let res = solve(&p, &SolveConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
        assert!(res.assignment.is_none());
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 4   (min of the negation)
        let mut p = BinaryProgram::<Rational>::new("t");
        let vs: Vec<_> = (0..3).map(|i| p.add_var(VarLabel::new("x", [i]))).collect();
        for (v, c) in vs.iter().zip([5, 4, 3]) {
            p.objective.add_linear(*v, r(-c));
        }
        p.add_constraint(vs.iter().copied().zip([r(2), r(3), r(1)]), Relation::Le, r(4));
        let res = solve(&p, &SolveConfig::default()).unwrap();
        assert_eq!(res.objective, Some(r(-8)));
        assert_eq!(res.assignment.unwrap(), vec![true, false, true]);
    }

    #[test]
    fn duplicate_rows_do_not_change_the_answer() {
        let mut p = BinaryProgram::<Rational>::new("t");
        let a = p.add_var(VarLabel::new("x", [0]));
        p.objective.add_linear(a, r(1));
        for _ in 0..3 {
            p.add_constraint([(a, r(1))], Relation::Ge, r(1));
        }
        let res = solve(&p, &SolveConfig::default()).unwrap();
        assert_eq!(res.objective, Some(r(1)));
    }
}
