use canalplan_core::model::{evaluate, BinaryProgram, Relation, VarLabel};
use canalplan_core::solver::simplex::{solve_lp, LpProblem, LpStatus};
use canalplan_core::solver::{enumerate, solve, SolveConfig, SolveStatus};
use canalplan_core::{Program, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(v: i64) -> Rational {
    Rational::from_integer(v)
}

fn random_binary_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Program {
    let mut p = Program::new("random");
    let vars: Vec<_> = (0..n).map(|i| p.add_var(VarLabel::new("x", [i]))).collect();
    for v in &vars {
        p.objective.add_linear(*v, r(rng.gen_range(-10..=10)));
    }
    // a hidden point keeps roughly two thirds of the instances feasible
    let hidden: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let keep_feasible = rng.gen_bool(0.67);
    for _ in 0..m {
        let k = rng.gen_range(1..=n.min(6));
        let terms: Vec<_> = (0..k)
            .map(|_| (vars[rng.gen_range(0..n)], r(rng.gen_range(-5..=5))))
            .collect();
        let at_hidden: i64 = terms
            .iter()
            .filter(|(v, _)| hidden[v.0])
            .map(|(_, c)| *c.numer())
            .sum();
        let (rel, rhs) = match rng.gen_range(0..5) {
            0 => (Relation::Eq, if keep_feasible { at_hidden } else { at_hidden + rng.gen_range(-1..=1) }),
            1 | 2 => (Relation::Le, at_hidden + if keep_feasible { rng.gen_range(0..3) } else { rng.gen_range(-3..3) }),
            _ => (Relation::Ge, at_hidden - if keep_feasible { rng.gen_range(0..3) } else { rng.gen_range(-3..3) }),
        };
        p.add_constraint(terms, rel, r(rhs));
    }
    p
}

#[test]
fn branch_and_bound_matches_enumeration_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut infeasible = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=18);
        let m = rng.gen_range(0..=30);
        let p = random_binary_lp(&mut rng, n, m);
        let bb = solve(&p, &SolveConfig::default()).unwrap();
        let ex = enumerate(&p).unwrap();
        assert_eq!(bb.status, ex.status, "case {case}");
        assert_eq!(bb.objective, ex.objective, "case {case}");
        if let Some(a) = &bb.assignment {
            let e = evaluate(&p, a).unwrap();
            assert!(e.feasible, "case {case}");
            assert_eq!(Some(e.objective), bb.objective, "case {case}");
        } else {
            infeasible += 1;
        }
    }
    assert!(infeasible > 5 && infeasible < 95, "{infeasible} infeasible instances");
}

#[test]
fn solve_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let p = random_binary_lp(&mut rng, 14, 12);
        let a = solve(&p, &SolveConfig::default()).unwrap();
        let b = solve(&p, &SolveConfig::default()).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.stats.nodes_explored, b.stats.nodes_explored);
    }
}

#[test]
fn node_bounds_never_exceed_subtree_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let p = random_binary_lp(&mut rng, 10, 8);
        let cfg = SolveConfig {
            trace: true,
            ..SolveConfig::default()
        };
        let res = solve(&p, &cfg).unwrap();
        for entry in &res.trace {
            let Some(bound) = entry.bound else { continue };
            // best integer point consistent with this node's fixings
            let mut best: Option<Rational> = None;
            for mask in 0u32..(1 << 10) {
                let a: Vec<bool> = (0..10).map(|i| mask >> i & 1 == 1).collect();
                if entry.fixings.iter().any(|&(j, v)| a[j] != v) {
                    continue;
                }
                let e = evaluate(&p, &a).unwrap();
                if e.feasible && best.is_none_or(|b| e.objective < b) {
                    best = Some(e.objective);
                }
            }
            if let Some(b) = best {
                let b = *b.numer() as f64 / *b.denom() as f64;
                assert!(bound <= b + 1e-7, "bound {bound} above subtree optimum {b}");
            }
        }
    }
}

#[test]
fn partition_rows_three_edges_two_subgraphs() {
    // w[s,e]: each edge in exactly one of two subgraphs
    let mut p = Program::new("partition-rows");
    let mut w = Vec::new();
    for s in 0..2 {
        for e in 0..3 {
            w.push(p.add_var(VarLabel::new("w", [s, e])));
        }
    }
    let costs = [3, 1, 4, 1, 5, 9];
    for (v, c) in w.iter().zip(costs) {
        p.objective.add_linear(*v, r(c));
    }
    for e in 0..3 {
        p.add_constraint([(w[e], r(1)), (w[3 + e], r(1))], Relation::Eq, r(1));
    }
    let feasible = (0u32..64)
        .filter(|mask| {
            let a: Vec<bool> = (0..6).map(|i| mask >> i & 1 == 1).collect();
            evaluate(&p, &a).unwrap().feasible
        })
        .count();
    assert_eq!(feasible, 8);
    let res = solve(&p, &SolveConfig::default()).unwrap();
    // per edge the cheaper side: min(3,1) + min(1,5) + min(4,9)
    assert_eq!(res.objective, Some(r(6)));
}

/// Textbook two-phase primal simplex on `max`-form dense tableau with
/// Bland's rule; bounds become explicit rows. Written independently of the
/// library's bounded dual simplex.
fn reference_lp(cost: &[f64], rows: &[(Vec<f64>, Relation, f64)]) -> Option<f64> {
    let n = cost.len();
    let mut all: Vec<(Vec<f64>, Relation, f64)> = rows.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        all.push((e, Relation::Le, 1.0));
    }
    // normalise rhs >= 0
    for (a, rel, b) in all.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let m = all.len();
    let slacks = all.iter().filter(|r| r.1 != Relation::Eq).count();
    let arts = all.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slacks + arts;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (n, n + slacks);
    let mut art_cols = Vec::new();
    for (i, (row, rel, b)) in all.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][width] = *b;
        match rel {
            Relation::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                art_cols.push(a);
                a += 1;
            }
            Relation::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                art_cols.push(a);
                a += 1;
            }
        }
    }
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, c: &[f64], allowed: &dyn Fn(usize) -> bool| {
        loop {
            // reduced costs for min c·x
            let mut enter = None;
            for j in 0..width {
                if !allowed(j) || basis.contains(&j) {
                    continue;
                }
                let mut d = c[j];
                for i in 0..m {
                    d -= c[basis[i]] * t[i][j];
                }
                if d < -1e-10 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][q] > 1e-10 {
                    let ratio = t[i][width] / t[i][q];
                    match leave {
                        Some((l, best)) if ratio > best + 1e-12 || (ratio > best - 1e-12 && basis[i] > basis[l]) => {}
                        _ => leave = Some((i, ratio)),
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            let p = t[r][q];
            t[r].iter_mut().for_each(|v| *v /= p);
            for i in 0..m {
                if i != r {
                    let f = t[i][q];
                    if f != 0.0 {
                        for j in 0..=width {
                            t[i][j] -= f * t[r][j];
                        }
                    }
                }
            }
            basis[r] = q;
        }
    };
    let mut phase1 = vec![0.0; width];
    for &c in &art_cols {
        phase1[c] = 1.0;
    }
    run(&mut t, &mut basis, &phase1, &|_| true);
    let infeas: f64 = (0..m).filter(|&i| art_cols.contains(&basis[i])).map(|i| t[i][width]).sum();
    if infeas > 1e-7 {
        return None;
    }
    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(cost);
    let arts_set = art_cols.clone();
    run(&mut t, &mut basis, &phase2, &|j| !arts_set.contains(&j));
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width];
        }
    }
    Some(x.iter().zip(cost).map(|(a, b)| a * b).sum())
}

#[test]
fn lp_relaxation_matches_reference_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    let mut attempts = 0;
    while compared < 200 {
        attempts += 1;
        assert!(attempts < 2000, "too few feasible instances");
        let n = rng.gen_range(1..=15);
        let m = rng.gen_range(1..=12);
        let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let hidden: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut rows = Vec::new();
        for _ in 0..m {
            let a: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { rng.gen_range(-4.0..4.0) } else { 0.0 })
                .collect();
            let at: f64 = a.iter().zip(&hidden).map(|(x, y)| x * y).sum();
            let (rel, b) = match rng.gen_range(0..3) {
                0 => (Relation::Le, at + rng.gen_range(0.0..1.0)),
                1 => (Relation::Ge, at - rng.gen_range(0.0..1.0)),
                _ => (Relation::Eq, at),
            };
            rows.push((a, rel, b));
        }
        let mut lp = LpProblem::<f64>::boxed(cost.clone());
        for (a, rel, b) in &rows {
            let terms = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
            lp.add_row(terms, *rel, *b);
        }
        let ours = solve_lp(&lp).unwrap();
        let reference = reference_lp(&cost, &rows);
        let Some(expected) = reference else { continue };
        assert_eq!(ours.status, LpStatus::Optimal);
        assert!(
            (ours.objective - expected).abs() <= 1e-7 * (1.0 + expected.abs()),
            "ours {} reference {}",
            ours.objective,
            expected
        );
        compared += 1;
    }
}

#[test]
fn float_programs_solve_too() {
    let mut p = BinaryProgram::<f64>::new("f");
    let a = p.add_var(VarLabel::new("x", [0]));
    let b = p.add_var(VarLabel::new("x", [1]));
    p.objective.add_linear(a, 1.5);
    p.objective.add_linear(b, 2.5);
    p.add_constraint([(a, 1.0), (b, 1.0)], Relation::Ge, 1.0);
    let res = solve(&p, &SolveConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert_eq!(res.objective, Some(1.5));
}
