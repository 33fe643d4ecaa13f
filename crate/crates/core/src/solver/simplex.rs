//! Dense-tableau bounded-variable dual simplex.
//!
//! Every structural column is boxed, so the slack basis with each nonbasic
//! column parked at the bound matching the sign of its cost is dual
//! feasible. Dual feasibility only depends on reduced costs, which bound
//! changes never touch, so one tableau serves every branch-and-bound node:
//! change bounds, re-park nonbasics, run dual simplex.

use std::time::Instant;

use crate::model::Relation;
use crate::scalar::LpFloat;
use crate::{Error, Result};

/// One row `Σ coef·x  rel  rhs` of an LP.
#[derive(Clone, Debug)]
pub struct LpRow<F> {
    pub terms: Vec<(usize, F)>,
    pub relation: Relation,
    pub rhs: F,
}

/// `min cost·x` subject to rows and `lower <= x <= upper` (finite boxes).
#[derive(Clone, Debug)]
pub struct LpProblem<F> {
    pub cost: Vec<F>,
    pub lower: Vec<F>,
    pub upper: Vec<F>,
    pub rows: Vec<LpRow<F>>,
}

impl<F: LpFloat> LpProblem<F> {
    pub fn boxed(cost: Vec<F>) -> Self {
        let n = cost.len();
        Self {
            cost,
            lower: vec![F::zero(); n],
            upper: vec![F::one(); n],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, terms: Vec<(usize, F)>, relation: Relation, rhs: F) {
        self.rows.push(LpRow { terms, relation, rhs });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// The deadline passed before the solve finished.
    Interrupted,
}

#[derive(Clone, Debug)]
pub struct LpSolution<F> {
    pub status: LpStatus,
    /// Structural values (meaningful when optimal).
    pub x: Vec<F>,
    pub objective: F,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Position {
    Basic(usize),
    AtLower,
    AtUpper,
}

const PRIMAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const BLAND_AFTER: usize = 64;

/// Warm-startable LP engine over a dense tableau `B⁻¹[A | I]`.
#[derive(Clone, Debug)]
pub struct DenseSimplex<F> {
    n: usize,
    m: usize,
    width: usize,
    tab: Vec<F>,
    rhs: Vec<F>,
    cost: Vec<F>,
    reduced: Vec<F>,
    lower: Vec<F>,
    upper: Vec<F>,
    basis: Vec<usize>,
    pos: Vec<Position>,
    beta: Vec<F>,
    rows: Vec<LpRow<F>>,
    row_sign: Vec<F>,
    iterations: usize,
    scratch: Vec<usize>,
    deadline: Option<Instant>,
    bland_only: bool,
}

impl<F: LpFloat> DenseSimplex<F> {
    pub fn new(p: &LpProblem<F>) -> Result<Self> {
        let n = p.cost.len();
        let m = p.rows.len();
        if p.lower.len() != n || p.upper.len() != n {
            return Err(Error::Usage("bound vectors do not match the cost vector".into()));
        }
        for j in 0..n {
            if !p.lower[j].is_finite() || !p.upper[j].is_finite() || p.lower[j] > p.upper[j] {
                return Err(Error::Usage(format!(
                    "variable {j} needs a finite box, got [{}, {}]",
                    p.lower[j], p.upper[j]
                )));
            }
        }
        let width = n + m;
        let mut tab = vec![F::zero(); m * width];
        let mut rhs = vec![F::zero(); m];
        let mut row_sign = vec![F::one(); m];
        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.resize(width, F::zero());
        upper.resize(width, F::infinity());
        for (i, row) in p.rows.iter().enumerate() {
            // every row becomes `sign·a·x + s = sign·b` with s >= 0
            let sign = if row.relation == Relation::Ge { -F::one() } else { F::one() };
            row_sign[i] = sign;
            for &(j, a) in &row.terms {
                if j >= n {
                    return Err(Error::Usage(format!("row {i} references column {j} >= {n}")));
                }
                tab[i * width + j] = tab[i * width + j] + sign * a;
            }
            tab[i * width + n + i] = F::one();
            rhs[i] = sign * row.rhs;
            if row.relation == Relation::Eq {
                upper[n + i] = F::zero();
            }
        }
        let mut cost = p.cost.clone();
        cost.resize(width, F::zero());
        let mut pos = vec![Position::AtLower; width];
        let basis: Vec<usize> = (n..width).collect();
        for (i, &b) in basis.iter().enumerate() {
            pos[b] = Position::Basic(i);
        }
        let mut s = Self {
            n,
            m,
            width,
            tab,
            rhs,
            reduced: cost.clone(),
            cost,
            lower,
            upper,
            basis,
            pos,
            beta: vec![F::zero(); m],
            rows: p.rows.clone(),
            row_sign,
            iterations: 0,
            deadline: None,
            bland_only: false,
            scratch: Vec::with_capacity(width),
        };
        s.park_nonbasics();
        Ok(s)
    }

    /// Solves stop with [`LpStatus::Interrupted`] once `deadline` passes.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn structural_count(&self) -> usize {
        self.n
    }

    pub fn row_count(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn set_bounds(&mut self, j: usize, lower: F, upper: F) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn bounds(&self, j: usize) -> (F, F) {
        (self.lower[j], self.upper[j])
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> F {
        self.tab[i * self.width + j]
    }

    fn park_nonbasics(&mut self) {
        let tol = F::of(PRIMAL_TOL);
        for j in 0..self.width {
            let p = self.pos[j];
            if matches!(p, Position::Basic(_)) {
                continue;
            }
            let d = self.reduced[j];
            self.pos[j] = if self.lower[j] == self.upper[j] {
                Position::AtLower
            } else if d > tol {
                Position::AtLower
            } else if d < -tol && self.upper[j].is_finite() {
                Position::AtUpper
            } else if p == Position::AtUpper && self.upper[j].is_finite() {
                Position::AtUpper
            } else {
                Position::AtLower
            };
        }
    }

    fn nonbasic_value(&self, j: usize) -> F {
        match self.pos[j] {
            Position::AtUpper => self.upper[j],
            _ => self.lower[j],
        }
    }

    fn recompute_beta(&mut self) {
        self.beta.copy_from_slice(&self.rhs);
        for j in 0..self.width {
            if matches!(self.pos[j], Position::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v == F::zero() {
                continue;
            }
            for i in 0..self.m {
                let a = self.tab[i * self.width + j];
                if a != F::zero() {
                    self.beta[i] = self.beta[i] - a * v;
                }
            }
        }
    }

    /// Current value of every column (structural then slack).
    fn column_values(&self) -> Vec<F> {
        (0..self.width)
            .map(|j| match self.pos[j] {
                Position::Basic(i) => self.beta[i],
                _ => self.nonbasic_value(j),
            })
            .collect()
    }

    /// Solves from the current basis under the current bounds.
    pub fn solve(&mut self) -> Result<LpSolution<F>> {
        let start = self.iterations;
        self.park_nonbasics();
        self.recompute_beta();
        let mut status = match self.dual_simplex() {
            Ok(s) => s,
            Err(e) => {
                log::debug!("{e}; restarting from the slack basis under Bland's rule");
                self.reset_to_slack_basis();
                self.park_nonbasics();
                self.recompute_beta();
                self.bland_only = true;
                let retry = self.dual_simplex();
                self.bland_only = false;
                retry?
            }
        };
        if status == LpStatus::Optimal && self.residual() > 1e-6 {
            log::debug!("simplex residual {:.3e}, refactoring", self.residual());
            if let Err(e) = self.refactor() {
                log::debug!("{e}; restarting from the slack basis");
                self.reset_to_slack_basis();
            }
            self.park_nonbasics();
            self.recompute_beta();
            status = self.dual_simplex()?;
            let res = self.residual();
            if status == LpStatus::Optimal && res > 1e-6 {
                return Err(Error::Solver(format!(
                    "numerical failure: residual {res:.3e} after refactoring ({} rows, {} columns)",
                    self.m, self.n
                )));
            }
        }
        let values = self.column_values();
        let x: Vec<F> = values[..self.n].to_vec();
        let objective = x
            .iter()
            .zip(&self.cost)
            .fold(F::zero(), |acc, (&v, &c)| acc + v * c);
        Ok(LpSolution {
            status,
            x,
            objective,
            iterations: self.iterations - start,
        })
    }

    fn dual_simplex(&mut self) -> Result<LpStatus> {
        let tol = F::of(PRIMAL_TOL);
        let ptol = F::of(PIVOT_TOL);
        let limit = 50 * (self.width + 10);
        let mut stalled = 0usize;
        let mut local = 0usize;
        loop {
            local += 1;
            if local % 32 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
                return Ok(LpStatus::Interrupted);
            }
            if local > limit {
                return Err(Error::Solver(format!(
                    "simplex iteration limit {limit} exceeded ({} rows, {} columns)",
                    self.m, self.n
                )));
            }
            let bland = self.bland_only || stalled >= BLAND_AFTER;
            // leaving row
            let mut leave: Option<(usize, F)> = None;
            for i in 0..self.m {
                let b = self.basis[i];
                let v = self.beta[i];
                let infeas = if v < self.lower[b] - tol {
                    self.lower[b] - v
                } else if v > self.upper[b] + tol {
                    v - self.upper[b]
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        if bland {
                            b < self.basis[r]
                        } else {
                            infeas > best
                        }
                    }
                };
                if better {
                    leave = Some((i, infeas));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let b = self.basis[r];
            let to_lower = self.beta[r] < self.lower[b];
            let target = if to_lower { self.lower[b] } else { self.upper[b] };

            // dual ratio test
            let row = &self.tab[r * self.width..(r + 1) * self.width];
            let mut enter: Option<(usize, F, F)> = None;
            for j in 0..self.width {
                let alpha = row[j];
                if alpha.abs() <= ptol {
                    continue;
                }
                let eligible = match self.pos[j] {
                    Position::Basic(_) => false,
                    _ if self.lower[j] == self.upper[j] => false,
                    Position::AtLower => (to_lower && alpha < F::zero()) || (!to_lower && alpha > F::zero()),
                    Position::AtUpper => (to_lower && alpha > F::zero()) || (!to_lower && alpha < F::zero()),
                };
                if !eligible {
                    continue;
                }
                let ratio = self.reduced[j].abs() / alpha.abs();
                let better = match enter {
                    None => true,
                    Some((_, best, best_alpha)) => {
                        let slack = F::of(1e-12) * (F::one() + best);
                        if ratio < best - slack {
                            true
                        } else if ratio <= best + slack {
                            !bland && alpha.abs() > best_alpha.abs() * F::of(1.0 + 1e-9)
                        } else {
                            false
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, alpha));
                }
            }
            let Some((q, ratio, _)) = enter else {
                if self.bland_only || self.certifies_infeasibility(r) {
                    return Ok(LpStatus::Infeasible);
                }
                return Err(Error::Solver(format!(
                    "row {r} of the warm tableau claims infeasibility the original rows do not confirm"
                )));
            };
            if ratio <= F::of(1e-12) {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(r, q, target);
        }
    }

    fn pivot(&mut self, r: usize, q: usize, target: F) {
        self.iterations += 1;
        let w = self.width;
        let alpha_rq = self.at(r, q);
        let leaving = self.basis[r];

        // primal step
        let entering_old = self.nonbasic_value(q);
        let step = (self.beta[r] - target) / alpha_rq;
        for i in 0..self.m {
            if i != r {
                let a = self.tab[i * w + q];
                if a != F::zero() {
                    self.beta[i] = self.beta[i] - a * step;
                }
            }
        }
        self.beta[r] = entering_old + step;

        // dual step
        let theta = self.reduced[q] / alpha_rq;
        if theta != F::zero() {
            for j in 0..w {
                let a = self.tab[r * w + j];
                if a != F::zero() {
                    self.reduced[j] = self.reduced[j] - theta * a;
                }
            }
        }
        self.reduced[q] = F::zero();

        // tableau
        let inv = F::one() / alpha_rq;
        let drop = F::of(DROP_TOL);
        self.scratch.clear();
        for j in 0..w {
            let v = self.tab[r * w + j] * inv;
            if v.abs() <= drop {
                self.tab[r * w + j] = F::zero();
            } else {
                self.tab[r * w + j] = v;
                self.scratch.push(j);
            }
        }
        self.tab[r * w + q] = F::one();
        self.rhs[r] = self.rhs[r] * inv;
        let (head, tail) = self.tab.split_at_mut(r * w);
        let (pivot_row, tail) = tail.split_at_mut(w);
        for (i, chunk) in head.chunks_exact_mut(w).chain(tail.chunks_exact_mut(w)).enumerate() {
            let f = chunk[q];
            if f == F::zero() {
                continue;
            }
            for &j in &self.scratch {
                let v = chunk[j] - f * pivot_row[j];
                chunk[j] = if v.abs() <= drop { F::zero() } else { v };
            }
            chunk[q] = F::zero();
            let i = if i >= r { i + 1 } else { i };
            self.rhs[i] = self.rhs[i] - f * self.rhs[r];
        }

        self.basis[r] = q;
        self.pos[q] = Position::Basic(r);
        self.pos[leaving] = if to_bound_is_upper(target, self.lower[leaving], self.upper[leaving]) {
            Position::AtUpper
        } else {
            Position::AtLower
        };
    }

    /// Rebuilds tableau row `r` as a combination of the original rows, with
    /// the multipliers read off its slack block, and checks that no point in
    /// the current box satisfies it. Guards against drift in a tableau that
    /// has been warm-started through many bound changes.
    fn certifies_infeasibility(&self, r: usize) -> bool {
        let y = &self.tab[r * self.width + self.n..(r + 1) * self.width];
        let mut coef = vec![0.0f64; self.width];
        let mut rhs = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i].to_f64().unwrap_or(f64::NAN);
            if yi == 0.0 {
                continue;
            }
            let sign = self.row_sign[i].to_f64().unwrap_or(1.0);
            for &(j, a) in &row.terms {
                coef[j] += yi * sign * a.to_f64().unwrap_or(f64::NAN);
            }
            coef[self.n + i] = yi;
            rhs += yi * sign * row.rhs.to_f64().unwrap_or(f64::NAN);
        }
        let (mut lo, mut hi, mut scale) = (0.0f64, 0.0f64, rhs.abs());
        for (j, &c) in coef.iter().enumerate() {
            if c.abs() <= DROP_TOL {
                continue;
            }
            let (l, u) = (
                self.lower[j].to_f64().unwrap_or(f64::NAN),
                self.upper[j].to_f64().unwrap_or(f64::NAN),
            );
            let (a, b) = if c > 0.0 { (c * l, c * u) } else { (c * u, c * l) };
            lo += a;
            hi += b;
            scale = scale.max(a.abs()).max(if b.is_finite() { b.abs() } else { 0.0 });
        }
        let tol = 1e-7 * (1.0 + scale);
        // NaN anywhere fails both comparisons and so never certifies
        rhs < lo - tol || rhs > hi + tol
    }

    /// Max violation of the original rows by the current point.
    fn residual(&self) -> f64 {
        let values = self.column_values();
        let mut worst = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let mut lhs = values[self.n + i];
            for &(j, a) in &row.terms {
                lhs = lhs + self.row_sign[i] * a * values[j];
            }
            let rhs = self.row_sign[i] * row.rhs;
            let err = ((lhs - rhs).abs() / (F::one() + rhs.abs())).to_f64().unwrap_or(f64::INFINITY);
            worst = worst.max(err);
        }
        worst
    }

    /// Rebuilds the tableau from the original rows for the current basis.
    /// Cold start: rebuilds `[A | I]` from the rows with every slack basic.
    fn reset_to_slack_basis(&mut self) {
        let w = self.width;
        self.tab.iter_mut().for_each(|v| *v = F::zero());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                self.tab[i * w + j] = self.tab[i * w + j] + self.row_sign[i] * a;
            }
            self.tab[i * w + self.n + i] = F::one();
            self.rhs[i] = self.row_sign[i] * row.rhs;
        }
        for j in 0..w {
            self.pos[j] = Position::AtLower;
        }
        self.basis = (self.n..w).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            self.pos[b] = Position::Basic(i);
        }
        self.reduced.copy_from_slice(&self.cost);
        self.park_nonbasics();
    }

    fn refactor(&mut self) -> Result<()> {
        let w = self.width;
        let mut tab = vec![F::zero(); self.m * w];
        let mut rhs = vec![F::zero(); self.m];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                tab[i * w + j] = tab[i * w + j] + self.row_sign[i] * a;
            }
            tab[i * w + self.n + i] = F::one();
            rhs[i] = self.row_sign[i] * row.rhs;
        }
        let cols = self.basis.clone();
        let mut assigned = vec![false; self.m];
        let mut new_basis = vec![usize::MAX; self.m];
        for &c in &cols {
            let mut best: Option<(usize, F)> = None;
            for i in 0..self.m {
                if assigned[i] {
                    continue;
                }
                let v = tab[i * w + c].abs();
                if v > F::of(PIVOT_TOL) && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((i, v));
                }
            }
            let Some((r, _)) = best else {
                return Err(Error::Solver(format!(
                    "numerical failure: basis is singular at column {c} during refactoring"
                )));
            };
            assigned[r] = true;
            new_basis[r] = c;
            let inv = F::one() / tab[r * w + c];
            for j in 0..w {
                tab[r * w + j] = tab[r * w + j] * inv;
            }
            rhs[r] = rhs[r] * inv;
            for i in 0..self.m {
                if i == r {
                    continue;
                }
                let f = tab[i * w + c];
                if f == F::zero() {
                    continue;
                }
                for j in 0..w {
                    tab[i * w + j] = tab[i * w + j] - f * tab[r * w + j];
                }
                rhs[i] = rhs[i] - f * rhs[r];
            }
        }
        self.tab = tab;
        self.rhs = rhs;
        self.basis = new_basis;
        for j in 0..w {
            if let Position::Basic(_) = self.pos[j] {
                self.pos[j] = Position::AtLower;
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            self.pos[b] = Position::Basic(i);
        }
        for j in 0..w {
            let mut d = self.cost[j];
            for i in 0..self.m {
                let a = self.tab[i * w + j];
                if a != F::zero() {
                    d = d - self.cost[self.basis[i]] * a;
                }
            }
            self.reduced[j] = if matches!(self.pos[j], Position::Basic(_)) { F::zero() } else { d };
        }
        Ok(())
    }
}

fn to_bound_is_upper<F: LpFloat>(target: F, lower: F, upper: F) -> bool {
    target == upper && lower != upper
}

/// One-shot LP solve.
pub fn solve_lp<F: LpFloat>(p: &LpProblem<F>) -> Result<LpSolution<F>> {
    DenseSimplex::new(p)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_row() {
        // min x  s.t. x >= 0.3
        let mut p = LpProblem::<f64>::boxed(vec![1.0]);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 0.3);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.3).abs() < 1e-12);
        assert!((s.objective - 0.3).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::<f64>::boxed(vec![1.0]);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 0.6);
        p.add_row(vec![(0, 1.0)], Relation::Le, 0.4);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn negative_costs_start_at_upper_bound() {
        // min -x - y  s.t. x + y <= 1.5
        let mut p = LpProblem::<f64>::boxed(vec![-1.0, -1.0]);
        p.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.5);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 1.5).abs() < 1e-12);
    }

    #[test]
    fn equality_rows() {
        // min x0 + 2 x1 + 3 x2  s.t. x0 + x1 + x2 = 2, x0 <= 0.5
        let mut p = LpProblem::<f64>::boxed(vec![1.0, 2.0, 3.0]);
        p.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Eq, 2.0);
        p.add_row(vec![(0, 1.0)], Relation::Le, 0.5);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - (0.5 + 2.0 + 1.5)).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn warm_start_after_bound_change() {
        let mut p = LpProblem::<f64>::boxed(vec![-1.0, -2.0]);
        p.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let mut lp = DenseSimplex::new(&p).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.0).abs() < 1e-12);
        lp.set_bounds(1, 0.0, 0.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 1.0).abs() < 1e-12);
        lp.set_bounds(1, 0.0, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision_works_on_small_problems() {
        let mut p = LpProblem::<f32>::boxed(vec![1.0, 1.0]);
        p.add_row(vec![(0, 1.0), (1, 2.0)], Relation::Ge, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 0.5).abs() < 1e-5);
    }
}
