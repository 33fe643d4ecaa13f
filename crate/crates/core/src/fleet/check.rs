use super::{FleetPlan, PlanningInstance};
use crate::{Error, Result};

fn fail<T>(msg: String) -> Result<T> {
    Err(Error::Planning(format!("plan check failed: {msg}")))
}

/// Walks the plan and confirms every requirement directly on the paths:
/// path shapes, adjacency, battery, coverage exactly once, coverage agreeing
/// with the moves, a car in range of each UAV at each step, and the
/// objective. Nothing here is read from the solver.
pub fn check_plan(inst: &PlanningInstance, plan: &FleetPlan) -> Result<()> {
    let t_len = plan.horizon + 1;
    if plan.horizon > inst.m {
        return fail(format!("horizon {} exceeds battery {}", plan.horizon, inst.m));
    }
    if plan.uav_paths.len() != inst.k() || plan.car_paths.len() != inst.k_car() {
        return fail("vehicle count mismatch".into());
    }
    let (nc, nr) = (inst.canal.node_count(), inst.road.node_count());
    let adjacent = |a: usize, b: usize| {
        a == b
            || inst
                .canal
                .edges()
                .iter()
                .map(|e| (e.a, e.b))
                .chain(inst.transit.iter().copied())
                .any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    };
    for (k, path) in plan.uav_paths.iter().enumerate() {
        if path.len() != t_len || path.iter().any(|&i| i >= nc) {
            return fail(format!("UAV {k} path has the wrong shape"));
        }
        if let Some(s) = &inst.uav_starts {
            if path[0] != s[k] {
                return fail(format!("UAV {k} does not start at its pinned node"));
            }
        }
        if let Some(t) = path.windows(2).position(|w| !adjacent(w[0], w[1])) {
            return fail(format!("UAV {k} jumps between non-adjacent nodes at t = {t}"));
        }
    }
    let moves = inst.car_moves();
    for (c, path) in plan.car_paths.iter().enumerate() {
        if path.len() != t_len || path.iter().any(|&j| j >= nr) {
            return fail(format!("car {c} path has the wrong shape"));
        }
        if let Some(s) = &inst.car_starts {
            if path[0] != s[c] {
                return fail(format!("car {c} does not start at its pinned node"));
            }
        }
        let parked = inst.parked_cars.get(c).copied().unwrap_or(false);
        for t in 0..plan.horizon {
            let (a, b) = (path[t], path[t + 1]);
            if (parked && a != b) || !moves.get(a, b) {
                return fail(format!("car {c} cannot drive {a} -> {b} at t = {t}"));
            }
        }
    }
    let mut covered = vec![0usize; inst.canal.edge_count()];
    for cv in &plan.coverage {
        let Some(edge) = inst.canal.edges().get(cv.edge) else {
            return fail(format!("coverage names missing edge {}", cv.edge));
        };
        if cv.uav >= inst.k() || cv.t >= plan.horizon {
            return fail(format!("coverage entry {cv:?} out of range"));
        }
        let (lo, hi) = (edge.a.min(edge.b), edge.a.max(edge.b));
        let (from, to) = match cv.dir {
            1 => (lo, hi),
            2 => (hi, lo),
            d => return fail(format!("direction {d} is not 1 or 2")),
        };
        let p = &plan.uav_paths[cv.uav];
        if p[cv.t] != from || p[cv.t + 1] != to {
            return fail(format!("UAV {} does not fly edge {} at t = {}", cv.uav, cv.edge, cv.t));
        }
        covered[cv.edge] += 1;
    }
    if let Some(e) = covered.iter().position(|&n| n != 1) {
        return fail(format!("edge {e} covered {} times", covered[e]));
    }
    for k in 0..inst.k() {
        for t in 0..plan.horizon {
            let Some(link) = plan.comm.iter().find(|l| l.uav == k && l.t == t) else {
                return fail(format!("UAV {k} has no car link at t = {t}"));
            };
            if link.car >= inst.k_car() || !inst.r.get(plan.car_paths[link.car][t], plan.uav_paths[k][t]) {
                return fail(format!("UAV {k} is out of range of car {} at t = {t}", link.car));
            }
        }
    }
    if plan.objective != 2 * plan.moves() as i64 {
        return fail(format!("objective {} is not twice the {} moves", plan.objective, plan.moves()));
    }
    Ok(())
}
