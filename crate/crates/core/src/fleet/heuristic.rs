//! Constructive plans used to seed branch-and-bound. Unpinned fleets
//! split the edges into at most `K` paths of at most `T` edges and fly each
//! end to end. Pinned fleets (re-planning) enumerate every UAV's walks from
//! its start, which also yields the exact minimum number of moves with the
//! cars ignored: a lower bound on the program, and a proof of infeasibility
//! when no walks cover the edges. Cars are placed by dynamic programming
//! over their joint positions.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::{FleetLayout, PlanningInstance};

const BUDGET: Duration = Duration::from_secs(2);
/// Joint car states kept per step before the car search gives up.
const MAX_STATES: usize = 400_000;
/// Pinned walks are enumerated only up to this many per UAV.
const MAX_WALKS: usize = 20_000;

#[derive(Debug, Default)]
pub(crate) struct Seed {
    /// A feasible program assignment.
    pub initial: Option<Vec<bool>>,
    /// Proven lower bound on the number of UAV moves.
    pub min_moves: Option<usize>,
    /// No plan exists at this horizon.
    pub infeasible: bool,
}

pub(crate) fn seed(inst: &PlanningInstance, layout: &FleetLayout) -> Seed {
    let deadline = Instant::now() + BUDGET;
    match &inst.uav_starts {
        Some(starts) => pinned_seed(inst, layout, starts, deadline),
        None => Seed {
            initial: constructive_plan(inst, layout, deadline),
            min_moves: Some(inst.canal.edge_count()),
            infeasible: false,
        },
    }
}

/// A program assignment in which every move inspects a new edge, or `None`
/// if none was found before `deadline`.
fn constructive_plan(inst: &PlanningInstance, layout: &FleetLayout, deadline: Instant) -> Option<Vec<bool>> {
    let horizon = layout.horizon;
    let adj = inst.canal.adjacency_lists();
    let cars = CarSearch::new(inst);
    let mut found = None;
    let mut covered = vec![false; inst.canal.edge_count()];
    let mut trails: Vec<Vec<usize>> = Vec::new();
    let mut try_trails = |trails: &[Vec<usize>]| -> bool {
        if Instant::now() > deadline {
            return true;
        }
        if let Some(paths) = cars.place(inst, trails, horizon) {
            found = Some(assemble(inst, layout, trails, &paths));
            return true;
        }
        false
    };
    free_covers(&adj, inst.k(), horizon, &mut covered, &mut trails, &mut try_trails);
    found
}

struct Walk {
    nodes: Vec<usize>,
    mask: u64,
}

/// Walks of at most `len` moves from `from` whose last move inspects an
/// edge the walk had not crossed before, plus the empty walk.
fn walks_from(adj: &[Vec<(usize, Option<usize>)>], from: usize, len: usize) -> Option<Vec<Walk>> {
    let mut out = vec![Walk {
        nodes: vec![from],
        mask: 0,
    }];
    let mut frontier = vec![(vec![from], 0u64)];
    for _ in 0..len {
        let mut next = Vec::new();
        for (nodes, mask) in &frontier {
            let last = *nodes.last().expect("nonempty");
            for &(nb, e) in &adj[last] {
                let mut n2 = nodes.clone();
                n2.push(nb);
                let bit = e.map_or(0, |e| 1u64 << e);
                if bit != 0 && mask & bit == 0 {
                    out.push(Walk {
                        nodes: n2.clone(),
                        mask: mask | bit,
                    });
                }
                next.push((n2, mask | bit));
            }
        }
        if out.len() > MAX_WALKS {
            return None;
        }
        frontier = next;
    }
    out.sort_by_key(|w| w.nodes.len());
    Some(out)
}

fn pinned_seed(inst: &PlanningInstance, layout: &FleetLayout, starts: &[usize], deadline: Instant) -> Seed {
    let n_e = inst.canal.edge_count();
    if n_e > 63 {
        return Seed::default();
    }
    let full = (1u64 << n_e) - 1;
    let adj = inst.uav_neighbours();
    let Some(walks) = starts
        .iter()
        .map(|&s| walks_from(&adj, s, layout.horizon))
        .collect::<Option<Vec<_>>>()
    else {
        return Seed::default();
    };
    // fewest moves covering everything, cars ignored
    let mut best: HashMap<u64, usize> = HashMap::from([(0, 0)]);
    for ws in &walks {
        let mut next: HashMap<u64, usize> = HashMap::new();
        for (&mask, &moves) in &best {
            for w in ws {
                let m = moves + w.nodes.len() - 1;
                let slot = next.entry(mask | w.mask).or_insert(usize::MAX);
                *slot = (*slot).min(m);
            }
            if Instant::now() > deadline {
                return Seed::default();
            }
        }
        best = next;
    }
    let Some(&bound) = best.get(&full) else {
        log::debug!("T = {}: the UAVs alone cannot reach every edge", layout.horizon);
        return Seed {
            infeasible: true,
            ..Seed::default()
        };
    };
    let cars = CarSearch::new(inst);
    let mut initial = None;
    let budget = layout.k * layout.horizon;
    'targets: for target in bound..=budget {
        let mut pick: Vec<usize> = Vec::new();
        let mut stack = vec![0usize];
        // iterative depth-first search over one walk per UAV
        while let Some(&i) = stack.last() {
            if Instant::now() > deadline {
                break 'targets;
            }
            let k = stack.len() - 1;
            if i >= walks[k].len() {
                stack.pop();
                if pick.pop().is_some() {
                    *stack.last_mut().expect("parent") += 1;
                }
                continue;
            }
            let used: usize = pick.iter().enumerate().map(|(u, &j)| walks[u][j].nodes.len() - 1).sum();
            if used + walks[k][i].nodes.len() - 1 > target {
                stack.pop();
                if pick.pop().is_some() {
                    *stack.last_mut().expect("parent") += 1;
                }
                continue;
            }
            if k + 1 < walks.len() {
                pick.push(i);
                stack.push(0);
                continue;
            }
            let mask = pick.iter().enumerate().fold(walks[k][i].mask, |m, (u, &j)| m | walks[u][j].mask);
            if mask == full && used + walks[k][i].nodes.len() - 1 == target {
                let trails: Vec<Vec<usize>> = pick
                    .iter()
                    .enumerate()
                    .map(|(u, &j)| walks[u][j].nodes.clone())
                    .chain(std::iter::once(walks[k][i].nodes.clone()))
                    .collect();
                if let Some(paths) = cars.place(inst, &trails, layout.horizon) {
                    initial = Some(assemble(inst, layout, &trails, &paths));
                    break 'targets;
                }
            }
            *stack.last_mut().expect("nonempty") += 1;
        }
    }
    Seed {
        initial,
        min_moves: Some(bound),
        infeasible: false,
    }
}

/// Node sequences of simple paths starting at `from` over uncovered edges,
/// at most `len` edges long, including the empty path.
fn paths_from(adj: &[Vec<(usize, usize)>], covered: &[bool], from: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![from]];
    let mut frontier = vec![vec![from]];
    for _ in 0..len {
        let mut next = Vec::new();
        for p in &frontier {
            let last = *p.last().expect("nonempty");
            let back = p.len().checked_sub(2).map(|i| p[i]);
            for &(nb, e) in &adj[last] {
                if !covered[e] && Some(nb) != back {
                    let mut q = p.clone();
                    q.push(nb);
                    next.push(q);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn path_edges(adj: &[Vec<(usize, usize)>], p: &[usize]) -> Vec<usize> {
    p.windows(2)
        .map(|w| adj[w[0]].iter().find(|&&(nb, _)| nb == w[1]).expect("adjacent").1)
        .collect()
}

fn set(covered: &mut [bool], edges: &[usize], v: bool) {
    for &e in edges {
        covered[e] = v;
    }
}

/// Unpinned UAVs: the lowest uncovered edge must lie on some path; every
/// path is tried in both directions.
fn free_covers(
    adj: &[Vec<(usize, usize)>],
    k: usize,
    horizon: usize,
    covered: &mut Vec<bool>,
    trails: &mut Vec<Vec<usize>>,
    done: &mut dyn FnMut(&[Vec<usize>]) -> bool,
) -> bool {
    let Some(e) = covered.iter().position(|c| !c) else {
        return with_idle(k, trails, done);
    };
    if trails.len() == k {
        return false;
    }
    let (a, b) = adj
        .iter()
        .enumerate()
        .find_map(|(i, l)| l.iter().find(|&&(_, x)| x == e).map(|&(nb, _)| (i, nb)))
        .expect("edge has endpoints");
    covered[e] = true;
    let left = paths_from(adj, covered, a, horizon - 1);
    for l in &left {
        let le = path_edges(adj, l);
        set(covered, &le, true);
        for r in paths_from(adj, covered, b, horizon - le.len() - 1) {
            let re = path_edges(adj, &r);
            set(covered, &re, true);
            let mut path: Vec<usize> = l.iter().rev().copied().collect();
            path.extend(&r);
            for dir in [false, true] {
                let mut p = path.clone();
                if dir {
                    p.reverse();
                }
                trails.push(p);
                let stop = free_covers(adj, k, horizon, covered, trails, done);
                trails.pop();
                if stop {
                    set(covered, &re, false);
                    set(covered, &le, false);
                    covered[e] = false;
                    return true;
                }
            }
            set(covered, &re, false);
        }
        set(covered, &le, false);
    }
    covered[e] = false;
    false
}

/// UAVs left without a path hover at a path endpoint.
fn with_idle(k: usize, trails: &mut Vec<Vec<usize>>, done: &mut dyn FnMut(&[Vec<usize>]) -> bool) -> bool {
    let busy = trails.len();
    if busy == k {
        return done(trails);
    }
    let spots: Vec<usize> = trails.iter().flat_map(|t| [t[0], *t.last().expect("nonempty")]).collect();
    for &spot in &spots {
        trails.resize(k, vec![spot]);
        if done(trails) {
            trails.truncate(busy);
            return true;
        }
    }
    trails.truncate(busy);
    false
}

struct CarSearch {
    /// Predecessors of each road node under the car move relation.
    pred: Vec<Vec<usize>>,
}

impl CarSearch {
    fn new(inst: &PlanningInstance) -> Self {
        let a = inst.car_moves();
        let pred = (0..inst.road.node_count()).map(|i| a.column(i).collect()).collect();
        Self { pred }
    }

    /// Car paths (`T + 1` nodes each) keeping every UAV linked at every
    /// step before the last, or `None`.
    fn place(&self, inst: &PlanningInstance, trails: &[Vec<usize>], horizon: usize) -> Option<Vec<Vec<usize>>> {
        let n_road = inst.road.node_count();
        let k_car = inst.k_car();
        let uav_at = |k: usize, t: usize| trails[k][t.min(trails[k].len() - 1)];
        let all = (1u64 << trails.len()) - 1;
        let masks: Vec<Vec<u64>> = (0..horizon)
            .map(|t| {
                (0..n_road)
                    .map(|j| {
                        (0..trails.len())
                            .filter(|&k| inst.r.get(j, uav_at(k, t)))
                            .fold(0u64, |m, k| m | 1 << k)
                    })
                    .collect()
            })
            .collect();
        let fixed = |c: usize| inst.car_starts.as_ref().map(|s| s[c]);
        let parked = |c: usize| inst.parked_cars.get(c).copied().unwrap_or(false);

        // states at t = 0
        let mut layers: Vec<HashMap<Vec<usize>, Vec<usize>>> = Vec::new();
        let mut first = HashMap::new();
        let choices: Vec<Vec<usize>> = (0..k_car)
            .map(|c| match fixed(c) {
                Some(j) => vec![j],
                None => (0..n_road).filter(|&j| masks[0][j] != 0).collect(),
            })
            .collect();
        for_each_tuple(&choices, &mut |tuple| {
            if tuple.iter().fold(0, |m, &j| m | masks[0][j]) == all {
                first.insert(tuple.to_vec(), Vec::new());
            }
            first.len() < MAX_STATES
        });
        if first.is_empty() {
            return None;
        }
        layers.push(first);
        for t in 1..horizon {
            let prev = &layers[t - 1];
            let mut next = HashMap::new();
            let choices: Vec<Vec<usize>> = (0..k_car).map(|_| (0..n_road).filter(|&j| masks[t][j] != 0).collect()).collect();
            for_each_tuple(&choices, &mut |tuple| {
                if tuple.iter().fold(0, |m, &j| m | masks[t][j]) != all {
                    return true;
                }
                let opts: Vec<Vec<usize>> = tuple
                    .iter()
                    .enumerate()
                    .map(|(c, &j)| if parked(c) { vec![j] } else { self.pred[j].clone() })
                    .collect();
                let mut parent = None;
                for_each_tuple(&opts, &mut |q| {
                    if prev.contains_key(q) {
                        parent = Some(q.to_vec());
                        return false;
                    }
                    true
                });
                if let Some(p) = parent {
                    next.insert(tuple.to_vec(), p);
                }
                next.len() < MAX_STATES
            });
            if next.is_empty() {
                return None;
            }
            layers.push(next);
        }
        let mut state = layers[horizon - 1].keys().min().expect("nonempty").clone();
        let mut seq = vec![state.clone(); horizon + 1];
        for t in (1..horizon).rev() {
            state = layers[t][&state].clone();
            seq[t - 1] = state.clone();
        }
        Some((0..k_car).map(|c| seq.iter().map(|s| s[c]).collect()).collect())
    }
}

/// Calls `f` on every tuple of the cartesian product until it returns false.
fn for_each_tuple(choices: &[Vec<usize>], f: &mut dyn FnMut(&[usize]) -> bool) {
    fn go(choices: &[Vec<usize>], cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == choices.len() {
            return f(cur);
        }
        for &v in &choices[cur.len()] {
            cur.push(v);
            let go_on = go(choices, cur, f);
            cur.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    go(choices, &mut Vec::with_capacity(choices.len()), f);
}

fn assemble(inst: &PlanningInstance, l: &FleetLayout, trails: &[Vec<usize>], cars: &[Vec<usize>]) -> Vec<bool> {
    let mut a = vec![false; l.var_count()];
    let uav_at = |k: usize, t: usize| trails[k][t.min(trails[k].len() - 1)];
    let adj = inst.uav_neighbours();
    let mut inspected = vec![false; l.edges];
    for k in 0..l.k {
        for t in 0..=l.horizon {
            a[l.x(k, t, uav_at(k, t))] = true;
        }
        for t in 0..l.horizon {
            let (u, v) = (uav_at(k, t), uav_at(k, t + 1));
            if u != v {
                let e = adj[u].iter().find(|&&(nb, _)| nb == v).expect("adjacent").1;
                if let Some(e) = e.filter(|&e| !std::mem::replace(&mut inspected[e], true)) {
                    a[l.w(e, k, t, if u < v { 1 } else { 2 })] = true;
                }
            }
        }
    }
    for (c, path) in cars.iter().enumerate() {
        for (t, &j) in path.iter().enumerate() {
            a[l.y(c, t, j)] = true;
        }
    }
    for k in 0..l.k {
        for t in 0..l.horizon {
            let c = (0..l.k_car)
                .find(|&c| inst.r.get(cars[c][t], uav_at(k, t)))
                .expect("car search links every UAV");
            a[l.omega(k, t, c)] = true;
        }
    }
    a
}
