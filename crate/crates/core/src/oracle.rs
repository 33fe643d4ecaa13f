//! Exhaustive reference searches for small instances. They share no code
//! with the optimising paths and exist to check them.

use crate::graph::CanalGraph;

/// Best `(Σ nodes², pieces)` for every subgraph count, over all edge
/// partitions into connected pieces with sizes in `[lb, ub]`. Indexed by
/// subgraph count; `None` where infeasible.
pub fn enumerate_partitions(canal: &CanalGraph, lb: usize, ub: usize) -> Vec<Option<(u64, Vec<Vec<usize>>)>> {
    let e = canal.edge_count();
    assert!(e <= 12, "partition enumeration is limited to 12 edges");
    let mut best: Vec<Option<(u64, Vec<Vec<usize>>)>> = vec![None; e + 1];
    let mut labels = vec![0usize; e];
    // restricted growth strings: labels[i] <= 1 + max(labels[..i])
    fn rec(
        i: usize,
        used: usize,
        labels: &mut Vec<usize>,
        canal: &CanalGraph,
        lb: usize,
        ub: usize,
        best: &mut Vec<Option<(u64, Vec<Vec<usize>>)>>,
    ) {
        if i == labels.len() {
            let mut pieces = vec![Vec::new(); used];
            for (edge, &l) in labels.iter().enumerate() {
                pieces[l].push(edge);
            }
            if pieces.iter().any(|p| p.len() < lb || p.len() > ub) {
                return;
            }
            if !pieces.iter().all(|p| connected(canal, p)) {
                return;
            }
            let cost: u64 = pieces.iter().map(|p| (p.len() as u64 + 1).pow(2)).sum();
            if best[used].as_ref().is_none_or(|(c, _)| cost < *c) {
                best[used] = Some((cost, pieces));
            }
            return;
        }
        for l in 0..=used {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), labels, canal, lb, ub, best);
        }
    }
    if e > 0 {
        rec(0, 0, &mut labels, canal, lb, ub, &mut best);
    }
    best
}

/// Whether the edges form one connected piece (flood fill over shared
/// endpoints).
fn connected(canal: &CanalGraph, edges: &[usize]) -> bool {
    let Some(&first) = edges.first() else {
        return false;
    };
    let mut reached = vec![false; edges.len()];
    reached[0] = true;
    let mut nodes = vec![canal.edges()[first].a, canal.edges()[first].b];
    let mut changed = true;
    while changed {
        changed = false;
        for (k, &e) in edges.iter().enumerate() {
            let ed = canal.edges()[e];
            if !reached[k] && (nodes.contains(&ed.a) || nodes.contains(&ed.b)) {
                reached[k] = true;
                nodes.push(ed.a);
                nodes.push(ed.b);
                changed = true;
            }
        }
    }
    reached.iter().all(|&r| r)
}

/// Smallest horizon in `[t_min, t_max]` admitting a joint plan, and its
/// minimum objective (twice the UAV moves), found by trying every
/// combination of UAV walks and tracking reachable car placements.
pub fn joint_walk_search(inst: &crate::fleet::PlanningInstance, t_min: usize, t_max: usize) -> Option<(usize, i64)> {
    (t_min.max(1)..=t_max).find_map(|t| best_joint_walk(inst, t).map(|obj| (t, obj)))
}

fn best_joint_walk(inst: &crate::fleet::PlanningInstance, horizon: usize) -> Option<i64> {
    let canal = &inst.canal;
    let n = canal.node_count();
    let edge_of = |a: usize, b: usize| {
        canal
            .edges()
            .iter()
            .position(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    };
    let mut next: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for (a, b) in canal.edges().iter().map(|e| (e.a, e.b)).chain(inst.transit.iter().copied()) {
        next[a].push(b);
        next[b].push(a);
    }
    // (node sequence, traversed-edge mask, moves) per UAV
    let walks: Vec<Vec<(Vec<usize>, u64, usize)>> = (0..inst.k())
        .map(|k| {
            let starts: Vec<usize> = match &inst.uav_starts {
                Some(s) => vec![s[k]],
                None => (0..n).collect(),
            };
            let mut out = Vec::new();
            for s in starts {
                let mut stack = vec![(vec![s], 0u64, 0usize)];
                while let Some((path, mask, moves)) = stack.pop() {
                    if path.len() == horizon + 1 {
                        out.push((path, mask, moves));
                        continue;
                    }
                    let last = *path.last().unwrap();
                    for &w in &next[last] {
                        let mut p = path.clone();
                        p.push(w);
                        match edge_of(last, w) {
                            _ if w == last => stack.push((p, mask, moves)),
                            Some(e) => stack.push((p, mask | 1 << e, moves + 1)),
                            None => stack.push((p, mask, moves + 1)),
                        }
                    }
                }
            }
            out.sort_by_key(|w| w.2);
            out
        })
        .collect();
    let full: u64 = (1u64 << canal.edge_count()) - 1;
    let mut best: Option<usize> = None;
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(
        k: usize,
        mask: u64,
        moves: usize,
        walks: &[Vec<(Vec<usize>, u64, usize)>],
        full: u64,
        chosen: &mut Vec<usize>,
        best: &mut Option<usize>,
        cars_ok: &dyn Fn(&[&Vec<usize>]) -> bool,
    ) {
        if best.is_some_and(|b| moves >= b) {
            return;
        }
        if k == walks.len() {
            if mask == full {
                let paths: Vec<&Vec<usize>> = chosen.iter().enumerate().map(|(k, &w)| &walks[k][w].0).collect();
                if cars_ok(&paths) {
                    *best = Some(moves);
                }
            }
            return;
        }
        for (w, (_, m, mv)) in walks[k].iter().enumerate() {
            chosen.push(w);
            rec(k + 1, mask | m, moves + mv, walks, full, chosen, best, cars_ok);
            chosen.pop();
        }
    }
    let cars_ok = |uavs: &[&Vec<usize>]| cars_can_follow(inst, horizon, uavs);
    rec(0, 0, 0, &walks, full, &mut chosen, &mut best, &cars_ok);
    best.map(|m| 2 * m as i64)
}

/// Whether some car schedule keeps every UAV in range at steps `0..T`.
fn cars_can_follow(inst: &crate::fleet::PlanningInstance, horizon: usize, uavs: &[&Vec<usize>]) -> bool {
    let nr = inst.road.node_count();
    let kc = inst.k_car();
    let moves = inst.car_moves();
    let decode = |mut code: usize| {
        let mut v = vec![0; kc];
        for slot in v.iter_mut() {
            *slot = code % nr;
            code /= nr;
        }
        v
    };
    let states = nr.pow(kc as u32);
    let served = |cars: &[usize], t: usize| uavs.iter().all(|p| cars.iter().any(|&j| inst.r.get(j, p[t])));
    let mut alive: Vec<bool> = (0..states)
        .map(|s| {
            let cars = decode(s);
            inst.car_starts.as_ref().is_none_or(|st| st == &cars)
        })
        .collect();
    for t in 0..horizon {
        for (s, a) in alive.iter_mut().enumerate() {
            if *a && !served(&decode(s), t) {
                *a = false;
            }
        }
        if t + 1 == horizon {
            break;
        }
        let mut next = vec![false; states];
        for s in (0..states).filter(|&s| alive[s]) {
            let from = decode(s);
            for (s2, slot) in next.iter_mut().enumerate() {
                if *slot {
                    continue;
                }
                let to = decode(s2);
                *slot = (0..kc).all(|c| {
                    let parked = inst.parked_cars.get(c).copied().unwrap_or(false);
                    if parked {
                        from[c] == to[c]
                    } else {
                        moves.get(from[c], to[c])
                    }
                });
            }
        }
        alive = next;
    }
    alive.iter().any(|&a| a)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Cheapest assignment over all `n!` permutations (`n <= 8`).
pub fn min_assignment(n: usize, d: impl Fn(usize, usize) -> f64) -> f64 {
    assert!(n <= 8, "permutation oracle is limited to 8 cars");
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        best = best.min(p.iter().enumerate().map(|(i, &j)| d(i, j)).sum());
        if !next_permutation(&mut p) {
            return best;
        }
    }
}

/// Shortest office-anchored tour over all orders (`S <= 9`).
pub fn brute_force_tour(q: &crate::routing::QMatrix) -> f64 {
    let n = q.subgraphs();
    assert!(n <= 9, "tour oracle is limited to 9 subgraphs");
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        best = best.min(q.tour_length(&p));
        if !next_permutation(&mut p) {
            return best;
        }
    }
}
