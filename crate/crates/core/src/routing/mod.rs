//! Car routing between subgraphs: transfer costs from optimal leave→start
//! matchings, then an office-anchored asymmetric tour.

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{shortest_path, shortest_path_matrix, RoadGraph};
use crate::model::{BinaryProgram, Relation, VarId, VarKind, VarLabel};
use crate::solver::{solve, SolveConfig, SolveStatus};
use crate::{Error, Result};

/// Road nodes (indices into the full road graph) where each car starts and
/// ends its work on one subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferEndpoints {
    pub start: Vec<usize>,
    pub leave: Vec<usize>,
}

impl TransferEndpoints {
    /// The office as a pseudo-subgraph: every car starts and leaves there.
    pub fn office(node: usize, k_car: usize) -> Self {
        Self {
            start: vec![node; k_car],
            leave: vec![node; k_car],
        }
    }
}

/// Minimum-cost perfect matching of leave nodes to start nodes; `d(i, j)`
/// is the distance from `leave[i]` to `start[j]` (`+inf` if unreachable).
/// Returns the cost and, per leaving car, the start slot it takes.
pub fn transfer_cost(n: usize, d: impl Fn(usize, usize) -> f64) -> Result<(f64, Vec<usize>)> {
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let mut p = BinaryProgram::<f64>::new("transfer");
    let mut var = vec![vec![None; n]; n];
    for (i, row) in var.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let c = d(i, j);
            if c.is_finite() {
                let v = p.add_var(VarLabel::new("x", [i, j]));
                p.objective.add_linear(v, c);
                *slot = Some(v);
            }
        }
    }
    for i in 0..n {
        p.add_constraint(var[i].iter().flatten().map(|&v| (v, 1.0)), Relation::Eq, 1.0);
    }
    for j in 0..n {
        p.add_constraint((0..n).filter_map(|i| var[i][j]).map(|v| (v, 1.0)), Relation::Eq, 1.0);
    }
    let res = solve(&p, &SolveConfig::default())?;
    let Some(a) = res.assignment else {
        return Err(Error::Routing("subgraphs not road-connected".into()));
    };
    let mut assignment = vec![usize::MAX; n];
    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..n {
            if var[i][j].is_some_and(|v| a[v.0]) {
                assignment[i] = j;
                cost += d(i, j);
            }
        }
    }
    Ok((cost, assignment))
}

/// Square transfer-cost matrix; index 0 is the office, `s + 1` subgraph `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    size: usize,
    data: Vec<f64>,
}

impl QMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Usage("Q matrix must be square".into()));
        }
        Ok(Self {
            size,
            data: rows.concat(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn subgraphs(&self) -> usize {
        self.size - 1
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.size + b]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    /// Length of office → `order` → office.
    pub fn tour_length(&self, order: &[usize]) -> f64 {
        let mut at = 0;
        let mut total = 0.0;
        for &s in order {
            total += self.get(at, s + 1);
            at = s + 1;
        }
        total + self.get(at, 0)
    }
}

fn stops<'a>(endpoints: &'a [TransferEndpoints], office: &'a TransferEndpoints, a: usize) -> &'a TransferEndpoints {
    if a == 0 {
        office
    } else {
        &endpoints[a - 1]
    }
}

/// `Q(A, B)` = optimal matching cost from A's leave nodes to B's start
/// nodes; entries are computed in parallel.
pub fn build_q_matrix(endpoints: &[TransferEndpoints], office: usize, road: &RoadGraph) -> Result<QMatrix> {
    let k_car = endpoints.first().map_or(1, |e| e.start.len());
    if endpoints.iter().any(|e| e.start.len() != k_car || e.leave.len() != k_car) {
        return Err(Error::Usage("every subgraph needs one start and one leave node per car".into()));
    }
    let office_stops = TransferEndpoints::office(office, k_car);
    let mut sources: Vec<usize> = endpoints.iter().flat_map(|e| e.leave.iter().copied()).collect();
    let mut targets: Vec<usize> = endpoints.iter().flat_map(|e| e.start.iter().copied()).collect();
    sources.push(office);
    targets.push(office);
    sources.sort_unstable();
    sources.dedup();
    targets.sort_unstable();
    targets.dedup();
    let table = shortest_path_matrix(road, &sources, &targets);
    let dist = |from: usize, to: usize| {
        let s = sources.binary_search(&from).expect("source listed");
        let t = targets.binary_search(&to).expect("target listed");
        table.get(s, t)
    };
    let size = endpoints.len() + 1;
    let cells: Vec<(usize, usize)> = (0..size).flat_map(|a| (0..size).map(move |b| (a, b))).collect();
    let data = cells
        .par_iter()
        .map(|&(a, b)| {
            if a == b {
                return Ok(0.0);
            }
            let (from, to) = (stops(endpoints, &office_stops, a), stops(endpoints, &office_stops, b));
            transfer_cost(k_car, |i, j| dist(from.leave[i], to.start[j]))
                .map(|(c, _)| c)
                .map_err(|e| Error::Routing(format!("{} -> {}: {e}", stop_name(a), stop_name(b))))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(QMatrix { size, data })
}

fn stop_name(a: usize) -> String {
    if a == 0 {
        "office".into()
    } else {
        format!("subgraph {}", a - 1)
    }
}

/// Variable layout of the tour program: `x[s,t]` (subgraph `s` at position
/// `t`) then the flow variables `z[a,b,t]` for consecutive positions.
pub struct TourLayout {
    pub subgraphs: usize,
    pairs: Vec<(usize, usize, usize, VarId)>,
}

impl TourLayout {
    pub fn x(&self, s: usize, t: usize) -> usize {
        s * self.subgraphs + t
    }
}

/// Position-indexed tour program with the office fixed before position 0
/// and after position `S - 1`. The product `x[a,t]·x[b,t+1]` is carried by
/// `z[a,b,t] >= 0` with `Σ_b z[a,b,t] = x[a,t]` and `Σ_a z[a,b,t] = x[b,t+1]`,
/// which equals the product whenever `x` is a permutation.
pub fn build_tour_program(q: &QMatrix) -> (BinaryProgram<f64>, TourLayout) {
    let s_count = q.subgraphs();
    let mut p = BinaryProgram::<f64>::new("tour");
    for s in 0..s_count {
        for t in 0..s_count {
            p.add_var(VarLabel::new("x", [s, t]));
        }
    }
    let x = |s: usize, t: usize| VarId(s * s_count + t);
    for s in 0..s_count {
        p.add_constraint((0..s_count).map(|t| (x(s, t), 1.0)), Relation::Eq, 1.0);
    }
    for t in 0..s_count {
        p.add_constraint((0..s_count).map(|s| (x(s, t), 1.0)), Relation::Eq, 1.0);
    }
    for s in 0..s_count {
        p.objective.add_linear(x(s, 0), q.get(0, s + 1));
        p.objective.add_linear(x(s, s_count - 1), q.get(s + 1, 0));
    }
    let mut pairs = Vec::new();
    for t in 0..s_count.saturating_sub(1) {
        for a in 0..s_count {
            for b in 0..s_count {
                if a != b {
                    let z = p.add_var_of_kind(VarLabel::new("z", [a, b, t]), VarKind::Auxiliary);
                    p.objective.add_linear(z, q.get(a + 1, b + 1));
                    pairs.push((a, b, t, z));
                }
            }
        }
        for a in 0..s_count {
            let out = pairs.iter().filter(|&&(pa, _, pt, _)| pa == a && pt == t).map(|&(.., z)| (z, 1.0));
            p.add_constraint(out.chain([(x(a, t), -1.0)]), Relation::Eq, 0.0);
        }
        for b in 0..s_count {
            let inn = pairs.iter().filter(|&&(_, pb, pt, _)| pb == b && pt == t).map(|&(.., z)| (z, 1.0));
            p.add_constraint(inn.chain([(x(b, t + 1), -1.0)]), Relation::Eq, 0.0);
        }
    }
    p.objective.canonicalize();
    (
        p,
        TourLayout {
            subgraphs: s_count,
            pairs,
        },
    )
}

/// Visiting order of the subgraphs (0-based) and its length.
#[derive(Clone, Debug, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
    /// Whether the order is proven shortest.
    pub optimal: bool,
}

/// Largest tour program (rows × columns of its tableau) handed to the
/// solver; beyond it the dynamic program or local search decides.
pub const MAX_TOUR_PROGRAM_CELLS: usize = 2_500_000;

/// Budget for proving a tour optimal with branch-and-bound.
const TOUR_TIME_LIMIT: Duration = Duration::from_secs(120);

fn tour_assignment(layout: &TourLayout, order: &[usize], vars: usize) -> Vec<bool> {
    let mut a = vec![false; vars];
    for (t, &s) in order.iter().enumerate() {
        a[layout.x(s, t)] = true;
    }
    for &(pa, pb, t, z) in &layout.pairs {
        a[z.0] = order[t] == pa && order[t + 1] == pb;
    }
    a
}

/// Shortest office-anchored visiting order. The tour program is solved
/// from a local-search start and, up to 12 subgraphs, checked against the
/// dynamic program. Programs too large for the solver fall back to the
/// dynamic program, and beyond its reach to the local-search tour.
pub fn solve_atsp(q: &QMatrix) -> Result<Tour> {
    let s_count = q.subgraphs();
    if (0..q.size()).any(|a| (0..q.size()).any(|b| !q.get(a, b).is_finite())) {
        return Err(Error::Routing("transfer matrix has unreachable entries".into()));
    }
    if s_count == 0 {
        return Ok(Tour {
            order: Vec::new(),
            length: 0.0,
            optimal: true,
        });
    }
    let start = local_search_tour(q);
    let (p, layout) = build_tour_program(q);
    let cells = p.constraints.len() * (p.var_count() + p.constraints.len());
    if cells > MAX_TOUR_PROGRAM_CELLS {
        if s_count <= HELD_KARP_MAX {
            log::info!("tour program too large ({cells} tableau cells), using the dynamic program");
            let (length, order) = held_karp(q)?;
            return Ok(Tour {
                order,
                length,
                optimal: true,
            });
        }
        log::warn!("{s_count} subgraphs: tour from local search, not proven shortest");
        let length = q.tour_length(&start);
        return Ok(Tour {
            order: start,
            length,
            optimal: false,
        });
    }
    let cfg = SolveConfig {
        time_limit: TOUR_TIME_LIMIT,
        initial: Some(tour_assignment(&layout, &start, p.var_count())),
        ..SolveConfig::default()
    };
    let res = solve(&p, &cfg)?;
    let a = match (res.status, res.assignment) {
        (SolveStatus::Optimal | SolveStatus::TimedOut, Some(a)) => a,
        (status, _) => return Err(Error::Routing(format!("tour program ended {status:?}"))),
    };
    let order: Vec<usize> = (0..s_count)
        .map(|t| (0..s_count).find(|&s| a[layout.x(s, t)]).expect("one subgraph per position"))
        .collect();
    let length = q.tour_length(&order);
    let optimal = res.status == SolveStatus::Optimal;
    if !optimal {
        if s_count <= HELD_KARP_MAX {
            log::info!("tour program not proven optimal in time, using the dynamic program");
            let (length, order) = held_karp(q)?;
            return Ok(Tour {
                order,
                length,
                optimal: true,
            });
        }
        log::warn!("tour not proven shortest within {TOUR_TIME_LIMIT:?}");
    }
    if optimal && s_count <= 12 {
        let (dp, _) = held_karp(q)?;
        if (dp - length).abs() > 1e-9 * (1.0 + dp.abs()) {
            return Err(Error::Routing(format!(
                "tour program length {length} disagrees with the dynamic program {dp}"
            )));
        }
    }
    Ok(Tour { order, length, optimal })
}

/// Nearest-neighbour order improved by moving runs of up to three
/// subgraphs and reversing segments until no change shortens the tour.
pub fn local_search_tour(q: &QMatrix) -> Vec<usize> {
    let n = q.subgraphs();
    let mut order = Vec::with_capacity(n);
    let mut left: Vec<usize> = (0..n).collect();
    let mut at = 0;
    while !left.is_empty() {
        let k = (0..left.len())
            .min_by(|&i, &j| q.get(at, left[i] + 1).total_cmp(&q.get(at, left[j] + 1)))
            .expect("non-empty");
        let s = left.remove(k);
        order.push(s);
        at = s + 1;
    }
    let mut best = q.tour_length(&order);
    let mut improved = true;
    while improved {
        improved = false;
        for len in 1..=3.min(n) {
            for i in 0..=n - len {
                for j in 0..=n - len {
                    if i == j {
                        continue;
                    }
                    let mut cand = order.clone();
                    let run: Vec<usize> = cand.drain(i..i + len).collect();
                    cand.splice(j..j, run);
                    let l = q.tour_length(&cand);
                    if l < best - 1e-9 {
                        (order, best, improved) = (cand, l, true);
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 2..=n {
                let mut cand = order.clone();
                cand[i..j].reverse();
                let l = q.tour_length(&cand);
                if l < best - 1e-9 {
                    (order, best, improved) = (cand, l, true);
                }
            }
        }
    }
    order
}

pub const HELD_KARP_MAX: usize = 20;

/// Exact office-anchored tour by subset dynamic programming.
pub fn held_karp(q: &QMatrix) -> Result<(f64, Vec<usize>)> {
    let n = q.subgraphs();
    if n > HELD_KARP_MAX {
        return Err(Error::Usage(format!("dynamic program supports at most {HELD_KARP_MAX} subgraphs, got {n}")));
    }
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let full = 1usize << n;
    let mut cost = vec![f64::INFINITY; full * n];
    let mut prev = vec![usize::MAX; full * n];
    for s in 0..n {
        cost[(1 << s) * n + s] = q.get(0, s + 1);
    }
    for mask in 1..full {
        for last in 0..n {
            let c = cost[mask * n + last];
            if mask & (1 << last) == 0 || !c.is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | 1 << next;
                let v = c + q.get(last + 1, next + 1);
                if v < cost[m2 * n + next] {
                    cost[m2 * n + next] = v;
                    prev[m2 * n + next] = last;
                }
            }
        }
    }
    let (mut best, mut last) = (f64::INFINITY, 0);
    for s in 0..n {
        let v = cost[(full - 1) * n + s] + q.get(s + 1, 0);
        if v < best {
            best = v;
            last = s;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full - 1;
    while mask != 0 {
        order.push(last);
        let p = prev[mask * n + last];
        mask &= !(1 << last);
        last = p;
    }
    order.reverse();
    Ok((best, order))
}

/// One car's drive between consecutive stops.
#[derive(Clone, Debug, PartialEq)]
pub struct CarLeg {
    pub car: usize,
    /// Road node indices.
    pub path: Vec<usize>,
    pub length: f64,
}

/// Drives between two consecutive stops (`None` is the office).
#[derive(Clone, Debug, PartialEq)]
pub struct Leg {
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub cars: Vec<CarLeg>,
}

impl Leg {
    /// The longest car drive, i.e. when the last car arrives.
    pub fn makespan(&self) -> f64 {
        self.cars.iter().map(|c| c.length).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TourPlan {
    pub order: Vec<usize>,
    pub total_length: f64,
    pub legs: Vec<Leg>,
    pub optimal: bool,
}

/// Materialises the shortest road path of every car on every leg of `tour`
/// under the optimal matching of that leg.
pub fn car_legs(tour: &Tour, endpoints: &[TransferEndpoints], office: usize, road: &RoadGraph) -> Result<TourPlan> {
    let k_car = endpoints.first().map_or(1, |e| e.start.len());
    let office_stops = TransferEndpoints::office(office, k_car);
    let stops_seq: Vec<usize> = std::iter::once(0)
        .chain(tour.order.iter().map(|s| s + 1))
        .chain(std::iter::once(0))
        .collect();
    let mut legs = Vec::with_capacity(stops_seq.len() - 1);
    for w in stops_seq.windows(2) {
        let (from, to) = (stops(endpoints, &office_stops, w[0]), stops(endpoints, &office_stops, w[1]));
        let paths: Vec<Vec<Option<(f64, Vec<usize>)>>> = from
            .leave
            .iter()
            .map(|&a| to.start.iter().map(|&b| shortest_path(road, a, b)).collect())
            .collect();
        let (_, matching) = transfer_cost(k_car, |i, j| paths[i][j].as_ref().map_or(f64::INFINITY, |p| p.0))
            .map_err(|e| Error::Routing(format!("{} -> {}: {e}", stop_name(w[0]), stop_name(w[1]))))?;
        let cars = matching
            .iter()
            .enumerate()
            .map(|(car, &j)| {
                let (length, path) = paths[car][j].clone().expect("matched pair is reachable");
                CarLeg { car, path, length }
            })
            .collect();
        legs.push(Leg {
            from: w[0].checked_sub(1),
            to: w[1].checked_sub(1),
            cars,
        });
    }
    let total_length = legs.iter().map(|l| l.cars.iter().map(|c| c.length).sum::<f64>()).sum();
    Ok(TourPlan {
        order: tour.order.clone(),
        total_length,
        legs,
        optimal: tour.optimal,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourPlanFile {
    pub order: Vec<usize>,
    pub total_m: f64,
    pub legs: Vec<LegRecord>,
}

/// `fromSub`/`toSub` are subgraph indices; `null` is the office.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct LegRecord {
    pub from_sub: Option<usize>,
    pub to_sub: Option<usize>,
    pub cars: Vec<CarRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarRecord {
    pub car: usize,
    pub path: Vec<String>,
}

impl TourPlan {
    pub fn to_file(&self, road: &RoadGraph) -> TourPlanFile {
        TourPlanFile {
            order: self.order.clone(),
            total_m: self.total_length,
            legs: self
                .legs
                .iter()
                .map(|l| LegRecord {
                    from_sub: l.from,
                    to_sub: l.to,
                    cars: l
                        .cars
                        .iter()
                        .map(|c| CarRecord {
                            car: c.car,
                            path: c.path.iter().map(|&j| road.node(j).id.clone()).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn max_transfer(&self) -> f64 {
        self.legs.iter().map(Leg::makespan).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeoNode;

    #[test]
    fn single_car_transfer() {
        let (c, a) = transfer_cost(1, |_, _| 7.5).unwrap();
        assert_eq!((c, a), (7.5, vec![0]));
    }

    #[test]
    fn two_car_transfer() {
        let d = [[1.0, 2.0], [3.0, 1.0]];
        let (c, a) = transfer_cost(2, |i, j| d[i][j]).unwrap();
        assert_eq!(c, 2.0);
        assert_eq!(a, vec![0, 1]);
    }

    #[test]
    fn unreachable_transfer() {
        let err = transfer_cost(2, |i, _| if i == 0 { f64::INFINITY } else { 1.0 }).unwrap_err();
        assert!(err.to_string().contains("not road-connected"), "{err}");
    }

    #[test]
    fn one_subgraph_tour() {
        let q = QMatrix::from_rows(&[vec![0.0, 4.0], vec![6.0, 0.0]]).unwrap();
        let t = solve_atsp(&q).unwrap();
        assert_eq!(t.order, vec![0]);
        assert_eq!(t.length, 10.0);
    }

    #[test]
    fn three_subgraph_tour() {
        let q = QMatrix::from_rows(&[
            vec![0.0, 1.0, 5.0, 5.0],
            vec![5.0, 0.0, 2.0, 100.0],
            vec![100.0, 5.0, 0.0, 2.0],
            vec![5.0, 2.0, 100.0, 0.0],
        ])
        .unwrap();
        let t = solve_atsp(&q).unwrap();
        let (hk, order) = held_karp(&q).unwrap();
        assert_eq!(t.length, hk);
        assert_eq!(q.tour_length(&order), hk);
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = orders.iter().map(|o| q.tour_length(o)).fold(f64::INFINITY, f64::min);
        assert_eq!(hk, best);
    }

    #[test]
    fn held_karp_limit() {
        let q = QMatrix::from_rows(&vec![vec![1.0; 22]; 22]).unwrap();
        assert!(matches!(held_karp(&q), Err(Error::Usage(_))));
    }

    #[test]
    fn office_row_in_q_matrix() {
        let nodes: Vec<GeoNode> = (0..3).map(|i| GeoNode::new(format!("r{i}"), 37.0, 139.0 + 0.001 * i as f64)).collect();
        let road = RoadGraph::from_segments(nodes, &[(0, 1, 10.0, false), (1, 2, 20.0, true), (2, 0, 5.0, true)]).unwrap();
        let ep = [TransferEndpoints {
            start: vec![1],
            leave: vec![2],
        }];
        let q = build_q_matrix(&ep, 0, &road).unwrap();
        assert_eq!(q.rows(), vec![vec![0.0, 10.0], vec![5.0, 0.0]]);
        let plan = car_legs(&solve_atsp(&q).unwrap(), &ep, 0, &road).unwrap();
        assert_eq!(plan.total_length, 15.0);
        assert_eq!(plan.legs[0].cars[0].path, vec![0, 1]);
        assert_eq!(plan.legs[1].from, Some(0));
        assert_eq!(plan.legs[1].to, None);
    }
}
