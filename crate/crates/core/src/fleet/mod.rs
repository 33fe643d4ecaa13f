//! Joint UAV/car planning on one canal subgraph.

mod check;
mod heuristic;
mod io;
mod program;
mod replan;

use crate::graph::{
    transmission_matrix, trim_road_subgraph, AdjacencyMatrix, CanalGraph, RoadGraph, TransmissionMatrix,
};
use crate::solver::{solve_quadratic, SolveConfig, SolveStatus};
use crate::{Error, Result};

pub use check::check_plan;
pub use io::{CommRecord, CoverageRecord, FleetPlanFile, VehicleRecord};
pub use program::{build_plan_program, FleetLayout};
pub use replan::{replan, ReplanEvent, ReplanScenario};

/// Everything one subgraph plan depends on.
#[derive(Clone, Debug)]
pub struct PlanningInstance {
    pub canal: CanalGraph,
    pub road: RoadGraph,
    /// Road × canal communication matrix.
    pub r: TransmissionMatrix,
    /// Stable ids of the UAVs in this plan (position = program index).
    pub uav_ids: Vec<usize>,
    pub car_ids: Vec<usize>,
    /// Battery life in edges; caps the horizon.
    pub m: usize,
    /// Road arcs a car may drive per step.
    pub car_hops: usize,
    pub uav_starts: Option<Vec<usize>>,
    pub car_starts: Option<Vec<usize>>,
    /// Cars that must hold their start node for the whole plan.
    pub parked_cars: Vec<bool>,
    /// Node pairs UAVs may fly along without inspecting them (edges
    /// already inspected before a re-plan).
    pub transit: Vec<(usize, usize)>,
}

impl PlanningInstance {
    pub fn new(canal: CanalGraph, road: RoadGraph, r: TransmissionMatrix, k: usize, k_car: usize, m: usize) -> Result<Self> {
        if k == 0 || k_car == 0 || m == 0 {
            return Err(Error::Usage(format!("fleet needs K, K_car, M >= 1 (got {k}, {k_car}, {m})")));
        }
        if r.rows() != road.node_count() || r.cols() != canal.node_count() {
            return Err(Error::Usage(format!(
                "transmission matrix is {}x{}, expected {}x{}",
                r.rows(),
                r.cols(),
                road.node_count(),
                canal.node_count()
            )));
        }
        Ok(Self {
            canal,
            road,
            r,
            uav_ids: (0..k).collect(),
            car_ids: (0..k_car).collect(),
            m,
            car_hops: 1,
            uav_starts: None,
            car_starts: None,
            parked_cars: vec![false; k_car],
            transit: Vec::new(),
        })
    }

    /// Trims the road network around `canal` and derives the transmission
    /// matrix from node coordinates.
    pub fn for_subgraph(
        canal: CanalGraph,
        road: &RoadGraph,
        r_max: f64,
        margin: f64,
        k: usize,
        k_car: usize,
        m: usize,
    ) -> Result<Self> {
        let road = trim_road_subgraph(road, canal.nodes(), r_max, margin)?;
        let r = transmission_matrix(&road, &canal, r_max)?;
        Self::new(canal, road, r, k, k_car, m)
    }

    pub fn k(&self) -> usize {
        self.uav_ids.len()
    }

    pub fn k_car(&self) -> usize {
        self.car_ids.len()
    }

    /// A UAV inspecting an edge sits on one endpoint at a step that needs a
    /// car link, so every edge needs an endpoint some road node can reach.
    /// (The final position carries no link requirement, hence endpoint
    /// rather than node level.)
    pub fn check_coverage(&self) -> Result<()> {
        let reachable = |j: usize| (0..self.r.rows()).any(|i| self.r.get(i, j));
        for e in self.canal.edges() {
            if !reachable(e.a) && !reachable(e.b) {
                return Err(Error::Planning(format!(
                    "canal edge ({:?}, {:?}) has no road node within communication range of either end",
                    self.canal.node(e.a).id,
                    self.canal.node(e.b).id
                )));
            }
        }
        Ok(())
    }

    /// UAV moves: canal edges, transit pairs and staying put.
    pub fn uav_moves(&self) -> AdjacencyMatrix {
        let mut a = AdjacencyMatrix::of_canal(&self.canal, true);
        for &(i, j) in &self.transit {
            a.set(i, j, true);
            a.set(j, i, true);
        }
        a
    }

    /// Canal adjacency with the inspected edge index, `None` for transit.
    pub(crate) fn uav_neighbours(&self) -> Vec<Vec<(usize, Option<usize>)>> {
        let mut adj: Vec<Vec<(usize, Option<usize>)>> = self
            .canal
            .adjacency_lists()
            .into_iter()
            .map(|l| l.into_iter().map(|(nb, e)| (nb, Some(e))).collect())
            .collect();
        for &(i, j) in &self.transit {
            adj[i].push((j, None));
            adj[j].push((i, None));
        }
        adj
    }

    pub(crate) fn car_moves(&self) -> AdjacencyMatrix {
        AdjacencyMatrix::of_road(&self.road, true).reachability(self.car_hops)
    }
}

/// Which formula seeds the horizon search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HorizonRule {
    /// `ceil(N_s / K)`: one edge per UAV per step.
    #[default]
    PerStep,
    /// `ceil(N_s / (K·M))` as printed in the source formulation; never
    /// above the per-step rule, so it only lengthens the search.
    Literal,
}

pub fn initial_horizon(edges: usize, k: usize) -> usize {
    edges.div_ceil(k)
}

pub fn literal_initial_horizon(edges: usize, k: usize, m: usize) -> usize {
    edges.div_ceil(k * m).max(1)
}

#[derive(Clone, Debug)]
pub struct PlanOptions {
    pub max_t: Option<usize>,
    pub horizon_rule: HorizonRule,
    pub solver: SolveConfig,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            max_t: None,
            horizon_rule: HorizonRule::PerStep,
            solver: SolveConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coverage {
    /// Edge index in the instance's canal graph.
    pub edge: usize,
    /// Program index of the UAV.
    pub uav: usize,
    pub t: usize,
    /// 1: lower node index first, 2: higher first.
    pub dir: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommLink {
    pub uav: usize,
    pub t: usize,
    pub car: usize,
}

/// Solver effort behind a plan, summed over every horizon tried.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub horizons: usize,
    pub nodes: usize,
    pub lp_iterations: usize,
}

/// A solved subgraph plan. Indices refer to the instance it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct FleetPlan {
    pub horizon: usize,
    pub uav_ids: Vec<usize>,
    pub car_ids: Vec<usize>,
    /// Canal node per UAV per step, `horizon + 1` entries each.
    pub uav_paths: Vec<Vec<usize>>,
    /// Road node per car per step.
    pub car_paths: Vec<Vec<usize>>,
    pub coverage: Vec<Coverage>,
    pub comm: Vec<CommLink>,
    /// `Σ (x[k,t+1,i] - x[k,t,i])²`, twice the number of UAV moves.
    pub objective: i64,
    /// Whether branch-and-bound proved optimality.
    pub optimal: bool,
    pub search: SearchStats,
}

impl FleetPlan {
    pub fn moves(&self) -> usize {
        self.uav_paths
            .iter()
            .map(|p| p.windows(2).filter(|w| w[0] != w[1]).count())
            .sum()
    }

    /// Plan for an instance with nothing left to inspect.
    pub fn idle(inst: &PlanningInstance) -> Self {
        let at = |starts: &Option<Vec<usize>>, k: usize| starts.as_ref().map_or(0, |s| s[k]);
        Self {
            horizon: 0,
            uav_ids: inst.uav_ids.clone(),
            car_ids: inst.car_ids.clone(),
            uav_paths: (0..inst.k()).map(|k| vec![at(&inst.uav_starts, k)]).collect(),
            car_paths: (0..inst.k_car()).map(|c| vec![at(&inst.car_starts, c)]).collect(),
            coverage: Vec::new(),
            comm: Vec::new(),
            objective: 0,
            optimal: true,
            search: SearchStats::default(),
        }
    }
}

/// Outcome of one horizon.
enum Attempt {
    Plan(FleetPlan),
    Infeasible,
}

fn attempt(inst: &PlanningInstance, t: usize, solver: &SolveConfig, stats: &mut SearchStats) -> Result<Attempt> {
    let (program, layout) = build_plan_program(inst, t);
    stats.horizons += 1;
    let seed = heuristic::seed(inst, &layout);
    if seed.infeasible {
        return Ok(Attempt::Infeasible);
    }
    log::debug!(
        "T = {t}: constructive plan {}, at least {:?} moves",
        if seed.initial.is_some() { "found" } else { "not found" },
        seed.min_moves
    );
    let cfg = SolveConfig {
        objective_floor: seed.min_moves.map(|m| 2.0 * m as f64),
        initial: seed.initial.or_else(|| solver.initial.clone()),
        ..solver.clone()
    };
    let res = solve_quadratic(&program, &cfg)?;
    stats.nodes += res.stats.nodes_explored;
    stats.lp_iterations += res.stats.lp_iterations;
    log::debug!(
        "T = {t}: {:?} after {} nodes, {:?}",
        res.status,
        res.stats.nodes_explored,
        res.stats.wall_time
    );
    match (res.status, res.assignment) {
        (SolveStatus::Infeasible, _) => Ok(Attempt::Infeasible),
        (SolveStatus::TimedOut, None) => Err(Error::Planning(format!(
            "solver hit its limit at T = {t} without finding a plan"
        ))),
        (status, Some(a)) => {
            if status == SolveStatus::TimedOut {
                log::warn!("plan at T = {t} is feasible but not proven optimal");
            }
            let mut plan = layout.extract(inst, &a);
            if res.objective != Some(crate::Rational::from_integer(plan.objective)) {
                return Err(Error::Planning(format!(
                    "solver objective {:?} disagrees with the extracted plan ({} moves)",
                    res.objective,
                    plan.moves()
                )));
            }
            plan.optimal = status == SolveStatus::Optimal;
            plan.search = *stats;
            check_plan(inst, &plan)?;
            Ok(Attempt::Plan(plan))
        }
        (SolveStatus::Optimal, None) => unreachable!("optimal results carry an assignment"),
    }
}

/// Smallest feasible horizon in `[start, min(M, max_t)]` with an optimal
/// plan for it.
pub fn plan_subgraph(inst: &PlanningInstance, opts: &PlanOptions) -> Result<FleetPlan> {
    let n_s = inst.canal.edge_count();
    if n_s == 0 {
        return Ok(FleetPlan::idle(inst));
    }
    inst.check_coverage()?;
    let start = match opts.horizon_rule {
        HorizonRule::PerStep => initial_horizon(n_s, inst.k()),
        HorizonRule::Literal => literal_initial_horizon(n_s, inst.k(), inst.m),
    };
    let cap = opts.max_t.map_or(inst.m, |t| t.min(inst.m));
    let mut stats = SearchStats::default();
    for t in start..=cap {
        if let Attempt::Plan(plan) = attempt(inst, t, &opts.solver, &mut stats)? {
            return Ok(plan);
        }
    }
    if cap == inst.m {
        Err(Error::BatteryBudget {
            edges: n_s,
            uavs: inst.k(),
            max_horizon: cap,
        })
    } else {
        Err(Error::Planning(format!("no feasible plan with T <= {cap}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeoNode;

    fn path_instance(all_in_range: bool) -> PlanningInstance {
        let nodes: Vec<GeoNode> = ["a", "b", "c"]
            .iter()
            .enumerate()
            .map(|(i, id)| GeoNode::new(*id, 37.0, 139.0 + 0.001 * i as f64))
            .collect();
        let canal = CanalGraph::from_ids(nodes, &[("a", "b"), ("b", "c")]).unwrap();
        let road = RoadGraph::from_segments(vec![GeoNode::new("r", 37.001, 139.001)], &[]).unwrap();
        let r = TransmissionMatrix::from_fn(1, 3, |_, _| all_in_range);
        PlanningInstance::new(canal, road, r, 1, 1, 3).unwrap()
    }

    #[test]
    fn horizons() {
        assert_eq!(initial_horizon(12, 4), 3);
        assert_eq!(initial_horizon(1, 1), 1);
        assert_eq!(initial_horizon(5, 2), 3);
        assert_eq!(literal_initial_horizon(12, 4, 3), 1);
    }

    #[test]
    fn two_edge_path() {
        let plan = plan_subgraph(&path_instance(true), &PlanOptions::default()).unwrap();
        assert_eq!(plan.horizon, 2);
        assert_eq!(plan.objective, 4);
        let p = &plan.uav_paths[0];
        assert!(p == &vec![0, 1, 2] || p == &vec![2, 1, 0], "{p:?}");
    }

    #[test]
    fn no_car_in_range() {
        let err = plan_subgraph(&path_instance(false), &PlanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Planning(_)), "{err}");
    }

    #[test]
    fn literal_rule_starts_lower() {
        let opts = PlanOptions {
            horizon_rule: HorizonRule::Literal,
            ..PlanOptions::default()
        };
        let plan = plan_subgraph(&path_instance(true), &opts).unwrap();
        assert_eq!(plan.horizon, 2);
    }

    #[test]
    fn battery_budget() {
        let mut inst = path_instance(true);
        inst.m = 1;
        let err = plan_subgraph(&inst, &PlanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::BatteryBudget { .. }), "{err}");
    }
}
