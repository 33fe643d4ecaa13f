use super::{CommLink, Coverage, FleetPlan, PlanningInstance};
use crate::model::{Relation, VarId, VarLabel};
use crate::{Program, Rational};

/// Variable positions: `x[k,t,i]`, `y[c,t,j]`, `w[e,k,t,d]`, `ω[k,t,c]`,
/// in that order. Positions `t` run over `0..=T` and moves over `0..T`.
#[derive(Clone, Copy, Debug)]
pub struct FleetLayout {
    pub k: usize,
    pub k_car: usize,
    pub horizon: usize,
    pub canal_nodes: usize,
    pub road_nodes: usize,
    pub edges: usize,
}

impl FleetLayout {
    pub fn x(&self, k: usize, t: usize, i: usize) -> usize {
        (k * (self.horizon + 1) + t) * self.canal_nodes + i
    }

    fn y_base(&self) -> usize {
        self.k * (self.horizon + 1) * self.canal_nodes
    }

    pub fn y(&self, c: usize, t: usize, j: usize) -> usize {
        self.y_base() + (c * (self.horizon + 1) + t) * self.road_nodes + j
    }

    fn w_base(&self) -> usize {
        self.y_base() + self.k_car * (self.horizon + 1) * self.road_nodes
    }

    /// `d` is 1 or 2.
    pub fn w(&self, e: usize, k: usize, t: usize, d: usize) -> usize {
        self.w_base() + ((e * self.k + k) * self.horizon + t) * 2 + (d - 1)
    }

    fn omega_base(&self) -> usize {
        self.w_base() + self.edges * self.k * self.horizon * 2
    }

    pub fn omega(&self, k: usize, t: usize, c: usize) -> usize {
        self.omega_base() + (k * self.horizon + t) * self.k_car + c
    }

    pub fn var_count(&self) -> usize {
        self.omega_base() + self.k * self.horizon * self.k_car
    }

    /// Reads the plan off a feasible assignment.
    pub fn extract(&self, inst: &PlanningInstance, a: &[bool]) -> FleetPlan {
        let pos = |n: usize, f: &dyn Fn(usize) -> usize| (0..n).find(|&i| a[f(i)]).expect("one position per step");
        let uav_paths = (0..self.k)
            .map(|k| (0..=self.horizon).map(|t| pos(self.canal_nodes, &|i| self.x(k, t, i))).collect())
            .collect();
        let car_paths = (0..self.k_car)
            .map(|c| (0..=self.horizon).map(|t| pos(self.road_nodes, &|j| self.y(c, t, j))).collect())
            .collect();
        let mut coverage = Vec::new();
        for e in 0..self.edges {
            for k in 0..self.k {
                for t in 0..self.horizon {
                    for d in 1..=2 {
                        if a[self.w(e, k, t, d)] {
                            coverage.push(Coverage {
                                edge: e,
                                uav: k,
                                t,
                                dir: d as u8,
                            });
                        }
                    }
                }
            }
        }
        coverage.sort_by_key(|c| (c.t, c.uav, c.edge));
        let mut comm = Vec::new();
        for k in 0..self.k {
            for t in 0..self.horizon {
                if let Some(c) = (0..self.k_car).find(|&c| a[self.omega(k, t, c)]) {
                    comm.push(CommLink { uav: k, t, car: c });
                }
            }
        }
        let mut plan = FleetPlan {
            horizon: self.horizon,
            uav_ids: inst.uav_ids.clone(),
            car_ids: inst.car_ids.clone(),
            uav_paths,
            car_paths,
            coverage,
            comm,
            objective: 0,
            optimal: false,
            search: Default::default(),
        };
        plan.objective = 2 * plan.moves() as i64;
        plan
    }
}

fn r(v: i64) -> Rational {
    Rational::from_integer(v)
}

/// Builds the joint planning program for horizon `T`.
///
/// Variables: `K·(T+1)·N_canal` x, `K_car·(T+1)·N_road` y, `E·K·T·2` w and
/// `K·T·K_car` ω. Rows, in order: edge coverage (E), the two coverage/
/// position links (`2·E·K·T`), car-in-range (`K·T·K_car·N_road`), one car
/// per UAV (`K·T`), one node per vehicle (`(K + K_car)·(T+1)`), UAV and car
/// adjacency (`K·T·N_canal + K_car·T·N_road`), then start pinning.
pub fn build_plan_program(inst: &PlanningInstance, horizon: usize) -> (Program, FleetLayout) {
    assert!(horizon >= 1, "horizon must be positive");
    let l = FleetLayout {
        k: inst.k(),
        k_car: inst.k_car(),
        horizon,
        canal_nodes: inst.canal.node_count(),
        road_nodes: inst.road.node_count(),
        edges: inst.canal.edge_count(),
    };
    let mut p = Program::new(format!("fleet-T{horizon}"));
    for k in 0..l.k {
        for t in 0..=horizon {
            for i in 0..l.canal_nodes {
                p.add_var(VarLabel::new("x", [k, t, i]));
            }
        }
    }
    for c in 0..l.k_car {
        for t in 0..=horizon {
            for j in 0..l.road_nodes {
                p.add_var(VarLabel::new("y", [c, t, j]));
            }
        }
    }
    for e in 0..l.edges {
        for k in 0..l.k {
            for t in 0..horizon {
                for d in 1..=2 {
                    p.add_var(VarLabel::new("w", [e, k, t, d]));
                }
            }
        }
    }
    for k in 0..l.k {
        for t in 0..horizon {
            for c in 0..l.k_car {
                p.add_var(VarLabel::new("omega", [k, t, c]));
            }
        }
    }
    debug_assert_eq!(p.var_count(), l.var_count());
    let v = VarId;

    for k in 0..l.k {
        for t in 0..horizon {
            for i in 0..l.canal_nodes {
                p.objective
                    .add_squared_sum(&[(v(l.x(k, t + 1, i)), r(1)), (v(l.x(k, t, i)), r(-1))], r(0));
            }
        }
    }
    p.objective.canonicalize();

    for e in 0..l.edges {
        let terms = (0..l.k).flat_map(|k| (0..horizon).flat_map(move |t| [(k, t, 1), (k, t, 2)]));
        p.add_constraint(terms.map(|(k, t, d)| (v(l.w(e, k, t, d)), r(1))), Relation::Eq, r(1));
    }
    for (e, edge) in inst.canal.edges().iter().enumerate() {
        let (i, j) = (edge.a.min(edge.b), edge.a.max(edge.b));
        for k in 0..l.k {
            for t in 0..horizon {
                p.add_constraint(
                    [(v(l.x(k, t, i)), r(1)), (v(l.x(k, t + 1, j)), r(1)), (v(l.w(e, k, t, 1)), r(-2))],
                    Relation::Ge,
                    r(0),
                );
                p.add_constraint(
                    [(v(l.x(k, t, j)), r(1)), (v(l.x(k, t + 1, i)), r(1)), (v(l.w(e, k, t, 2)), r(-2))],
                    Relation::Ge,
                    r(0),
                );
            }
        }
    }
    // y[c,t,j] - Σ_i R(j,i)·x[k,t,i] + ω[k,t,c] <= 1
    let in_range: Vec<Vec<usize>> = (0..l.road_nodes).map(|j| inst.r.covered_by(j).collect()).collect();
    for k in 0..l.k {
        for t in 0..horizon {
            for c in 0..l.k_car {
                for (j, cover) in in_range.iter().enumerate() {
                    let terms = [(v(l.y(c, t, j)), r(1)), (v(l.omega(k, t, c)), r(1))]
                        .into_iter()
                        .chain(cover.iter().map(|&i| (v(l.x(k, t, i)), r(-1))));
                    p.add_constraint(terms, Relation::Le, r(1));
                }
            }
        }
    }
    for k in 0..l.k {
        for t in 0..horizon {
            p.add_constraint((0..l.k_car).map(|c| (v(l.omega(k, t, c)), r(1))), Relation::Ge, r(1));
        }
    }
    for k in 0..l.k {
        for t in 0..=horizon {
            p.add_constraint((0..l.canal_nodes).map(|i| (v(l.x(k, t, i)), r(1))), Relation::Eq, r(1));
        }
    }
    for c in 0..l.k_car {
        for t in 0..=horizon {
            p.add_constraint((0..l.road_nodes).map(|j| (v(l.y(c, t, j)), r(1))), Relation::Eq, r(1));
        }
    }
    // x[k,t+1,i] <= Σ_j A(i,j)·x[k,t,j]
    let a_canal = inst.uav_moves();
    for k in 0..l.k {
        for t in 0..horizon {
            for i in 0..l.canal_nodes {
                let terms = std::iter::once((v(l.x(k, t + 1, i)), r(1)))
                    .chain(a_canal.row(i).map(|j| (v(l.x(k, t, j)), r(-1))));
                p.add_constraint(terms, Relation::Le, r(0));
            }
        }
    }
    // y[c,t+1,i] <= Σ_j A(j,i)·y[c,t,j]: a car reaches i from a predecessor
    let a_road = inst.car_moves();
    for c in 0..l.k_car {
        let parked = inst.parked_cars.get(c).copied().unwrap_or(false);
        for t in 0..horizon {
            for i in 0..l.road_nodes {
                let terms: Vec<_> = if parked {
                    vec![(v(l.y(c, t + 1, i)), r(1)), (v(l.y(c, t, i)), r(-1))]
                } else {
                    std::iter::once((v(l.y(c, t + 1, i)), r(1)))
                        .chain(a_road.column(i).map(|j| (v(l.y(c, t, j)), r(-1))))
                        .collect()
                };
                p.add_constraint(terms, Relation::Le, r(0));
            }
        }
    }
    if let Some(starts) = &inst.uav_starts {
        for (k, &i) in starts.iter().enumerate() {
            p.fix(v(l.x(k, 0, i)), true);
        }
    }
    if let Some(starts) = &inst.car_starts {
        for (c, &j) in starts.iter().enumerate() {
            p.fix(v(l.y(c, 0, j)), true);
        }
    }
    (p, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CanalGraph, GeoNode, RoadGraph, TransmissionMatrix};
    use crate::solver::enumerate;

    fn single_edge(k_car: usize) -> PlanningInstance {
        let canal = CanalGraph::from_ids(
            vec![GeoNode::new("a", 37.0, 139.0), GeoNode::new("b", 37.0, 139.001)],
            &[("a", "b")],
        )
        .unwrap();
        let road = RoadGraph::from_segments(vec![GeoNode::new("r", 37.0005, 139.0005)], &[]).unwrap();
        let r = TransmissionMatrix::from_fn(1, 2, |_, _| true);
        PlanningInstance::new(canal, road, r, 1, k_car, 3).unwrap()
    }

    #[test]
    fn single_edge_costs_one_move() {
        let (p, l) = build_plan_program(&single_edge(1), 1);
        assert_eq!(p.var_count(), 4 + 2 + 2 + 1);
        assert_eq!(l.var_count(), 9);
        let res = enumerate(&p).unwrap();
        assert_eq!(res.objective, Some(r(2)));
    }

    #[test]
    fn idling_step_is_free() {
        let (p, _) = build_plan_program(&single_edge(1), 2);
        assert_eq!(p.var_count(), 6 + 3 + 4 + 2);
        assert_eq!(enumerate(&p).unwrap().objective, Some(r(2)));
    }

    #[test]
    fn one_omega_row_per_uav_and_step() {
        let inst = single_edge(2);
        let (p, _) = build_plan_program(&inst, 3);
        let omega_rows = p
            .constraints
            .iter()
            .filter(|c| c.relation == Relation::Ge && c.rhs == r(1))
            .count();
        assert_eq!(omega_rows, 3);
        let expected_rows = 1 + 2 * 3 + 3 * 2 + 3 + (1 + 2) * 4 + 3 * 2 + 2 * 3;
        assert_eq!(p.constraints.len(), expected_rows);
    }
}
