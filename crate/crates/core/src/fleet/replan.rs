use serde::{Deserialize, Serialize};

use super::{check_plan, plan_subgraph, CommLink, Coverage, FleetPlan, PlanOptions, PlanningInstance};
use crate::{Error, Result};

/// Something that happened while a plan was being flown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ReplanEvent {
    /// Canal edges known to be inspected, as endpoint id pairs.
    EdgesInspected(Vec<[String; 2]>),
    /// Closed road arcs, as `[from, to]` id pairs.
    RoadArcsRemoved(Vec<[String; 2]>),
    UavFailed(usize),
    /// The car cannot leave its current node for the rest of the plan.
    CarDelayed(usize),
}

/// A scenario file: events observed at step `tNow`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ReplanScenario {
    #[serde(default)]
    pub name: String,
    pub t_now: usize,
    #[serde(default)]
    pub events: Vec<ReplanEvent>,
}

/// Rebuilds the instance at step `t_now` of `previous` and plans the rest.
///
/// Edges covered before `t_now` and edges named by events leave the set to
/// inspect but stay flyable, closed arcs leave the road graph, failed UAVs
/// leave the fleet, the battery drops to `M - t_now`, and every vehicle
/// starts where `previous` had it at `t_now`.
///
/// When the rest of `previous` is still valid and no worse than the new
/// optimum it is returned unchanged, so a scenario without events does not
/// reshuffle the plan.
pub fn replan(
    inst: &PlanningInstance,
    previous: &FleetPlan,
    t_now: usize,
    events: &[ReplanEvent],
    opts: &PlanOptions,
) -> Result<(PlanningInstance, FleetPlan)> {
    if t_now > previous.horizon {
        return Err(Error::Usage(format!(
            "re-plan step {t_now} is beyond the plan horizon {}",
            previous.horizon
        )));
    }
    let mut inspected: Vec<usize> = previous.coverage.iter().filter(|c| c.t < t_now).map(|c| c.edge).collect();
    let mut closed: Vec<(String, String)> = Vec::new();
    let mut failed: Vec<usize> = Vec::new();
    let mut delayed: Vec<usize> = Vec::new();
    for ev in events {
        match ev {
            ReplanEvent::EdgesInspected(edges) => {
                for [a, b] in edges {
                    inspected.push(inst.canal.edge_between(a, b).ok_or_else(|| {
                        Error::Usage(format!("inspected edge ({a:?}, {b:?}) is not in the subgraph"))
                    })?);
                }
            }
            ReplanEvent::RoadArcsRemoved(arcs) => closed.extend(arcs.iter().map(|[a, b]| (a.clone(), b.clone()))),
            ReplanEvent::UavFailed(id) => failed.push(*id),
            ReplanEvent::CarDelayed(id) => delayed.push(*id),
        }
    }
    for id in failed.iter().chain(&delayed) {
        if !previous.uav_ids.contains(id) && !previous.car_ids.contains(id) {
            return Err(Error::Usage(format!("event names unknown vehicle {id}")));
        }
    }
    inspected.sort_unstable();
    inspected.dedup();

    let canal = inst.canal.without_edges(&inspected);
    let mut transit = inst.transit.clone();
    transit.extend(inspected.iter().map(|&e| (inst.canal.edges()[e].a, inst.canal.edges()[e].b)));
    let road = if closed.is_empty() {
        inst.road.clone()
    } else {
        inst.road.without_arcs(&closed)
    };
    let kept: Vec<usize> = (0..previous.uav_ids.len())
        .filter(|&k| !failed.contains(&previous.uav_ids[k]))
        .collect();
    if kept.is_empty() && canal.edge_count() > 0 {
        return Err(Error::Planning(format!(
            "no UAV remains to inspect the {} uncovered edges",
            canal.edge_count()
        )));
    }
    let next = PlanningInstance {
        canal,
        road,
        r: inst.r.clone(),
        uav_ids: kept.iter().map(|&k| previous.uav_ids[k]).collect(),
        car_ids: previous.car_ids.clone(),
        m: inst.m.saturating_sub(t_now),
        car_hops: inst.car_hops,
        uav_starts: Some(kept.iter().map(|&k| previous.uav_paths[k][t_now]).collect()),
        car_starts: Some(previous.car_paths.iter().map(|p| p[t_now]).collect()),
        parked_cars: previous.car_ids.iter().map(|id| delayed.contains(id)).collect(),
        transit,
    };
    log::info!(
        "re-planning at t = {t_now}: {} edges left, {} UAVs, battery {}",
        next.canal.edge_count(),
        next.k(),
        next.m
    );
    let plan = plan_subgraph(&next, opts)?;
    if let Some(rest) = remainder(inst, &next, previous, t_now) {
        if rest.horizon == plan.horizon && rest.objective == plan.objective && check_plan(&next, &rest).is_ok() {
            log::debug!("the rest of the previous plan is still optimal");
            return Ok((next, FleetPlan {
                optimal: plan.optimal,
                search: plan.search,
                ..rest
            }));
        }
    }
    Ok((next, plan))
}

/// `previous` from step `t_now` on, re-indexed for `next`.
fn remainder(inst: &PlanningInstance, next: &PlanningInstance, previous: &FleetPlan, t_now: usize) -> Option<FleetPlan> {
    let keep: Vec<usize> = next
        .uav_ids
        .iter()
        .map(|id| previous.uav_ids.iter().position(|x| x == id))
        .collect::<Option<_>>()?;
    let mut coverage = Vec::new();
    for c in previous.coverage.iter().filter(|c| c.t >= t_now) {
        let e = inst.canal.edges()[c.edge];
        let (a, b) = (&inst.canal.node(e.a).id, &inst.canal.node(e.b).id);
        coverage.push(Coverage {
            edge: next.canal.edge_between(a, b)?,
            uav: keep.iter().position(|&k| k == c.uav)?,
            t: c.t - t_now,
            dir: c.dir,
        });
    }
    let comm = previous
        .comm
        .iter()
        .filter(|l| l.t >= t_now)
        .filter_map(|l| {
            Some(CommLink {
                uav: keep.iter().position(|&k| k == l.uav)?,
                t: l.t - t_now,
                car: l.car,
            })
        })
        .collect();
    let uav_paths: Vec<Vec<usize>> = keep.iter().map(|&k| previous.uav_paths[k][t_now..].to_vec()).collect();
    let mut rest = FleetPlan {
        horizon: previous.horizon - t_now,
        uav_ids: next.uav_ids.clone(),
        car_ids: next.car_ids.clone(),
        uav_paths,
        car_paths: previous.car_paths.iter().map(|p| p[t_now..].to_vec()).collect(),
        coverage,
        comm,
        objective: 0,
        optimal: false,
        search: Default::default(),
    };
    rest.objective = 2 * rest.moves() as i64;
    Some(rest)
}
