use serde::{Deserialize, Serialize};

use super::{CommLink, Coverage, FleetPlan, PlanningInstance};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetPlanFile {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub uavs: Vec<VehicleRecord>,
    pub cars: Vec<VehicleRecord>,
    pub coverage: Vec<CoverageRecord>,
    pub comm: Vec<CommRecord>,
    pub objective: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleRecord {
    pub id: usize,
    pub path: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageRecord {
    /// Endpoint ids, lower node index first.
    pub edge: [String; 2],
    pub uav: usize,
    pub t: usize,
    pub dir: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommRecord {
    pub uav: usize,
    pub t: usize,
    pub car: usize,
}

fn lookup(ids: &[usize], id: usize, what: &str) -> Result<usize> {
    ids.iter()
        .position(|&x| x == id)
        .ok_or_else(|| Error::Planning(format!("plan names unknown {what} {id}")))
}

impl FleetPlan {
    pub fn to_file(&self, inst: &PlanningInstance) -> FleetPlanFile {
        let canal_id = |i: usize| inst.canal.node(i).id.clone();
        let road_id = |j: usize| inst.road.node(j).id.clone();
        FleetPlanFile {
            horizon: self.horizon,
            uavs: self
                .uav_paths
                .iter()
                .zip(&self.uav_ids)
                .map(|(p, &id)| VehicleRecord {
                    id,
                    path: p.iter().map(|&i| canal_id(i)).collect(),
                })
                .collect(),
            cars: self
                .car_paths
                .iter()
                .zip(&self.car_ids)
                .map(|(p, &id)| VehicleRecord {
                    id,
                    path: p.iter().map(|&j| road_id(j)).collect(),
                })
                .collect(),
            coverage: self
                .coverage
                .iter()
                .map(|c| {
                    let e = inst.canal.edges()[c.edge];
                    CoverageRecord {
                        edge: [canal_id(e.a.min(e.b)), canal_id(e.a.max(e.b))],
                        uav: self.uav_ids[c.uav],
                        t: c.t,
                        dir: c.dir,
                    }
                })
                .collect(),
            comm: self
                .comm
                .iter()
                .map(|l| CommRecord {
                    uav: self.uav_ids[l.uav],
                    t: l.t,
                    car: self.car_ids[l.car],
                })
                .collect(),
            objective: self.objective,
        }
    }

    /// Resolves node ids against `inst`. The result is not checked; run
    /// [`super::check_plan`] for that.
    pub fn from_file(file: &FleetPlanFile, inst: &PlanningInstance) -> Result<Self> {
        let canal_idx = |id: &str| {
            inst.canal
                .node_index(id)
                .ok_or_else(|| Error::Planning(format!("plan names unknown canal node {id:?}")))
        };
        let road_idx = |id: &str| {
            inst.road
                .node_index(id)
                .ok_or_else(|| Error::Planning(format!("plan names unknown road node {id:?}")))
        };
        let uav_ids: Vec<usize> = file.uavs.iter().map(|u| u.id).collect();
        let car_ids: Vec<usize> = file.cars.iter().map(|c| c.id).collect();
        let uav_paths = file
            .uavs
            .iter()
            .map(|u| u.path.iter().map(|id| canal_idx(id)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let car_paths = file
            .cars
            .iter()
            .map(|c| c.path.iter().map(|id| road_idx(id)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut coverage = Vec::with_capacity(file.coverage.len());
        for c in &file.coverage {
            let edge = inst
                .canal
                .edge_between(&c.edge[0], &c.edge[1])
                .ok_or_else(|| Error::Planning(format!("plan covers unknown edge {:?}", c.edge)))?;
            coverage.push(Coverage {
                edge,
                uav: lookup(&uav_ids, c.uav, "UAV")?,
                t: c.t,
                dir: c.dir,
            });
        }
        let comm = file
            .comm
            .iter()
            .map(|l| {
                Ok(CommLink {
                    uav: lookup(&uav_ids, l.uav, "UAV")?,
                    t: l.t,
                    car: lookup(&car_ids, l.car, "car")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            horizon: file.horizon,
            uav_ids,
            car_ids,
            uav_paths,
            car_paths,
            coverage,
            comm,
            objective: file.objective,
            optimal: false,
            search: Default::default(),
        })
    }
}
