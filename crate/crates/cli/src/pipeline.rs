use std::path::{Path, PathBuf};
use std::time::Instant;

use canalplan_core::fleet::{check_plan, plan_subgraph, FleetPlan, FleetPlanFile, PlanningInstance};
use canalplan_core::graph::{ingest_graphs, normalize_canal_edges, CanalGraph, RoadGraph};
use canalplan_core::partition::{partition_canal_from, Partition, PartitionFile};
use canalplan_core::routing::{build_q_matrix, car_legs, solve_atsp, TourPlan, TransferEndpoints};
use canalplan_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{read_json, write_json};

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for Failure {}

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, Failure>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

/// The normalized canal tree, the full road network and the office node.
pub struct Inputs {
    pub canal: CanalGraph,
    pub road: RoadGraph,
    pub office: usize,
}

pub fn ingest(cfg: &RunConfig) -> Result<Inputs> {
    cfg.validate()?;
    let (canal, road) = ingest_graphs(&cfg.canal, &cfg.road)?;
    let canal = normalize_canal_edges(&canal, cfg.edge_length);
    let office = road
        .node_index(&cfg.office)
        .ok_or_else(|| Error::Usage(format!("office {:?} is not a road node", cfg.office)))?;
    log::info!(
        "canal: {} nodes, {} edges; road: {} nodes, {} arcs",
        canal.node_count(),
        canal.edge_count(),
        road.node_count(),
        road.arcs().len()
    );
    Ok(Inputs { canal, road, office })
}

pub fn partition(cfg: &RunConfig, inputs: &Inputs, start: Option<usize>) -> Result<Partition> {
    partition_canal_from(&inputs.canal, &cfg.partition_spec(), start, &cfg.solver())
}

pub fn instance(cfg: &RunConfig, inputs: &Inputs, canal: CanalGraph) -> Result<PlanningInstance> {
    let mut inst = PlanningInstance::for_subgraph(
        canal,
        &inputs.road,
        cfg.comm_range,
        cfg.road_margin,
        cfg.uavs,
        cfg.cars,
        cfg.battery,
    )?;
    inst.car_hops = cfg.car_hops_per_step;
    Ok(inst)
}

pub struct PiecePlan {
    pub inst: PlanningInstance,
    pub plan: FleetPlan,
    pub seconds: f64,
}

/// Plans every subgraph on a pool of `jobs` workers (0: one per core).
/// Results come back in subgraph order; the first failing subgraph's error
/// is returned.
pub fn plan_pieces(cfg: &RunConfig, inputs: &Inputs, partition: &Partition, jobs: usize) -> Result<Vec<PiecePlan>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let opts = cfg.plan_options();
    let results: Vec<Result<PiecePlan>> = pool.install(|| {
        (0..partition.subgraph_count())
            .into_par_iter()
            .map(|s| {
                let t = Instant::now();
                let inst = instance(cfg, inputs, partition.subgraph(&inputs.canal, s))?;
                let plan = plan_subgraph(&inst, &opts).map_err(|e| match e {
                    Error::BatteryBudget { .. } => e,
                    e => Error::Planning(format!("subgraph {s}: {e}")),
                })?;
                let seconds = t.elapsed().as_secs_f64();
                log::info!(
                    "subgraph {s}: {} edges, T = {}, {} moves{} in {seconds:.2} s",
                    inst.canal.edge_count(),
                    plan.horizon,
                    plan.moves(),
                    if plan.optimal { "" } else { " (not proven optimal)" }
                );
                Ok(PiecePlan { inst, plan, seconds })
            })
            .collect()
    });
    results.into_iter().collect()
}

pub fn plan_path(dir: &Path, s: usize) -> PathBuf {
    dir.join(format!("plan_{s}.json"))
}

/// Rebuilds the subgraph a plan file covers from the edges it lists.
pub fn plan_instance(cfg: &RunConfig, inputs: &Inputs, file: &FleetPlanFile) -> Result<PlanningInstance> {
    let mut edges = file
        .coverage
        .iter()
        .map(|c| {
            inputs
                .canal
                .edge_between(&c.edge[0], &c.edge[1])
                .ok_or_else(|| Error::Usage(format!("plan covers {:?}, which is not a canal edge", c.edge)))
        })
        .collect::<Result<Vec<_>>>()?;
    edges.sort_unstable();
    let mut inst = instance(cfg, inputs, inputs.canal.edge_subgraph(&edges))?;
    inst.uav_ids = file.uavs.iter().map(|u| u.id).collect();
    inst.car_ids = file.cars.iter().map(|c| c.id).collect();
    inst.parked_cars = vec![false; inst.car_ids.len()];
    Ok(inst)
}

/// Reads and checks a plan file against the subgraph it covers.
pub fn load_plan(cfg: &RunConfig, inputs: &Inputs, path: &Path) -> Result<(PlanningInstance, FleetPlan)> {
    let file: FleetPlanFile = read_json(path)?;
    let inst = plan_instance(cfg, inputs, &file)?;
    let plan = FleetPlan::from_file(&file, &inst)?;
    check_plan(&inst, &plan).map_err(|e| Error::Planning(format!("{}: {e}", path.display())))?;
    Ok((inst, plan))
}

/// Where each car is at the first and last step of each plan, as full road
/// indices.
pub fn endpoints(inputs: &Inputs, pieces: &[PiecePlan]) -> Result<Vec<TransferEndpoints>> {
    let full = |p: &PiecePlan, j: usize| {
        let id = &p.inst.road.node(j).id;
        inputs
            .road
            .node_index(id)
            .ok_or_else(|| Error::Routing(format!("trimmed road node {id:?} is not in the road graph")))
    };
    pieces
        .iter()
        .map(|p| {
            let t = p.plan.horizon;
            Ok(TransferEndpoints {
                start: p.plan.car_paths.iter().map(|c| full(p, c[0])).collect::<Result<_>>()?,
                leave: p.plan.car_paths.iter().map(|c| full(p, c[t])).collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn route(inputs: &Inputs, pieces: &[PiecePlan]) -> Result<TourPlan> {
    let ends = endpoints(inputs, pieces)?;
    let q = build_q_matrix(&ends, inputs.office, &inputs.road)?;
    let tour = solve_atsp(&q)?;
    let plan = car_legs(&tour, &ends, inputs.office, &inputs.road)?;
    log::info!("tour {:?}: {:.1} m", plan.order, plan.total_length);
    Ok(plan)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageSummary {
    pub edges: usize,
    pub covered: usize,
    pub missing: Vec<[String; 2]>,
    pub duplicated: Vec<[String; 2]>,
}

impl CoverageSummary {
    pub fn is_exact(&self) -> bool {
        self.covered == self.edges && self.missing.is_empty() && self.duplicated.is_empty()
    }
}

/// Counts how often each canal edge is inspected across all plans.
pub fn coverage_summary<'a>(canal: &CanalGraph, plans: impl IntoIterator<Item = &'a FleetPlanFile>) -> CoverageSummary {
    let mut count = vec![0usize; canal.edge_count()];
    for file in plans {
        for c in &file.coverage {
            if let Some(e) = canal.edge_between(&c.edge[0], &c.edge[1]) {
                count[e] += 1;
            }
        }
    }
    let ids = |e: usize| {
        let edge = canal.edges()[e];
        [canal.node(edge.a).id.clone(), canal.node(edge.b).id.clone()]
    };
    CoverageSummary {
        edges: count.len(),
        covered: count.iter().filter(|&&n| n > 0).count(),
        missing: (0..count.len()).filter(|&e| count[e] == 0).map(ids).collect(),
        duplicated: (0..count.len()).filter(|&e| count[e] > 1).map(ids).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageSeconds {
    pub partition: f64,
    /// Wall time of the planning stage.
    pub planning: f64,
    pub routing: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubgraphSummary {
    pub file: String,
    pub edges: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub moves: usize,
    pub optimal: bool,
    pub seconds: f64,
    pub horizons_tried: usize,
    pub nodes: usize,
    pub lp_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TourSummary {
    pub order: Vec<usize>,
    pub length_m: f64,
    pub max_transfer_m: f64,
    pub optimal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineReport {
    pub uavs: usize,
    pub cars: usize,
    pub subgraph_count: usize,
    pub partition_objective: u64,
    pub partition_certified: bool,
    /// Times the partition was redone with more subgraphs because a piece
    /// did not fit the battery.
    pub repartitions: usize,
    pub stage_seconds: StageSeconds,
    pub subgraphs: Vec<SubgraphSummary>,
    pub coverage: CoverageSummary,
    pub tour: TourSummary,
    pub unit_step_minutes: f64,
    pub transfer_minutes: f64,
    pub total_inspection_minutes: f64,
}

fn write_plans(dir: &Path, pieces: &[PiecePlan]) -> Result<Vec<FleetPlanFile>> {
    let files: Vec<FleetPlanFile> = pieces.iter().map(|p| p.plan.to_file(&p.inst)).collect();
    for (s, f) in files.iter().enumerate() {
        write_json(&plan_path(dir, s), f)?;
    }
    // stale plans from an earlier run with more subgraphs
    let mut s = files.len();
    while plan_path(dir, s).exists() {
        std::fs::remove_file(plan_path(dir, s))?;
        s += 1;
    }
    Ok(files)
}

/// Partition, plan and route, re-partitioning with one more subgraph
/// whenever a piece exceeds the battery. Artifacts land in `cfg.output` as
/// each stage finishes.
pub fn run_pipeline(cfg: &RunConfig, jobs: usize) -> std::result::Result<PipelineReport, Failure> {
    let started = Instant::now();
    let inputs = ingest(cfg).stage("ingest")?;
    let dir = &cfg.output;
    let mut partition_secs = 0.0;
    let mut planning_secs = 0.0;
    let mut start = None;
    let mut repartitions = 0;
    let (part, pieces) = loop {
        let t = Instant::now();
        let part = partition(cfg, &inputs, start).stage("partition")?;
        partition_secs += t.elapsed().as_secs_f64();
        write_json(&dir.join("partition.json"), &part.to_file(&inputs.canal)).stage("partition")?;
        let t = Instant::now();
        let planned = plan_pieces(cfg, &inputs, &part, jobs);
        planning_secs += t.elapsed().as_secs_f64();
        match planned {
            Ok(pieces) => break (part, pieces),
            Err(Error::BatteryBudget { edges, .. }) => {
                log::warn!(
                    "a {edges}-edge subgraph does not fit the battery; partitioning into {} subgraphs",
                    part.subgraph_count() + 1
                );
                start = Some(part.subgraph_count() + 1);
                repartitions += 1;
            }
            Err(e) => return Err(Failure { stage: "planning", error: e }),
        }
    };
    let files = write_plans(dir, &pieces).stage("planning")?;
    let coverage = coverage_summary(&inputs.canal, &files);
    if !coverage.is_exact() {
        return Err(Failure {
            stage: "planning",
            error: Error::Coverage(format!(
                "plans miss {:?} and repeat {:?}",
                coverage.missing, coverage.duplicated
            )),
        });
    }

    let t = Instant::now();
    let tour = route(&inputs, &pieces).stage("routing")?;
    let routing_secs = t.elapsed().as_secs_f64();
    write_json(&dir.join("tour.json"), &tour.to_file(&inputs.road)).stage("routing")?;

    let horizons: Vec<usize> = pieces.iter().map(|p| p.plan.horizon).collect();
    let report = PipelineReport {
        uavs: cfg.uavs,
        cars: cfg.cars,
        subgraph_count: part.subgraph_count(),
        partition_objective: part.objective,
        partition_certified: part.certified,
        repartitions,
        stage_seconds: StageSeconds {
            partition: partition_secs,
            planning: planning_secs,
            routing: routing_secs,
            total: started.elapsed().as_secs_f64(),
        },
        subgraphs: pieces
            .iter()
            .enumerate()
            .map(|(s, p)| SubgraphSummary {
                file: format!("plan_{s}.json"),
                edges: p.inst.canal.edge_count(),
                horizon: p.plan.horizon,
                moves: p.plan.moves(),
                optimal: p.plan.optimal,
                seconds: p.seconds,
                horizons_tried: p.plan.search.horizons,
                nodes: p.plan.search.nodes,
                lp_iterations: p.plan.search.lp_iterations,
            })
            .collect(),
        coverage,
        tour: TourSummary {
            order: tour.order.clone(),
            length_m: tour.total_length,
            max_transfer_m: tour.max_transfer(),
            optimal: tour.optimal,
        },
        unit_step_minutes: cfg.unit_step_minutes,
        transfer_minutes: cfg.transfer_minutes,
        total_inspection_minutes: cfg.inspection_minutes(&horizons),
    };
    write_json(&dir.join("report.json"), &report).stage("report")?;
    Ok(report)
}

/// Reads `partition.json` from the output directory.
pub fn load_partition(cfg: &RunConfig, inputs: &Inputs) -> Result<Partition> {
    let file: PartitionFile = read_json(&cfg.output.join("partition.json"))?;
    let part = Partition::from_file(&file, &inputs.canal)?;
    part.verify(&inputs.canal, &cfg.partition_spec())?;
    Ok(part)
}

/// Stage-wise planning: plans the pieces of an existing `partition.json`.
pub fn run_plan(cfg: &RunConfig, jobs: usize) -> std::result::Result<Vec<PathBuf>, Failure> {
    let inputs = ingest(cfg).stage("ingest")?;
    let part = load_partition(cfg, &inputs).stage("planning")?;
    let pieces = plan_pieces(cfg, &inputs, &part, jobs).stage("planning")?;
    write_plans(&cfg.output, &pieces).stage("planning")?;
    Ok((0..pieces.len()).map(|s| plan_path(&cfg.output, s)).collect())
}

/// Stage-wise routing over the plan files of an existing partition.
pub fn run_route(cfg: &RunConfig) -> std::result::Result<TourPlan, Failure> {
    let inputs = ingest(cfg).stage("ingest")?;
    let part = load_partition(cfg, &inputs).stage("routing")?;
    let pieces = (0..part.subgraph_count())
        .map(|s| {
            let t = Instant::now();
            let (inst, plan) = load_plan(cfg, &inputs, &plan_path(&cfg.output, s))?;
            Ok(PiecePlan {
                inst,
                plan,
                seconds: t.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("routing")?;
    let tour = route(&inputs, &pieces).stage("routing")?;
    write_json(&cfg.output.join("tour.json"), &tour.to_file(&inputs.road)).stage("routing")?;
    Ok(tour)
}
