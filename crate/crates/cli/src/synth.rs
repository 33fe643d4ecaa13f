use std::path::{Path, PathBuf};

use canalplan_core::fleet::{plan_subgraph, ReplanScenario};
use canalplan_core::graph::{write_canal, write_road};
use canalplan_core::sample::{replan_scenarios, replan_subgraph, sample_map};
use canalplan_core::Result;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::write_json;
use crate::pipeline::{instance, Inputs};

fn config(canal: &str, road: &str, battery: usize, output: &str, seed: u64) -> RunConfig {
    RunConfig {
        canal: canal.into(),
        road: road.into(),
        uavs: 4,
        cars: 2,
        battery,
        edge_length: 100.0,
        comm_range: 400.0,
        office: "office".into(),
        car_hops_per_step: 1,
        unit_step_minutes: 10.0,
        transfer_minutes: 10.0,
        time_limit: 600.0,
        output: output.into(),
        seed,
        road_margin: 0.0,
        size_lower_bound: None,
        max_subgraphs: None,
        literal_horizon: false,
    }
}

/// Writes the sample map, its run configuration and the re-planning bundle
/// (a 12-edge piece, its plan and three scenarios) under `dir`.
pub fn synth_map(seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    let map = sample_map(seed);
    let mut written = Vec::new();
    put(&mut written, dir.join("canal.json"), &write_canal(&map.canal))?;
    put(&mut written, dir.join("road.json"), &write_road(&map.road))?;
    put(
        &mut written,
        dir.join("config.json"),
        &config("canal.json", "road.json", 3, "../out/sample", seed),
    )?;

    // three more steps of battery let a failed UAV's work be taken over
    let rdir = dir.join("replan");
    let cfg = config("canal.json", "../road.json", 6, "../../out/replan", seed);
    let piece = replan_subgraph(&map.canal);
    put(&mut written, rdir.join("canal.json"), &write_canal(&piece))?;
    put(&mut written, rdir.join("config.json"), &cfg)?;
    let office = map.road.node_index(&map.office).unwrap_or(0);
    let inputs = Inputs {
        canal: piece.clone(),
        road: map.road,
        office,
    };
    let inst = instance(&cfg, &inputs, piece)?;
    let plan = plan_subgraph(&inst, &cfg.plan_options())?;
    put(&mut written, rdir.join("plan.json"), &plan.to_file(&inst))?;
    for sc in replan_scenarios(&inst, &plan) {
        put(&mut written, rdir.join(format!("{}.json", sc.name)), &sc)?;
    }
    put(
        &mut written,
        rdir.join("no-events.json"),
        &ReplanScenario {
            name: "no-events".into(),
            t_now: 0,
            events: Vec::new(),
        },
    )?;
    Ok(written)
}

fn put<T: Serialize>(written: &mut Vec<PathBuf>, path: PathBuf, value: &T) -> Result<()> {
    write_json(&path, value)?;
    written.push(path);
    Ok(())
}
