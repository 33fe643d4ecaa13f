use std::path::{Path, PathBuf};
use std::time::Instant;

use canalplan_core::fleet::{replan, FleetPlan, ReplanEvent, ReplanScenario};
use canalplan_core::Error;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{read_json, write_json};
use crate::pipeline::{ingest, load_plan, Failure, Stage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplanOutcome {
    pub scenario: String,
    pub file: PathBuf,
    /// Edges the revised plan inspects.
    pub edges: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub moves: usize,
    pub seconds: f64,
}

/// Default name for a revised plan: `<plan stem>_<scenario stem>.json` in
/// the output directory.
pub fn revised_path(cfg: &RunConfig, plan: &Path, scenario: &Path) -> PathBuf {
    let stem = |p: &Path| p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    cfg.output.join(format!("{}_{}.json", stem(plan), stem(scenario)))
}

pub fn run_replan(
    cfg: &RunConfig,
    plan_file: &Path,
    scenario_file: &Path,
    out: Option<&Path>,
) -> Result<(ReplanOutcome, FleetPlan), Failure> {
    let inputs = ingest(cfg).stage("ingest")?;
    let (inst, previous) = load_plan(cfg, &inputs, plan_file).stage("replan")?;
    let scenario: ReplanScenario = read_json(scenario_file).stage("replan")?;
    let started = Instant::now();
    let closures = scenario
        .events
        .iter()
        .any(|e| matches!(e, ReplanEvent::RoadArcsRemoved(_)));
    let (next, plan) = replan(&inst, &previous, scenario.t_now, &scenario.events, &cfg.plan_options())
        .map_err(|e| match e {
            e @ (Error::Planning(_) | Error::BatteryBudget { .. }) if closures => {
                let text = e.to_string();
                Error::Planning(format!(
                    "{}; the road closures leave no car able to reach link range of every remaining edge, \
                     reopen one of the closed arcs or add a car",
                    text.trim_start_matches("planning error: ")
                ))
            }
            e => e,
        })
        .stage("replan")?;
    let seconds = started.elapsed().as_secs_f64();
    let name = if scenario.name.is_empty() {
        scenario_file.display().to_string()
    } else {
        scenario.name.clone()
    };
    log::info!("re-planned {name} in {seconds:.3} s: T = {}, {} moves", plan.horizon, plan.moves());
    if seconds > 3.0 {
        log::warn!("re-planning took {seconds:.1} s, above the 3 s budget");
    }
    let path = out.map_or_else(|| revised_path(cfg, plan_file, scenario_file), Path::to_path_buf);
    write_json(&path, &plan.to_file(&next)).stage("replan")?;
    Ok((
        ReplanOutcome {
            scenario: name,
            file: path,
            edges: next.canal.edge_count(),
            horizon: plan.horizon,
            moves: plan.moves(),
            seconds,
        },
        plan,
    ))
}
