use std::fmt::Write;

use crate::config::RunConfig;
use crate::pipeline::{run_pipeline, Failure, PipelineReport};

/// The stage timing table: partition, subgraph planning, car routing and
/// total wall time, followed by per-subgraph solver statistics.
pub fn timing_table(r: &PipelineReport) -> String {
    let s = &r.stage_seconds;
    let mut out = String::new();
    writeln!(out, "| Graph partition | Planning for subgraphs | Car routing | Total |").unwrap();
    writeln!(out, "|---:|---:|---:|---:|").unwrap();
    writeln!(
        out,
        "| {:.2}s | {:.2}s | {:.2}s | {:.2}s |",
        s.partition, s.planning, s.routing, s.total
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(out, "| subgraph | edges | T | moves | optimal | horizons | nodes | LP iterations | seconds |").unwrap();
    writeln!(out, "|---:|---:|---:|---:|:---:|---:|---:|---:|---:|").unwrap();
    for (k, p) in r.subgraphs.iter().enumerate() {
        writeln!(
            out,
            "| {k} | {} | {} | {} | {} | {} | {} | {} | {:.2} |",
            p.edges,
            p.horizon,
            p.moves,
            if p.optimal { "yes" } else { "no" },
            p.horizons_tried,
            p.nodes,
            p.lp_iterations,
            p.seconds
        )
        .unwrap();
    }
    let slowest = r.subgraphs.iter().map(|p| p.seconds).fold(0.0, f64::max);
    writeln!(out).unwrap();
    writeln!(
        out,
        "S = {}, slowest subgraph {slowest:.2}s, tour {:.0} m, total inspection {:.0} min",
        r.subgraph_count, r.tour.length_m, r.total_inspection_minutes
    )
    .unwrap();
    out
}

/// Inspection time per fleet, one column per `(K, K_car)`.
pub fn fleet_table(rows: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("| Fleet size |");
    let plural = |n: usize, what: &str| if n == 1 { format!("{n} {what}") } else { format!("{n} {what}s") };
    for &(k, c, _) in rows {
        write!(out, " {} {} |", plural(k, "UAV"), plural(c, "car")).unwrap();
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(rows.len()));
    out.push_str("\n| Inspection time (minutes) |");
    for (_, _, m) in rows {
        write!(out, " {m:.0} |").unwrap();
    }
    out.push('\n');
    out
}

/// Runs the pipeline once per fleet, each into its own output directory.
pub fn fleet_sweep(
    cfg: &RunConfig,
    fleets: &[(usize, usize)],
    jobs: usize,
) -> Result<Vec<(usize, usize, PipelineReport)>, Failure> {
    fleets
        .iter()
        .map(|&(k, c)| {
            let mut run = cfg.clone();
            run.uavs = k;
            run.cars = c;
            run.output = cfg.output.join(format!("fleet_{k}x{c}"));
            log::info!("fleet of {k} UAVs and {c} cars");
            run_pipeline(&run, jobs).map(|r| (k, c, r))
        })
        .collect()
}
