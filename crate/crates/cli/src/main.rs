use std::path::{Path, PathBuf};
use std::process::ExitCode;

use canalplan::bench::{fleet_sweep, fleet_table, timing_table};
use canalplan::config::RunConfig;
use canalplan::output::write_json;
use canalplan::pipeline::{ingest, partition, run_pipeline, run_plan, run_route, Failure, Stage};
use canalplan::{exit_code, render, replan, synth, EXIT_USAGE};
use canalplan_core::Error;
use clap::{Args, Parser, Subcommand};

/// Plans canal inspections for a fleet of UAVs carried by cars.
#[derive(Parser)]
#[command(name = "canalplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition, plan every subgraph and route the cars.
    Pipeline {
        #[command(flatten)]
        run: RunArgs,
        /// Subgraphs planned at once (default: one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Split the canal into battery-sized subgraphs (writes partition.json).
    Partition {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Plan each subgraph of an existing partition.json.
    Plan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Route the cars through existing plan files (writes tour.json).
    Route {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Revise a plan after the events in a scenario file.
    Replan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Revised plan path (default: <output>/<plan>_<scenario>.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw artifacts as DOT and SVG.
    Render {
        /// Partition, plan or tour files.
        artifacts: Vec<PathBuf>,
        /// Run configuration (default: run_config.json beside the first artifact).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the pipeline and print its stage timing table.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also compare inspection time across fleets, e.g. `1x1,3x3,4x2`.
        #[arg(long, value_delimiter = ',', value_parser = parse_fleet)]
        fleets: Vec<(usize, usize)>,
    },
    /// Write the synthetic sample map and re-planning bundle.
    SynthMap {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
}

/// A configuration file plus per-field overrides.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    canal: Option<PathBuf>,
    #[arg(long)]
    road: Option<PathBuf>,
    /// K
    #[arg(long)]
    uavs: Option<usize>,
    /// K_car
    #[arg(long)]
    cars: Option<usize>,
    /// M, edges per battery charge.
    #[arg(long)]
    battery: Option<usize>,
    /// w_c in metres.
    #[arg(long)]
    edge_length: Option<f64>,
    /// R_max in metres.
    #[arg(long)]
    comm_range: Option<f64>,
    #[arg(long)]
    office: Option<String>,
    #[arg(long)]
    car_hops: Option<usize>,
    #[arg(long)]
    unit_step_minutes: Option<f64>,
    #[arg(long)]
    transfer_minutes: Option<f64>,
    /// Seconds per solver call.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    road_margin: Option<f64>,
    #[arg(long)]
    size_lower_bound: Option<usize>,
    #[arg(long)]
    max_subgraphs: Option<usize>,
    #[arg(long)]
    literal_horizon: bool,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { cfg.$field = v; })*
            };
        }
        set!(canal => canal, road => road, uavs => uavs, cars => cars, battery => battery,
            edge_length => edge_length, comm_range => comm_range, office => office,
            car_hops => car_hops_per_step, unit_step_minutes => unit_step_minutes,
            transfer_minutes => transfer_minutes, time_limit => time_limit, output => output,
            seed => seed, road_margin => road_margin);
        if self.size_lower_bound.is_some() {
            cfg.size_lower_bound = self.size_lower_bound;
        }
        if self.max_subgraphs.is_some() {
            cfg.max_subgraphs = self.max_subgraphs;
        }
        cfg.literal_horizon |= self.literal_horizon;
        cfg.validate()?;
        for p in [&mut cfg.canal, &mut cfg.road, &mut cfg.output] {
            *p = lexical(&std::path::absolute(&*p)?);
        }
        Ok(cfg)
    }
}

/// Drops `.` and folds `..` without touching the file system.
fn lexical(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                out.pop();
            }
            c => out.push(c),
        }
    }
    out
}

fn parse_fleet(f: &str) -> Result<(usize, usize), String> {
    let (k, c) = f.split_once('x').ok_or_else(|| format!("{f:?} is not KxK_car"))?;
    let n = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{f:?}: {e}"));
    Ok((n(k)?, n(c)?))
}

/// Keeps the resolved configuration beside the artifacts so they can be
/// rendered or re-planned later without it.
fn record_config(cfg: &RunConfig) -> Result<(), Failure> {
    write_json(&cfg.output.join("run_config.json"), cfg).stage("setup")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let load = |r: &RunArgs| r.load().stage("setup");
    match cli.command {
        Command::Pipeline { run, jobs } => {
            let cfg = load(&run)?;
            record_config(&cfg)?;
            let report = run_pipeline(&cfg, jobs)?;
            println!(
                "{} subgraphs, every one of {} edges covered once, tour {:.0} m, total inspection {:.0} min",
                report.subgraph_count, report.coverage.edges, report.tour.length_m, report.total_inspection_minutes
            );
            println!("artifacts in {}", cfg.output.display());
        }
        Command::Partition { run } => {
            let cfg = load(&run)?;
            record_config(&cfg)?;
            let inputs = ingest(&cfg).stage("ingest")?;
            let part = partition(&cfg, &inputs, None).stage("partition")?;
            let path = cfg.output.join("partition.json");
            write_json(&path, &part.to_file(&inputs.canal)).stage("partition")?;
            println!(
                "{} subgraphs of {:?} edges{}: {}",
                part.subgraph_count(),
                part.subgraphs.iter().map(Vec::len).collect::<Vec<_>>(),
                if part.certified { "" } else { " (optimality not certified)" },
                path.display()
            );
        }
        Command::Plan { run, jobs } => {
            let cfg = load(&run)?;
            record_config(&cfg)?;
            for p in run_plan(&cfg, jobs)? {
                println!("{}", p.display());
            }
        }
        Command::Route { run } => {
            let cfg = load(&run)?;
            let tour = run_route(&cfg)?;
            println!("tour {:?}, {:.0} m: {}", tour.order, tour.total_length, cfg.output.join("tour.json").display());
        }
        Command::Replan {
            run,
            plan,
            scenario,
            out,
        } => {
            let cfg = load(&run)?;
            let (outcome, _) = replan::run_replan(&cfg, &plan, &scenario, out.as_deref())?;
            println!(
                "{}: {} edges left, T = {}, {} moves, {:.3} s: {}",
                outcome.scenario,
                outcome.edges,
                outcome.horizon,
                outcome.moves,
                outcome.seconds,
                outcome.file.display()
            );
        }
        Command::Render {
            artifacts,
            config,
            out_dir,
        } => {
            let config = match config {
                Some(c) => c,
                None => artifacts
                    .first()
                    .map(|a| a.parent().unwrap_or(Path::new(".")).join("run_config.json"))
                    .ok_or_else(|| Error::Usage("nothing to render".into()))
                    .stage("render")?,
            };
            if !config.exists() {
                return Err(Failure {
                    stage: "render",
                    error: Error::Usage(format!("no run configuration at {}; pass --config", config.display())),
                });
            }
            let cfg = RunConfig::load(&config).stage("render")?;
            for p in render::render(&cfg, &artifacts, out_dir.as_deref()).stage("render")? {
                println!("{}", p.display());
            }
        }
        Command::Bench { run, jobs, fleets } => {
            let cfg = load(&run)?;
            record_config(&cfg)?;
            let report = run_pipeline(&cfg, jobs)?;
            print!("{}", timing_table(&report));
            if !fleets.is_empty() {
                let rows: Vec<_> = fleet_sweep(&cfg, &fleets, jobs)?
                    .into_iter()
                    .map(|(k, c, r)| (k, c, r.total_inspection_minutes))
                    .collect();
                println!();
                print!("{}", fleet_table(&rows));
            }
        }
        Command::SynthMap { seed, out } => {
            for p in synth::synth_map(seed, &out).stage("synth-map")? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("canalplan: {f}");
            ExitCode::from(exit_code(&f.error) as u8)
        }
    }
}
