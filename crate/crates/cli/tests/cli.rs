use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use canalplan::render::PALETTE;
use serde_json::{json, Value};
use tempfile::TempDir;

const ORIGIN: (f64, f64) = (37.8, 138.9);

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn canalplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canalplan"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// Metres east/north of the origin as a node record.
fn node(id: &str, x: f64, y: f64) -> Value {
    let lat = ORIGIN.0 + y / 110_540.0;
    let lon = ORIGIN.1 + x / (111_320.0 * ORIGIN.0.to_radians().cos());
    json!({ "id": id, "lat": lat, "lon": lon })
}

/// A straight three-edge canal with one road segment alongside. Each road
/// node reaches only the two canal nodes nearest to it, so the car has to
/// drive once while the UAV flies the canal.
fn tiny_map(dir: &Path) -> PathBuf {
    let canal = json!({
        "nodes": [node("a", 0.0, 0.0), node("b", 100.0, 0.0), node("c", 200.0, 0.0), node("d", 300.0, 0.0)],
        "edges": [{"from": "a", "to": "b"}, {"from": "b", "to": "c"}, {"from": "c", "to": "d"}],
    });
    let road = json!({
        "nodes": [node("office", 50.0, 30.0), node("r1", 250.0, 30.0)],
        "edges": [{"from": "office", "to": "r1", "weight_m": 200.0}],
    });
    let config = json!({
        "canal": "canal.json",
        "road": "road.json",
        "K": 1,
        "K_car": 1,
        "M": 3,
        "w_c": 100.0,
        "R_max": 80.0,
        "office": "office",
        "output": "out",
    });
    write(&dir.join("canal.json"), &canal);
    write(&dir.join("road.json"), &road);
    write(&dir.join("config.json"), &config);
    dir.join("config.json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pipeline(config: &Path, out: &Path) -> Output {
    canalplan(&["pipeline", "--config", s(config), "--output", s(out)])
}

fn colors(dot: &str, palette: &[&str]) -> BTreeSet<String> {
    palette
        .iter()
        .filter(|c| dot.contains(&format!("color=\"{c}\"")))
        .map(|c| c.to_string())
        .collect()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&canalplan(&[])), 2);
    assert_eq!(code(&canalplan(&["pipeline"])), 2);
    assert_eq!(code(&canalplan(&["bench", "--config", "x.json", "--fleets", "4by2"])), 2);
    assert_eq!(code(&canalplan(&["--help"])), 0);

    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, "{\"K\": ").unwrap();
    let out = canalplan(&["pipeline", "--config", s(&broken)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let mut v = read(&cfg);
    v["colour"] = json!("red");
    write(&broken, &v);
    let out = canalplan(&["partition", "--config", s(&broken)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));

    let out = canalplan(&["pipeline", "--config", s(&cfg), "--uavs", "0"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = canalplan(&["pipeline", "--config", s(&cfg), "--office", "nowhere"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn missing_files_exit_4() {
    let tmp = TempDir::new().unwrap();
    let out = canalplan(&["pipeline", "--config", s(&tmp.path().join("none.json"))]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));

    let cfg = tiny_map(tmp.path());
    std::fs::remove_file(tmp.path().join("canal.json")).unwrap();
    let out = canalplan(&["pipeline", "--config", s(&cfg)]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn unreachable_edges_exit_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let out = canalplan(&["pipeline", "--config", s(&cfg), "--comm-range", "10"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn single_edge_map() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        &dir.join("canal.json"),
        &json!({"nodes": [node("a", 0.0, 0.0), node("b", 100.0, 0.0)], "edges": [{"from": "a", "to": "b"}]}),
    );
    write(
        &dir.join("road.json"),
        &json!({"nodes": [node("office", 50.0, 20.0), node("r1", 50.0, 120.0)],
                "edges": [{"from": "office", "to": "r1"}]}),
    );
    write(
        &dir.join("config.json"),
        &json!({"canal": "canal.json", "road": "road.json", "K": 1, "K_car": 1, "M": 1,
                "w_c": 100.0, "R_max": 100.0, "office": "office"}),
    );
    let out = pipeline(&dir.join("config.json"), &dir.join("out"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = read(&dir.join("out/plan_0.json"));
    assert_eq!(plan["T"], 1);
    assert_eq!(plan["objective"], 2);
    assert_eq!(plan["coverage"].as_array().unwrap().len(), 1);
    assert!(!dir.join("out/plan_1.json").exists());
    let report = read(&dir.join("out/report.json"));
    assert_eq!(report["totalInspectionMinutes"], 30.0);
}

#[test]
fn report_matches_plan_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = pipeline(&cfg, &out_dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read(&out_dir.join("report.json"));
    let s_count = read(&out_dir.join("partition.json"))["S"].as_u64().unwrap() as usize;
    assert_eq!(report["subgraphCount"], s_count);

    let mut horizons = 0;
    let mut covered = Vec::new();
    for s in 0..s_count {
        let plan = read(&out_dir.join(format!("plan_{s}.json")));
        let t = plan["T"].as_u64().unwrap();
        horizons += t;
        assert_eq!(report["subgraphs"][s]["T"], t);
        for c in plan["coverage"].as_array().unwrap() {
            let mut e = [c["edge"][0].as_str().unwrap().to_string(), c["edge"][1].as_str().unwrap().to_string()];
            e.sort();
            covered.push(e);
        }
    }
    covered.sort();
    assert_eq!(covered, [["a", "b"], ["b", "c"], ["c", "d"]]);
    let minutes = 10.0 * horizons as f64 + 10.0 * (s_count as f64 + 1.0);
    assert_eq!(report["totalInspectionMinutes"].as_f64().unwrap(), minutes);
    assert_eq!(report["coverage"]["edges"], 3);
    assert_eq!(report["coverage"]["missing"].as_array().unwrap().len(), 0);

    let tour = read(&out_dir.join("tour.json"));
    let order: Vec<u64> = tour["order"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let mut sorted = order.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..s_count as u64).collect::<Vec<_>>());
}

#[test]
fn stages_reproduce_the_pipeline() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let whole = tmp.path().join("whole");
    let staged = tmp.path().join("staged");
    assert_eq!(code(&pipeline(&cfg, &whole)), 0);
    for stage in ["partition", "plan", "route"] {
        let out = canalplan(&[stage, "--config", s(&cfg), "--output", s(&staged)]);
        assert_eq!(code(&out), 0, "{stage}: {}", stderr(&out));
    }
    for file in ["partition.json", "plan_0.json", "tour.json"] {
        assert_eq!(
            std::fs::read(whole.join(file)).unwrap(),
            std::fs::read(staged.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn plan_without_partition_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let out = canalplan(&["plan", "--config", s(&cfg), "--output", s(&tmp.path().join("empty"))]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn replan_without_events_keeps_the_plan() {
    let tmp = TempDir::new().unwrap();
    let revised = tmp.path().join("revised.json");
    let dir = data().join("replan");
    let out = canalplan(&[
        "replan",
        "--config",
        s(&dir.join("config.json")),
        "--output",
        s(tmp.path()),
        "--plan",
        s(&dir.join("plan.json")),
        "--scenario",
        s(&dir.join("no-events.json")),
        "--out",
        s(&revised),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(std::fs::read(&revised).unwrap(), std::fs::read(dir.join("plan.json")).unwrap());
}

#[test]
fn replan_scenarios_write_revised_plans() {
    let tmp = TempDir::new().unwrap();
    let dir = data().join("replan");
    for name in ["edges-done", "road-closure", "uav-failure"] {
        let out = canalplan(&[
            "replan",
            "--config",
            s(&dir.join("config.json")),
            "--output",
            s(tmp.path()),
            "--plan",
            s(&dir.join("plan.json")),
            "--scenario",
            s(&dir.join(format!("{name}.json"))),
        ]);
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        let plan = read(&tmp.path().join(format!("plan_{name}.json")));
        assert_eq!(plan["coverage"].as_array().unwrap().len(), 8, "{name}");
    }
}

#[test]
fn closing_every_road_fails_with_a_hint() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let out_dir = tmp.path().join("out");
    assert_eq!(code(&pipeline(&cfg, &out_dir)), 0);
    let scenario = tmp.path().join("closed.json");
    write(
        &scenario,
        &json!({"name": "closed", "tNow": 0, "events": [{"roadArcsRemoved": [["office", "r1"], ["r1", "office"]]}]}),
    );
    let out = canalplan(&[
        "replan",
        "--config",
        s(&cfg),
        "--plan",
        s(&out_dir.join("plan_0.json")),
        "--scenario",
        s(&scenario),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("road closures") && err.contains("reopen"), "{err}");
}

#[test]
fn replan_rejects_unknown_vehicles() {
    let tmp = TempDir::new().unwrap();
    let dir = data().join("replan");
    let scenario = tmp.path().join("ghost.json");
    write(&scenario, &json!({"tNow": 1, "events": [{"uavFailed": 99}]}));
    let out = canalplan(&[
        "replan",
        "--config",
        s(&dir.join("config.json")),
        "--output",
        s(tmp.path()),
        "--plan",
        s(&dir.join("plan.json")),
        "--scenario",
        s(&scenario),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

fn render(args: &[&Path], config: &Path, out_dir: &Path) {
    let mut a = vec!["render", "--config", s(config), "--out-dir", s(out_dir)];
    a.extend(args.iter().map(|p| s(p)));
    let out = canalplan(&a);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn check_golden(produced: &Path, name: &str) {
    let got = std::fs::read_to_string(produced).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden("")).unwrap();
        std::fs::write(golden(name), &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(golden(name)).unwrap_or_default();
    assert!(got == want, "{name} differs from its golden file; rerun with UPDATE_GOLDEN=1 after checking it");
}

#[test]
fn plan_render_matches_golden() {
    let tmp = TempDir::new().unwrap();
    let dir = data().join("replan");
    render(&[&dir.join("plan.json")], &dir.join("config.json"), tmp.path());
    let dot = std::fs::read_to_string(tmp.path().join("plan.dot")).unwrap();
    assert_eq!(colors(&dot, &PALETTE[..4]).len(), 4, "one color per UAV");
    check_golden(&tmp.path().join("plan.dot"), "replan_plan.dot");
    check_golden(&tmp.path().join("plan.svg"), "replan_plan.svg");

    let again = TempDir::new().unwrap();
    render(&[&dir.join("plan.json")], &dir.join("config.json"), again.path());
    assert_eq!(
        std::fs::read(tmp.path().join("plan.svg")).unwrap(),
        std::fs::read(again.path().join("plan.svg")).unwrap()
    );
}

#[test]
fn partition_render_matches_golden() {
    let tmp = TempDir::new().unwrap();
    let cfg = data().join("config.json");
    let out = canalplan(&["partition", "--config", s(&cfg), "--output", s(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let part = tmp.path().join("partition.json");
    // run_config.json beside the artifact stands in for --config
    let out = canalplan(&["render", s(&part)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s_count = read(&part)["S"].as_u64().unwrap() as usize;
    let dot = std::fs::read_to_string(tmp.path().join("partition.dot")).unwrap();
    assert_eq!(colors(&dot, &PALETTE).len(), s_count, "one color per subgraph");
    check_golden(&tmp.path().join("partition.dot"), "sample_partition.dot");
    check_golden(&tmp.path().join("partition.svg"), "sample_partition.svg");
}

#[test]
fn render_rejects_unknown_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let out = canalplan(&["render", "--config", s(&cfg), s(&cfg)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = canalplan(&["render", s(&tmp.path().join("canal.json"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn bench_is_fast_and_repeatable() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_map(tmp.path());
    let mut stats = Vec::new();
    for run in 0..2 {
        let out_dir = tmp.path().join(format!("bench{run}"));
        let started = Instant::now();
        let out = canalplan(&["bench", "--config", s(&cfg), "--output", s(&out_dir), "--fleets", "1x1,2x1"]);
        let secs = started.elapsed().as_secs_f64();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(secs < 1.0, "bench took {secs:.2} s");
        let table = String::from_utf8_lossy(&out.stdout).into_owned();
        assert!(table.contains("Graph partition") && table.contains("1 UAV 1 car"), "{table}");
        let report = read(&out_dir.join("report.json"));
        let subs: Vec<_> = report["subgraphs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| (s["T"].clone(), s["moves"].clone(), s["nodes"].clone(), s["lpIterations"].clone()))
            .collect();
        stats.push(subs);
        assert!(out_dir.join("fleet_2x1/report.json").exists());
    }
    assert_eq!(stats[0], stats[1]);
}

#[test]
fn synth_map_reproduces_the_bundle() {
    let tmp = TempDir::new().unwrap();
    let out = canalplan(&["synth-map", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for file in [
        "canal.json",
        "road.json",
        "config.json",
        "replan/canal.json",
        "replan/config.json",
        "replan/plan.json",
        "replan/edges-done.json",
        "replan/road-closure.json",
        "replan/uav-failure.json",
        "replan/no-events.json",
    ] {
        assert_eq!(
            std::fs::read(tmp.path().join(file)).unwrap(),
            std::fs::read(data().join(file)).unwrap(),
            "{file}"
        );
    }
}
