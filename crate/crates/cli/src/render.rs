use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;
use std::path::{Path, PathBuf};

use canalplan_core::fleet::FleetPlanFile;
use canalplan_core::graph::{GeoNode, RoadGraph, METERS_PER_DEG_LAT, METERS_PER_DEG_LON};
use canalplan_core::partition::{Partition, PartitionFile};
use canalplan_core::routing::TourPlanFile;
use canalplan_core::{Error, Result};

use crate::config::RunConfig;
use crate::output::write_atomic;
use crate::pipeline::{ingest, plan_instance, Inputs};

/// Subgraph and UAV colors.
pub const PALETTE: [&str; 12] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324", "#808000", "#469990",
    "#000075", "#bfef45",
];

/// Car colors, kept apart from the UAV colors.
pub const CAR_PALETTE: [&str; 6] = ["#222222", "#b8860b", "#006400", "#8b008b", "#00008b", "#8b0000"];

const ROAD: &str = "#d0d0d0";
const CANAL: &str = "#9ecae1";
const WIDTH: f64 = 1000.0;
const PAD: f64 = 30.0;

#[derive(Clone, Debug)]
struct Line {
    a: usize,
    b: usize,
    color: &'static str,
    width: f64,
    dashed: bool,
}

#[derive(Clone, Debug)]
struct Point {
    key: String,
    label: Option<String>,
    lat: f64,
    lon: f64,
    color: &'static str,
    radius: f64,
}

/// Geometry shared by the DOT and SVG writers.
#[derive(Default)]
struct Scene {
    title: String,
    points: Vec<Point>,
    index: HashMap<String, usize>,
    lines: Vec<Line>,
    legend: Vec<(String, &'static str)>,
}

impl Scene {
    fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    /// Adds a point once; later calls with the same key may restyle it.
    fn point(&mut self, key: String, node: &GeoNode, color: &'static str, radius: f64) -> usize {
        if let Some(&i) = self.index.get(&key) {
            if radius > self.points[i].radius {
                self.points[i].radius = radius;
                self.points[i].color = color;
            }
            return i;
        }
        self.index.insert(key.clone(), self.points.len());
        self.points.push(Point {
            key,
            label: None,
            lat: node.lat,
            lon: node.lon,
            color,
            radius,
        });
        self.points.len() - 1
    }

    fn line(&mut self, a: usize, b: usize, color: &'static str, width: f64, dashed: bool) {
        self.lines.push(Line {
            a,
            b,
            color,
            width,
            dashed,
        });
    }

    /// Local metres east and north of the south-west corner.
    fn positions(&self) -> Vec<(f64, f64)> {
        let lat0 = self.points.iter().map(|p| p.lat).fold(f64::INFINITY, f64::min);
        let lon0 = self.points.iter().map(|p| p.lon).fold(f64::INFINITY, f64::min);
        let cos = lat0.to_radians().cos();
        self.points
            .iter()
            .map(|p| ((p.lon - lon0) * METERS_PER_DEG_LON * cos, (p.lat - lat0) * METERS_PER_DEG_LAT))
            .collect()
    }

    fn dot(&self) -> String {
        let pos = self.positions();
        let mut out = String::new();
        writeln!(out, "graph \"{}\" {{", self.title).unwrap();
        writeln!(out, "  node [shape=point];").unwrap();
        for (p, (x, y)) in self.points.iter().zip(&pos) {
            write!(out, "  \"{}\" [pos=\"{x:.1},{y:.1}!\", color=\"{}\"", p.key, p.color).unwrap();
            if let Some(l) = &p.label {
                write!(out, ", xlabel=\"{l}\"").unwrap();
            }
            writeln!(out, "];").unwrap();
        }
        for l in &self.lines {
            write!(
                out,
                "  \"{}\" -- \"{}\" [color=\"{}\", penwidth={:.1}",
                self.points[l.a].key, self.points[l.b].key, l.color, l.width
            )
            .unwrap();
            if l.dashed {
                write!(out, ", style=dashed").unwrap();
            }
            writeln!(out, "];").unwrap();
        }
        writeln!(out, "}}").unwrap();
        out
    }

    fn svg(&self) -> String {
        let pos = self.positions();
        let max_x = pos.iter().map(|p| p.0).fold(1.0, f64::max);
        let max_y = pos.iter().map(|p| p.1).fold(1.0, f64::max);
        let scale = (WIDTH - 2.0 * PAD) / max_x.max(max_y);
        let legend_h = 18.0 * self.legend.len() as f64;
        let height = (max_y * scale + 2.0 * PAD + legend_h).ceil();
        let xy = |i: usize| (PAD + pos[i].0 * scale, PAD + (max_y - pos[i].1) * scale);
        let mut out = String::new();
        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\">"
        )
        .unwrap();
        writeln!(out, "<title>{}</title>", self.title).unwrap();
        writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
        for l in &self.lines {
            let ((x1, y1), (x2, y2)) = (xy(l.a), xy(l.b));
            write!(
                out,
                "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" stroke=\"{}\" stroke-width=\"{:.1}\"",
                l.color, l.width
            )
            .unwrap();
            if l.dashed {
                write!(out, " stroke-dasharray=\"4 3\"").unwrap();
            }
            writeln!(out, "/>").unwrap();
        }
        for (i, p) in self.points.iter().enumerate().filter(|(_, p)| p.radius > 0.0) {
            let (x, y) = xy(i);
            writeln!(
                out,
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{:.1}\" fill=\"{}\"/>",
                p.radius, p.color
            )
            .unwrap();
            if let Some(l) = &p.label {
                writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\">{l}</text>",
                    x + 5.0,
                    y - 5.0
                )
                .unwrap();
            }
        }
        let top = height - PAD / 2.0 - legend_h;
        for (k, (text, color)) in self.legend.iter().enumerate() {
            let y = top + 18.0 * k as f64;
            writeln!(
                out,
                "<rect x=\"{PAD}\" y=\"{y:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" font-family=\"sans-serif\">{text}</text>",
                PAD + 18.0,
                y + 10.0
            )
            .unwrap();
        }
        writeln!(out, "</svg>").unwrap();
        out
    }
}

/// Draws every road segment with both ends inside the box around `focus`,
/// widened by `margin` metres.
fn road_backdrop(scene: &mut Scene, road: &RoadGraph, focus: &[&GeoNode], margin: f64) {
    if focus.is_empty() {
        return;
    }
    let dlat = margin / METERS_PER_DEG_LAT;
    let dlon = margin / (METERS_PER_DEG_LON * focus[0].lat.to_radians().cos());
    let lat = (
        focus.iter().map(|n| n.lat).fold(f64::INFINITY, f64::min) - dlat,
        focus.iter().map(|n| n.lat).fold(f64::NEG_INFINITY, f64::max) + dlat,
    );
    let lon = (
        focus.iter().map(|n| n.lon).fold(f64::INFINITY, f64::min) - dlon,
        focus.iter().map(|n| n.lon).fold(f64::NEG_INFINITY, f64::max) + dlon,
    );
    let inside = |n: &GeoNode| n.lat >= lat.0 && n.lat <= lat.1 && n.lon >= lon.0 && n.lon <= lon.1;
    let mut seen = BTreeSet::new();
    for arc in road.arcs() {
        let (a, b) = (road.node(arc.from), road.node(arc.to));
        if !inside(a) || !inside(b) || !seen.insert((arc.from.min(arc.to), arc.from.max(arc.to))) {
            continue;
        }
        let i = scene.point(format!("r:{}", a.id), a, ROAD, 0.0);
        let j = scene.point(format!("r:{}", b.id), b, ROAD, 0.0);
        scene.line(i, j, ROAD, 1.0, false);
    }
}

fn office(scene: &mut Scene, inputs: &Inputs) {
    let node = inputs.road.node(inputs.office);
    let i = scene.point(format!("r:{}", node.id), node, "#000000", 6.0);
    scene.points[i].label = Some("office".into());
}

fn partition_scene(cfg: &RunConfig, inputs: &Inputs, file: &PartitionFile) -> Result<Scene> {
    let part = Partition::from_file(file, &inputs.canal)?;
    let canal = &inputs.canal;
    let mut scene = Scene::new(format!("partition into {} subgraphs", part.subgraph_count()));
    let focus: Vec<&GeoNode> = canal.nodes().iter().collect();
    road_backdrop(&mut scene, &inputs.road, &focus, cfg.comm_range);
    for (s, edges) in part.subgraphs.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        for &e in edges {
            let edge = canal.edges()[e];
            let (a, b) = (canal.node(edge.a), canal.node(edge.b));
            let i = scene.point(format!("c:{}", a.id), a, color, 2.5);
            let j = scene.point(format!("c:{}", b.id), b, color, 2.5);
            scene.line(i, j, color, 4.0, false);
        }
        scene.legend.push((format!("subgraph {s} ({} edges)", edges.len()), color));
    }
    Ok(scene)
}

fn plan_scene(cfg: &RunConfig, inputs: &Inputs, file: &FleetPlanFile) -> Result<Scene> {
    let inst = plan_instance(cfg, inputs, file)?;
    let mut scene = Scene::new(format!(
        "plan over {} edges, T = {}, {} UAVs, {} cars",
        inst.canal.edge_count(),
        file.horizon,
        file.uavs.len(),
        file.cars.len()
    ));
    let canal_node = |id: &str| inst.canal.node_index(id).map(|i| inst.canal.node(i));
    let road_node = |id: &str| inst.road.node_index(id).map(|j| inst.road.node(j));
    let unknown = |id: &str| Error::Usage(format!("plan names unknown node {id:?}"));
    let focus: Vec<&GeoNode> = inst.canal.nodes().iter().collect();
    road_backdrop(&mut scene, &inst.road, &focus, cfg.comm_range);
    for e in inst.canal.edges() {
        let (a, b) = (inst.canal.node(e.a), inst.canal.node(e.b));
        let i = scene.point(format!("c:{}", a.id), a, CANAL, 2.0);
        let j = scene.point(format!("c:{}", b.id), b, CANAL, 2.0);
        scene.line(i, j, CANAL, 6.0, false);
    }
    for (k, uav) in file.uavs.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for w in uav.path.windows(2).filter(|w| w[0] != w[1]) {
            let a = canal_node(&w[0]).ok_or_else(|| unknown(&w[0]))?;
            let b = canal_node(&w[1]).ok_or_else(|| unknown(&w[1]))?;
            let i = scene.point(format!("c:{}", a.id), a, color, 3.0);
            let j = scene.point(format!("c:{}", b.id), b, color, 3.0);
            scene.line(i, j, color, 2.5, false);
        }
        if let Some(first) = uav.path.first() {
            let n = canal_node(first).ok_or_else(|| unknown(first))?;
            let i = scene.point(format!("c:{}", n.id), n, color, 4.0);
            scene.points[i].label = Some(format!("UAV {}", uav.id));
        }
        scene.legend.push((format!("UAV {}", uav.id), color));
    }
    for (c, car) in file.cars.iter().enumerate() {
        let color = CAR_PALETTE[c % CAR_PALETTE.len()];
        for w in car.path.windows(2).filter(|w| w[0] != w[1]) {
            let a = road_node(&w[0]).ok_or_else(|| unknown(&w[0]))?;
            let b = road_node(&w[1]).ok_or_else(|| unknown(&w[1]))?;
            let i = scene.point(format!("r:{}", a.id), a, color, 3.0);
            let j = scene.point(format!("r:{}", b.id), b, color, 3.0);
            scene.line(i, j, color, 3.0, false);
        }
        if let Some(first) = car.path.first() {
            let n = road_node(first).ok_or_else(|| unknown(first))?;
            let i = scene.point(format!("r:{}", n.id), n, color, 5.0);
            scene.points[i].label = Some(format!("car {}", car.id));
        }
        scene.legend.push((format!("car {}", car.id), color));
    }
    for link in &file.comm {
        let (Some(u), Some(c)) = (
            file.uavs.iter().position(|u| u.id == link.uav),
            file.cars.iter().position(|c| c.id == link.car),
        ) else {
            continue;
        };
        let (uid, cid) = (&file.uavs[u].path[link.t], &file.cars[c].path[link.t]);
        let a = canal_node(uid).ok_or_else(|| unknown(uid))?;
        let b = road_node(cid).ok_or_else(|| unknown(cid))?;
        let i = scene.point(format!("c:{}", a.id), a, PALETTE[u % PALETTE.len()], 2.0);
        let j = scene.point(format!("r:{}", b.id), b, CAR_PALETTE[c % CAR_PALETTE.len()], 2.0);
        scene.line(i, j, PALETTE[u % PALETTE.len()], 0.8, true);
    }
    Ok(scene)
}

fn tour_scene(cfg: &RunConfig, inputs: &Inputs, file: &TourPlanFile) -> Result<Scene> {
    let road = &inputs.road;
    let mut scene = Scene::new(format!("car tour {:?}, {:.0} m", file.order, file.total_m));
    let lookup = |id: &str| {
        road.node_index(id)
            .map(|j| road.node(j))
            .ok_or_else(|| Error::Usage(format!("tour names unknown road node {id:?}")))
    };
    let mut focus: Vec<&GeoNode> = inputs.canal.nodes().iter().collect();
    for leg in &file.legs {
        for car in &leg.cars {
            for id in &car.path {
                focus.push(lookup(id)?);
            }
        }
    }
    road_backdrop(&mut scene, road, &focus, cfg.comm_range / 2.0);
    for e in inputs.canal.edges() {
        let (a, b) = (inputs.canal.node(e.a), inputs.canal.node(e.b));
        let i = scene.point(format!("c:{}", a.id), a, CANAL, 0.0);
        let j = scene.point(format!("c:{}", b.id), b, CANAL, 0.0);
        scene.line(i, j, CANAL, 3.0, false);
    }
    let mut cars = BTreeSet::new();
    for leg in &file.legs {
        for car in &leg.cars {
            let color = CAR_PALETTE[car.car % CAR_PALETTE.len()];
            cars.insert(car.car);
            for w in car.path.windows(2) {
                let (a, b) = (lookup(&w[0])?, lookup(&w[1])?);
                let i = scene.point(format!("r:{}", a.id), a, color, 0.0);
                let j = scene.point(format!("r:{}", b.id), b, color, 0.0);
                scene.line(i, j, color, 2.5, false);
            }
            if let (Some(sub), Some(last)) = (leg.to_sub, car.path.last()) {
                let n = lookup(last)?;
                let i = scene.point(format!("r:{}", n.id), n, color, 4.0);
                scene.points[i].label = Some(format!("s{sub}"));
            }
        }
    }
    for c in cars {
        scene.legend.push((format!("car {c}"), CAR_PALETTE[c % CAR_PALETTE.len()]));
    }
    office(&mut scene, inputs);
    Ok(scene)
}

/// Which artifact a JSON file holds, decided by its shape.
pub enum Artifact {
    Partition(PartitionFile),
    Plan(FleetPlanFile),
    Tour(TourPlanFile),
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read artifact {}: {e}", path.display())))?;
    if let Ok(f) = serde_json::from_str(&text) {
        return Ok(Artifact::Plan(f));
    }
    if let Ok(f) = serde_json::from_str(&text) {
        return Ok(Artifact::Tour(f));
    }
    if let Ok(f) = serde_json::from_str(&text) {
        return Ok(Artifact::Partition(f));
    }
    Err(Error::Usage(format!(
        "{} is not a partition, plan or tour file",
        path.display()
    )))
}

/// Renders each artifact to `<stem>.dot` and `<stem>.svg` in `out_dir`, or
/// next to the artifact. Returns the files written.
pub fn render(cfg: &RunConfig, artifacts: &[PathBuf], out_dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    if artifacts.is_empty() {
        return Err(Error::Usage("nothing to render".into()));
    }
    let loaded = artifacts
        .iter()
        .map(|p| read_artifact(p))
        .collect::<Result<Vec<_>>>()?;
    let inputs = ingest(cfg)?;
    let mut written = Vec::new();
    for (path, artifact) in artifacts.iter().zip(&loaded) {
        let scene = match artifact {
            Artifact::Partition(f) => partition_scene(cfg, &inputs, f)?,
            Artifact::Plan(f) => plan_scene(cfg, &inputs, f)?,
            Artifact::Tour(f) => tour_scene(cfg, &inputs, f)?,
        };
        let dir = out_dir.map_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf(), Path::to_path_buf);
        let stem = path.file_stem().map_or_else(|| "render".into(), |s| s.to_string_lossy().into_owned());
        for (ext, text) in [("dot", scene.dot()), ("svg", scene.svg())] {
            let out = dir.join(format!("{stem}.{ext}"));
            write_atomic(&out, text.as_bytes())?;
            written.push(out);
        }
    }
    Ok(written)
}
