//! Seeded synthetic inputs: random trees for tests and the bundled sample
//! map.

use rand::Rng;

use crate::graph::{CanalGraph, GeoNode};

const ORIGIN: (f64, f64) = (37.80, 138.90);

/// Random tree on `edges + 1` nodes: node `i` attaches to a uniformly chosen
/// earlier node. Nodes sit on a jittered lattice so weights stay positive.
pub fn random_tree<R: Rng>(rng: &mut R, edges: usize) -> CanalGraph {
    let nodes: Vec<GeoNode> = (0..=edges)
        .map(|i| {
            GeoNode::new(
                format!("t{i}"),
                ORIGIN.0 + 0.002 * (i / 4) as f64 + rng.gen_range(0.0..0.0005),
                ORIGIN.1 + 0.002 * (i % 4) as f64 + rng.gen_range(0.0..0.0005),
            )
        })
        .collect();
    let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let pairs: Vec<(&str, &str)> = (1..=edges)
        .map(|i| (ids[rng.gen_range(0..i)].as_str(), ids[i].as_str()))
        .collect();
    CanalGraph::from_ids(nodes, &pairs).expect("random tree is valid")
}

/// A small random planning instance: a tree of 1–4 edges, 1–2 UAVs, one
/// car on a random road graph of 2–4 nodes, random transmission matrix,
/// battery 4.
pub fn small_planning_instance<R: Rng>(rng: &mut R) -> crate::fleet::PlanningInstance {
    use crate::graph::{RoadGraph, TransmissionMatrix};
    let edges = rng.gen_range(1..=4);
    let canal = random_tree(rng, edges);
    let nr = rng.gen_range(2..=4);
    let nodes: Vec<GeoNode> = (0..nr)
        .map(|j| GeoNode::new(format!("r{j}"), ORIGIN.0 - 0.001, ORIGIN.1 + 0.002 * j as f64))
        .collect();
    let mut segments: Vec<(usize, usize, f64, bool)> = (1..nr).map(|j| (j - 1, j, 100.0, rng.gen_bool(0.3))).collect();
    if rng.gen_bool(0.5) {
        segments.push((nr - 1, 0, 100.0, true));
    }
    let road = RoadGraph::from_segments(nodes, &segments).expect("valid road");
    let density = rng.gen_range(0.3..0.8);
    let cells: Vec<bool> = (0..nr * canal.node_count()).map(|_| rng.gen_bool(density)).collect();
    let cols = canal.node_count();
    let r = TransmissionMatrix::from_fn(nr, cols, |i, j| cells[i * cols + j]);
    let k = rng.gen_range(1..=2);
    crate::fleet::PlanningInstance::new(canal, road, r, k, 1, 4).expect("valid instance")
}

/// Metres east/north of [`ORIGIN`] to (lat, lon), inverting the planar
/// distance constants.
fn at(x: f64, y: f64) -> (f64, f64) {
    let lat = ORIGIN.0 + y / crate::graph::METERS_PER_DEG_LAT;
    let lon = ORIGIN.1 + x / (crate::graph::METERS_PER_DEG_LON * ORIGIN.0.to_radians().cos());
    (lat, lon)
}

struct RoadBuilder {
    nodes: Vec<GeoNode>,
    segments: Vec<(usize, usize, f64, bool)>,
}

impl RoadBuilder {
    fn add(&mut self, x: f64, y: f64) -> usize {
        let (lat, lon) = at(x, y);
        let id = if self.nodes.is_empty() {
            "office".to_string()
        } else {
            format!("r{}", self.nodes.len())
        };
        self.nodes.push(GeoNode::new(id, lat, lon));
        self.nodes.len() - 1
    }

    fn link(&mut self, a: usize, b: usize, oneway: bool) {
        let d = crate::graph::planar_distance(&self.nodes[a], &self.nodes[b]);
        self.segments.push((a, b, (d * 10.0).round() / 10.0, oneway));
    }

    /// Straight road from `a` to `b` with intermediate nodes at most `step`
    /// metres apart.
    fn connect(&mut self, a: usize, b: usize, from: (f64, f64), to: (f64, f64), step: f64) {
        let n = ((to.0 - from.0).hypot(to.1 - from.1) / step).ceil().max(1.0) as usize;
        let mut prev = a;
        for k in 1..n {
            let f = k as f64 / n as f64;
            let next = self.add(from.0 + f * (to.0 - from.0), from.1 + f * (to.1 - from.1));
            self.link(prev, next, false);
            prev = next;
        }
        self.link(prev, b, false);
    }
}

/// The bundled sample map.
pub struct SampleMap {
    pub canal: CanalGraph,
    pub road: RoadGraph,
    /// Road node id of the office.
    pub office: String,
}

pub const SAMPLE_ROAD_NODES: usize = 1391;
pub const SAMPLE_ROAD_SEGMENTS: usize = 1398;

const SPINE: usize = 30;
const STEP: f64 = 85.0;
/// (spine node, side, length in edges)
const BRANCHES: [(usize, f64, usize); 5] = [(4, 1.0, 9), (10, -1.0, 10), (16, 1.0, 9), (22, -1.0, 10), (27, 1.0, 9)];

use crate::graph::RoadGraph;

/// Synthetic irrigation district: a 30-edge main canal with five side
/// canals (78 nodes, 77 edges of about 85 m), farm roads along the canals,
/// a highway to a small town holding the office, and rural roads beyond.
/// Road node and segment counts are fixed; positions depend on `seed`.
pub fn sample_map(seed: u64) -> SampleMap {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let mut nodes = Vec::new();
    let mut pairs = Vec::new();
    let canal_node = |x: f64, y: f64, nodes: &mut Vec<GeoNode>| {
        let (lat, lon) = at(x, y);
        nodes.push(GeoNode::new(format!("c{}", nodes.len()), lat, lon));
        nodes.len() - 1
    };
    let spine: Vec<usize> = (0..=SPINE)
        .map(|i| {
            let x = STEP * i as f64 + rng.gen_range(-4.0..4.0);
            canal_node(x, 25.0 * (i as f64 / 3.0).sin(), &mut nodes)
        })
        .collect();
    pairs.extend(spine.windows(2).map(|w| (w[0], w[1])));
    for &(b, side, len) in &BRANCHES {
        let x0 = STEP * b as f64;
        let y0 = 25.0 * (b as f64 / 3.0).sin();
        let mut prev = spine[b];
        for j in 1..=len {
            let x = x0 + 12.0 * (j as f64 / 2.0).sin() + rng.gen_range(-4.0..4.0);
            let next = canal_node(x, y0 + side * STEP * j as f64, &mut nodes);
            pairs.push((prev, next));
            prev = next;
        }
    }
    let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let id_pairs: Vec<(&str, &str)> = pairs.iter().map(|&(a, b)| (ids[a].as_str(), ids[b].as_str())).collect();
    let canal = CanalGraph::from_ids(nodes, &id_pairs).expect("sample canal is a tree");

    let mut rb = RoadBuilder {
        nodes: Vec::new(),
        segments: Vec::new(),
    };
    // town: 2 x 4 block grid, the office block is a one-way loop
    let office = rb.add(-3000.0, -400.0);
    let mut town = vec![office];
    for k in 1..8 {
        town.push(rb.add(-3000.0 + 160.0 * (k % 4) as f64, -400.0 + 160.0 * (k / 4) as f64));
    }
    for (a, b, oneway) in [
        (0, 1, true),
        (1, 5, true),
        (5, 4, true),
        (4, 0, true),
        (1, 2, false),
        (2, 3, false),
        (5, 6, false),
        (6, 7, false),
        (2, 6, false),
        (3, 7, false),
    ] {
        rb.link(town[a], town[b], oneway);
    }

    // farm roads 130 m either side of the main canal
    let lanes: Vec<Vec<usize>> = [130.0, -130.0]
        .iter()
        .map(|&y| (-3..=SPINE as i64 + 3).map(|i| rb.add(STEP * i as f64, y)).collect())
        .collect();
    for lane in &lanes {
        for w in lane.windows(2) {
            rb.link(w[0], w[1], false);
        }
    }
    let last = lanes[0].len() - 1;
    for i in [0, last] {
        let x = STEP * (i as f64 - 3.0);
        rb.connect(lanes[0][i], lanes[1][i], (x, 130.0), (x, -130.0), 110.0);
    }
    // roads beside each side canal, joined by an outer road on each side
    for side in [1.0, -1.0] {
        let lane = if side > 0.0 { &lanes[0] } else { &lanes[1] };
        let mut ends = Vec::new();
        for &(b, ..) in BRANCHES.iter().filter(|br| br.1 == side) {
            let i = b + 1 + 3;
            let x = STEP * (b + 1) as f64;
            let end = rb.add(x, side * 1000.0);
            rb.connect(lane[i], end, (x, side * 130.0), (x, side * 1000.0), 110.0);
            ends.push((end, x));
        }
        for w in ends.windows(2) {
            rb.connect(w[0].0, w[1].0, (w[0].1, side * 1000.0), (w[1].1, side * 1000.0), 110.0);
        }
    }
    // highway from the town to the south lane, back road to the north lane
    rb.connect(town[3], lanes[1][0], (-2520.0, -400.0), (-255.0, -130.0), 150.0);
    rb.connect(town[7], lanes[0][0], (-2520.0, -240.0), (-255.0, 130.0), 150.0);

    // rural dead-end roads west of the town until the node budget is met
    let mut spur = 0usize;
    while rb.nodes.len() < SAMPLE_ROAD_NODES {
        let root = town[spur % 8];
        let (rx, ry) = (-3000.0 + 160.0 * ((spur % 8) % 4) as f64, -400.0 + 160.0 * ((spur % 8) / 4) as f64);
        let mut heading = std::f64::consts::PI * (0.55 + 0.9 * rng.gen::<f64>());
        let (mut x, mut y, mut prev) = (rx, ry, root);
        let len = rng.gen_range(20..45).min(SAMPLE_ROAD_NODES - rb.nodes.len());
        for _ in 0..len {
            heading += rng.gen_range(-0.25..0.25);
            x += 80.0 * heading.cos();
            y += 80.0 * heading.sin();
            let next = rb.add(x, y);
            rb.link(prev, next, false);
            prev = next;
        }
        spur += 1;
    }
    let road = RoadGraph::from_segments(rb.nodes, &rb.segments).expect("sample road is valid");
    SampleMap {
        canal,
        road,
        office: "office".into(),
    }
}

/// The 12-edge piece of the sample canal used for re-planning: six edges
/// of the main canal around the second side canal and that canal's first
/// six edges.
pub fn replan_subgraph(canal: &CanalGraph) -> CanalGraph {
    let (b, ..) = BRANCHES[1];
    let first_branch_node = SPINE + 1 + BRANCHES[0].2;
    let mut pairs: Vec<(String, String)> = (b - 3..b + 3).map(|i| (format!("c{i}"), format!("c{}", i + 1))).collect();
    pairs.push((format!("c{b}"), format!("c{first_branch_node}")));
    pairs.extend((first_branch_node..first_branch_node + 5).map(|i| (format!("c{i}"), format!("c{}", i + 1))));
    let edges: Vec<usize> = pairs
        .iter()
        .map(|(a, b)| canal.edge_between(a, b).expect("sample canal edge"))
        .collect();
    canal.edge_subgraph(&edges)
}

/// The three disruption scenarios replayed on a plan of the re-planning
/// subgraph, all observed after the first step: the first inspections
/// reported done, a closure of the road the first car is on, and a UAV
/// failure.
pub fn replan_scenarios(inst: &crate::fleet::PlanningInstance, plan: &crate::fleet::FleetPlan) -> Vec<crate::fleet::ReplanScenario> {
    use crate::fleet::{ReplanEvent, ReplanScenario};
    let id = |j: usize| inst.road.node(j).id.clone();
    let done: Vec<[String; 2]> = plan
        .coverage
        .iter()
        .filter(|c| c.t == 0)
        .map(|c| {
            let e = inst.canal.edges()[c.edge];
            [inst.canal.node(e.a).id.clone(), inst.canal.node(e.b).id.clone()]
        })
        .collect();
    let car = &plan.car_paths[0];
    let at = car[1.min(car.len() - 1)];
    let closed: Vec<[String; 2]> = inst
        .road
        .out_arcs(at)
        .filter(|a| a.to != at)
        .take(1)
        .flat_map(|a| [[id(a.from), id(a.to)], [id(a.to), id(a.from)]])
        .collect();
    vec![
        ReplanScenario {
            name: "edges-done".into(),
            t_now: 1,
            events: vec![ReplanEvent::EdgesInspected(done)],
        },
        ReplanScenario {
            name: "road-closure".into(),
            t_now: 1,
            events: vec![ReplanEvent::RoadArcsRemoved(closed)],
        },
        ReplanScenario {
            name: "uav-failure".into(),
            t_now: 1,
            events: vec![ReplanEvent::UavFailed(*plan.uav_ids.last().expect("at least one UAV"))],
        },
    ]
}
