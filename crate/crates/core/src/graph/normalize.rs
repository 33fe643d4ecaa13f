use std::collections::HashSet;

use super::{CanalEdge, CanalGraph, GeoNode};

/// Splits every edge into `ceil(w / w_c)` equal pieces so each piece takes
/// about one flight step. Inserted nodes are linearly interpolated and named
/// `from~to#k`.
///
/// Edges of at least `w_c / 2` end up with weights in `[w_c / 2, w_c]`.
/// Shorter edges cannot be subdivided and are kept unchanged.
pub fn normalize_canal_edges(g: &CanalGraph, w_c: f64) -> CanalGraph {
    assert!(w_c > 0.0, "target edge weight must be positive");
    let mut nodes: Vec<GeoNode> = g.nodes().to_vec();
    let mut taken: HashSet<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let mut edges = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        // the tolerance keeps 200.0000001 / 100 from becoming 3 pieces
        let pieces = ((e.weight / w_c) - 1e-9).ceil().max(1.0) as usize;
        let piece = e.weight / pieces as f64;
        let (a, b) = (g.node(e.a).clone(), g.node(e.b).clone());
        let mut prev = e.a;
        for k in 1..pieces {
            let f = k as f64 / pieces as f64;
            let mut id = format!("{}~{}#{k}", a.id, b.id);
            while !taken.insert(id.clone()) {
                id.push('\'');
            }
            nodes.push(GeoNode::new(id, a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)));
            let cur = nodes.len() - 1;
            edges.push(CanalEdge {
                a: prev,
                b: cur,
                weight: piece,
            });
            prev = cur;
        }
        edges.push(CanalEdge {
            a: prev,
            b: e.b,
            weight: piece,
        });
    }
    CanalGraph::new(nodes, edges)
        .expect("subdivision of a valid graph is valid")
        .with_target_weight(w_c)
}
