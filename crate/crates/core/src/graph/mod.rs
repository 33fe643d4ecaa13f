//! Canal and road graphs, their file format, and the metric helpers the
//! planners consume.

mod geo;
mod io;
mod matrix;
mod normalize;
mod paths;
mod trim;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use geo::{equirectangular, haversine, planar_distance, METERS_PER_DEG_LAT, METERS_PER_DEG_LON};
pub use io::{ingest_graphs, read_canal, read_road, write_canal, write_road, GraphFile};
pub use matrix::{transmission_matrix, AdjacencyMatrix, TransmissionMatrix};
pub use normalize::normalize_canal_edges;
pub use paths::{shortest_path, shortest_path_matrix, DistanceTable};
pub use trim::{strongly_connected_components, trim_road_subgraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoNode {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

impl GeoNode {
    pub fn new(id: impl Into<String>, lat: f64, lon: f64) -> Self {
        Self {
            id: id.into(),
            lat,
            lon,
        }
    }
}

fn index_nodes(nodes: &[GeoNode], what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        if !(-90.0..=90.0).contains(&n.lat) || !(-180.0..=180.0).contains(&n.lon) {
            return Err(Error::Model(format!(
                "{what} node {:?} has coordinates out of range ({}, {})",
                n.id, n.lat, n.lon
            )));
        }
        if index.insert(n.id.clone(), i).is_some() {
            return Err(Error::Model(format!("{what} node id {:?} is not unique", n.id)));
        }
    }
    Ok(index)
}

/// Undirected canal segment between node indices `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanalEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// The UAV flight domain: an undirected weighted graph of canal segments.
///
/// Ingested canal networks are trees ([`CanalGraph::ensure_tree`]); the
/// re-planner also builds forests by deleting inspected edges.
#[derive(Clone, Debug)]
pub struct CanalGraph {
    nodes: Vec<GeoNode>,
    edges: Vec<CanalEdge>,
    index: HashMap<String, usize>,
    target_weight: Option<f64>,
}

impl CanalGraph {
    pub fn new(nodes: Vec<GeoNode>, edges: Vec<CanalEdge>) -> Result<Self> {
        let index = index_nodes(&nodes, "canal")?;
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.a >= nodes.len() || e.b >= nodes.len() {
                return Err(Error::Model(format!("canal edge ({}, {}) references a missing node", e.a, e.b)));
            }
            if e.a == e.b {
                return Err(Error::Model(format!("canal edge at {:?} is a self-loop", nodes[e.a].id)));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::Model(format!(
                    "canal edge ({:?}, {:?}) has non-positive weight {}",
                    nodes[e.a].id, nodes[e.b].id, e.weight
                )));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::Model(format!(
                    "duplicate canal edge ({:?}, {:?})",
                    nodes[e.a].id, nodes[e.b].id
                )));
            }
        }
        Ok(Self {
            nodes,
            edges,
            index,
            target_weight: None,
        })
    }

    /// Builds from `(id, id)` pairs, weighting each edge by planar distance.
    pub fn from_ids(nodes: Vec<GeoNode>, pairs: &[(&str, &str)]) -> Result<Self> {
        let index = index_nodes(&nodes, "canal")?;
        let mut edges = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (Some(&ia), Some(&ib)) = (index.get(*a), index.get(*b)) else {
                return Err(Error::Model(format!("canal edge ({a:?}, {b:?}) references a missing node")));
            };
            edges.push(CanalEdge {
                a: ia,
                b: ib,
                weight: planar_distance(&nodes[ia], &nodes[ib]),
            });
        }
        Self::new(nodes, edges)
    }

    pub fn nodes(&self) -> &[GeoNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CanalEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, i: usize) -> &GeoNode {
        &self.nodes[i]
    }

    pub fn target_weight(&self) -> Option<f64> {
        self.target_weight
    }

    pub(crate) fn with_target_weight(mut self, w: f64) -> Self {
        self.target_weight = Some(w);
        self
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Edge index for the unordered pair of node ids.
    pub fn edge_between(&self, a: &str, b: &str) -> Option<usize> {
        let (ia, ib) = (self.node_index(a)?, self.node_index(b)?);
        self.edges
            .iter()
            .position(|e| (e.a == ia && e.b == ib) || (e.a == ib && e.b == ia))
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.a].push((e.b, k));
            adj[e.b].push((e.a, k));
        }
        adj
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e.a == i || e.b == i).count()
    }

    /// Labels each node with its connected component (0-based, in order of
    /// lowest node index).
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency_lists();
        let mut comp = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for s in 0..self.nodes.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(w, _) in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Checks `|E| = |V| - 1` and connectivity by traversal.
    pub fn ensure_tree(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("canal graph has no nodes".into()));
        }
        // union-find to name the edge that closes a cycle
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            if ra == rb {
                return Err(Error::Model(format!(
                    "canal graph is cyclic: edge ({:?}, {:?}) closes a cycle",
                    self.nodes[e.a].id, self.nodes[e.b].id
                )));
            }
            parent[ra] = rb;
        }
        let comp = self.components();
        if let Some(v) = comp.iter().position(|&c| c != 0) {
            return Err(Error::Model(format!(
                "canal graph is disconnected: component containing {:?} is separate from the one containing {:?}",
                self.nodes[v].id, self.nodes[0].id
            )));
        }
        debug_assert_eq!(self.edges.len() + 1, self.nodes.len());
        Ok(())
    }

    pub fn is_tree(&self) -> bool {
        self.ensure_tree().is_ok()
    }

    /// Graph induced by a set of edges: their endpoints (in original order)
    /// and the edges themselves (in the given order).
    pub fn edge_subgraph(&self, edge_ids: &[usize]) -> CanalGraph {
        let mut keep = vec![false; self.nodes.len()];
        for &k in edge_ids {
            keep[self.edges[k].a] = true;
            keep[self.edges[k].b] = true;
        }
        self.restricted(&keep, edge_ids)
    }

    /// Same nodes, with the given edges deleted.
    pub fn without_edges(&self, removed: &[usize]) -> CanalGraph {
        let keep_edges: Vec<usize> = (0..self.edges.len()).filter(|k| !removed.contains(k)).collect();
        self.restricted(&vec![true; self.nodes.len()], &keep_edges)
    }

    fn restricted(&self, keep: &[bool], edge_ids: &[usize]) -> CanalGraph {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep[i] {
                map[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let edges = edge_ids
            .iter()
            .map(|&k| {
                let e = self.edges[k];
                CanalEdge {
                    a: map[e.a],
                    b: map[e.b],
                    weight: e.weight,
                }
            })
            .collect();
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        CanalGraph {
            nodes,
            edges,
            index,
            target_weight: self.target_weight,
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        (0..self.nodes.len()).filter(|&i| deg[i] == 1).collect()
    }
}

/// Directed road segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoadArc {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

/// The car driving domain. Two-way roads are stored as a pair of arcs.
#[derive(Clone, Debug)]
pub struct RoadGraph {
    nodes: Vec<GeoNode>,
    arcs: Vec<RoadArc>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
}

impl RoadGraph {
    pub fn new(nodes: Vec<GeoNode>, arcs: Vec<RoadArc>) -> Result<Self> {
        let index = index_nodes(&nodes, "road")?;
        let mut out = vec![Vec::new(); nodes.len()];
        for (k, a) in arcs.iter().enumerate() {
            if a.from >= nodes.len() || a.to >= nodes.len() {
                return Err(Error::Model(format!("road arc {k} references a missing node")));
            }
            if !(a.length > 0.0 && a.length.is_finite()) {
                return Err(Error::Model(format!(
                    "road arc ({:?} -> {:?}) has non-positive length {}",
                    nodes[a.from].id, nodes[a.to].id, a.length
                )));
            }
            out[a.from].push(k);
        }
        Ok(Self { nodes, arcs, index, out })
    }

    /// Expands `(from, to, length, oneway)` segments into arcs.
    pub fn from_segments(nodes: Vec<GeoNode>, segments: &[(usize, usize, f64, bool)]) -> Result<Self> {
        let mut arcs = Vec::with_capacity(segments.len() * 2);
        for &(from, to, length, oneway) in segments {
            arcs.push(RoadArc { from, to, length });
            if !oneway {
                arcs.push(RoadArc {
                    from: to,
                    to: from,
                    length,
                });
            }
        }
        Self::new(nodes, arcs)
    }

    pub fn nodes(&self) -> &[GeoNode] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[RoadArc] {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> &GeoNode {
        &self.nodes[i]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn out_arcs(&self, i: usize) -> impl Iterator<Item = &RoadArc> {
        self.out[i].iter().map(|&k| &self.arcs[k])
    }

    /// Induced subgraph on `keep`, preserving node order.
    pub fn induced(&self, keep: &[bool]) -> RoadGraph {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep[i] {
                map[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let arcs = self
            .arcs
            .iter()
            .filter(|a| keep[a.from] && keep[a.to])
            .map(|a| RoadArc {
                from: map[a.from],
                to: map[a.to],
                length: a.length,
            })
            .collect();
        RoadGraph::new(nodes, arcs).expect("induced subgraph of a valid graph")
    }

    /// Drops every arc between the given `(from, to)` id pairs.
    pub fn without_arcs(&self, removed: &[(String, String)]) -> RoadGraph {
        let arcs = self
            .arcs
            .iter()
            .filter(|a| {
                !removed
                    .iter()
                    .any(|(f, t)| self.nodes[a.from].id == *f && self.nodes[a.to].id == *t)
            })
            .copied()
            .collect();
        RoadGraph::new(self.nodes.clone(), arcs).expect("arc removal keeps a valid graph")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize) -> Vec<GeoNode> {
        (0..n).map(|i| GeoNode::new(format!("n{i}"), 35.0, 139.0 + i as f64 * 0.001)).collect()
    }

    #[test]
    fn minimal_tree() {
        let g = CanalGraph::from_ids(nodes(2), &[("n0", "n1")]).unwrap();
        g.ensure_tree().unwrap();
        assert_eq!(g.leaves(), vec![0, 1]);
    }

    #[test]
    fn triangle_is_rejected_as_cyclic() {
        let g = CanalGraph::from_ids(nodes(3), &[("n0", "n1"), ("n1", "n2"), ("n2", "n0")]).unwrap();
        let err = g.ensure_tree().unwrap_err().to_string();
        assert!(err.contains("cyclic"), "{err}");
        assert!(err.contains("\"n2\""), "{err}");
    }

    #[test]
    fn forest_is_rejected_as_disconnected() {
        let g = CanalGraph::from_ids(nodes(4), &[("n0", "n1"), ("n2", "n3")]).unwrap();
        let err = g.ensure_tree().unwrap_err().to_string();
        assert!(err.contains("disconnected") && err.contains("\"n2\""), "{err}");
    }

    #[test]
    fn self_loops_and_duplicates_are_rejected() {
        assert!(CanalGraph::from_ids(nodes(2), &[("n0", "n0")]).is_err());
        assert!(CanalGraph::from_ids(nodes(2), &[("n0", "n1"), ("n1", "n0")]).is_err());
    }

    #[test]
    fn out_of_range_coordinates() {
        let bad = vec![GeoNode::new("a", 91.0, 0.0)];
        assert!(CanalGraph::new(bad, vec![]).is_err());
    }

    #[test]
    fn two_way_segments_become_arc_pairs() {
        let g = RoadGraph::from_segments(nodes(3), &[(0, 1, 10.0, false), (1, 2, 5.0, true)]).unwrap();
        assert_eq!(g.arcs().len(), 3);
        assert_eq!(g.out_arcs(1).count(), 2);
        assert_eq!(g.out_arcs(2).count(), 0);
    }

    #[test]
    fn edge_subgraph_keeps_endpoint_order() {
        let g = CanalGraph::from_ids(nodes(4), &[("n0", "n1"), ("n1", "n2"), ("n2", "n3")]).unwrap();
        let s = g.edge_subgraph(&[2, 1]);
        let ids: Vec<_> = s.nodes().iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["n1", "n2", "n3"]);
        assert_eq!(s.edges()[0].a, 1);
        assert!(s.is_tree());
    }
}
