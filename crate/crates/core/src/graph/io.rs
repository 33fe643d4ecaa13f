use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{planar_distance, CanalEdge, CanalGraph, GeoNode, RoadGraph};
use crate::{Error, Result};

/// On-disk graph format shared by canal and road files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneway: Option<bool>,
}

fn parse(text: &str, source_name: &str) -> Result<GraphFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            source_name: source_name.to_string(),
            message: format!("line {} column {}, field `{path}`: {inner}", inner.line(), inner.column()),
        }
    })
}

fn nodes_of(file: &GraphFile) -> Vec<GeoNode> {
    file.nodes
        .iter()
        .map(|n| GeoNode::new(n.id.clone(), n.lat, n.lon))
        .collect()
}

fn endpoint(index: &std::collections::HashMap<&str, usize>, id: &str, k: usize, field: &str, src: &str) -> Result<usize> {
    index.get(id).copied().ok_or_else(|| Error::Parse {
        source_name: src.to_string(),
        message: format!("field `edges[{k}].{field}`: unknown node id {id:?}"),
    })
}

pub fn canal_from_str(text: &str, source_name: &str) -> Result<CanalGraph> {
    let file = parse(text, source_name)?;
    let nodes = nodes_of(&file);
    let index: std::collections::HashMap<&str, usize> =
        file.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut edges = Vec::with_capacity(file.edges.len());
    for (k, e) in file.edges.iter().enumerate() {
        if e.oneway.is_some() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                message: format!("field `edges[{k}].oneway`: canal edges are undirected"),
            });
        }
        let a = endpoint(&index, &e.from, k, "from", source_name)?;
        let b = endpoint(&index, &e.to, k, "to", source_name)?;
        let weight = e.weight_m.unwrap_or_else(|| planar_distance(&nodes[a], &nodes[b]));
        edges.push(CanalEdge { a, b, weight });
    }
    let g = CanalGraph::new(nodes, edges)?;
    g.ensure_tree()?;
    Ok(g)
}

pub fn road_from_str(text: &str, source_name: &str) -> Result<RoadGraph> {
    let file = parse(text, source_name)?;
    let nodes = nodes_of(&file);
    let index: std::collections::HashMap<&str, usize> =
        file.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut segments = Vec::with_capacity(file.edges.len());
    for (k, e) in file.edges.iter().enumerate() {
        let a = endpoint(&index, &e.from, k, "from", source_name)?;
        let b = endpoint(&index, &e.to, k, "to", source_name)?;
        let len = e.weight_m.unwrap_or_else(|| planar_distance(&nodes[a], &nodes[b]));
        segments.push((a, b, len, e.oneway.unwrap_or(false)));
    }
    RoadGraph::from_segments(nodes, &segments)
}

pub fn read_canal(path: &Path) -> Result<CanalGraph> {
    canal_from_str(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn read_road(path: &Path) -> Result<RoadGraph> {
    road_from_str(&std::fs::read_to_string(path)?, &path.display().to_string())
}

/// Reads both files; the canal graph is verified to be a tree.
pub fn ingest_graphs(canal: &Path, road: &Path) -> Result<(CanalGraph, RoadGraph)> {
    Ok((read_canal(canal)?, read_road(road)?))
}

fn records(nodes: &[GeoNode]) -> Vec<NodeRecord> {
    nodes
        .iter()
        .map(|n| NodeRecord {
            id: n.id.clone(),
            lat: n.lat,
            lon: n.lon,
        })
        .collect()
}

pub fn write_canal(g: &CanalGraph) -> GraphFile {
    GraphFile {
        nodes: records(g.nodes()),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                from: g.node(e.a).id.clone(),
                to: g.node(e.b).id.clone(),
                weight_m: Some(e.weight),
                oneway: None,
            })
            .collect(),
    }
}

/// Writes arcs back as segments, merging reverse pairs of equal length into
/// one two-way record.
pub fn write_road(g: &RoadGraph) -> GraphFile {
    let mut used = vec![false; g.arcs().len()];
    let mut edges = Vec::new();
    for (k, a) in g.arcs().iter().enumerate() {
        if used[k] {
            continue;
        }
        used[k] = true;
        let twin = g
            .arcs()
            .iter()
            .enumerate()
            .position(|(j, b)| !used[j] && b.from == a.to && b.to == a.from && b.length == a.length);
        if let Some(j) = twin {
            used[j] = true;
        }
        edges.push(EdgeRecord {
            from: g.node(a.from).id.clone(),
            to: g.node(a.to).id.clone(),
            weight_m: Some(a.length),
            oneway: twin.is_none().then_some(true),
        });
    }
    GraphFile {
        nodes: records(g.nodes()),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODES: &str = r#"{"nodes":[{"id":"a","lat":37.0,"lon":139.0},{"id":"b","lat":37.001,"lon":139.0}],
        "edges":[{"from":"a","to":"b"}]}"#;

    #[test]
    fn minimal_canal() {
        let g = canal_from_str(TWO_NODES, "mem").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert!((g.edges()[0].weight - 110.54).abs() < 1e-6);
    }

    #[test]
    fn canal_rejects_oneway() {
        let text = TWO_NODES.replace(r#""to":"b"}"#, r#""to":"b","oneway":true}"#);
        let err = canal_from_str(&text, "mem").unwrap_err().to_string();
        assert!(err.contains("edges[0].oneway"), "{err}");
    }

    #[test]
    fn schema_violation_names_field_and_line() {
        let text = "{\"nodes\":[{\"id\":\"a\",\"lat\":\"north\",\"lon\":1}],\n\"edges\":[]}";
        let err = canal_from_str(text, "mem").unwrap_err().to_string();
        assert!(err.contains("nodes[0].lat"), "{err}");
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn cyclic_canal_file() {
        let text = r#"{"nodes":[{"id":"a","lat":37.0,"lon":139.0},{"id":"b","lat":37.001,"lon":139.0},
            {"id":"c","lat":37.001,"lon":139.001}],
            "edges":[{"from":"a","to":"b"},{"from":"b","to":"c"},{"from":"c","to":"a"}]}"#;
        let err = canal_from_str(text, "mem").unwrap_err();
        assert!(matches!(err, Error::Model(ref m) if m.contains("cyclic")), "{err}");
    }

    #[test]
    fn road_oneway_and_default_lengths() {
        let text = r#"{"nodes":[{"id":"a","lat":37.0,"lon":139.0},{"id":"b","lat":37.001,"lon":139.0}],
            "edges":[{"from":"a","to":"b","oneway":true,"weight_m":500}]}"#;
        let g = road_from_str(text, "mem").unwrap();
        assert_eq!(g.arcs().len(), 1);
        assert_eq!(g.arcs()[0].length, 500.0);
        let back = write_road(&g);
        assert_eq!(back.edges[0].oneway, Some(true));
    }

    #[test]
    fn unknown_endpoint() {
        let text = TWO_NODES.replace(r#""to":"b""#, r#""to":"zz""#);
        let err = canal_from_str(&text, "mem").unwrap_err().to_string();
        assert!(err.contains("edges[0].to") && err.contains("zz"), "{err}");
    }
}
