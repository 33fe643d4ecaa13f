use super::{planar_distance, GeoNode, RoadGraph};
use crate::{Error, Result};

/// Tarjan's algorithm (iterative). Returns a component label per node.
pub fn strongly_connected_components(g: &RoadGraph) -> Vec<usize> {
    let n = g.node_count();
    let adj: Vec<Vec<usize>> = (0..n).map(|v| g.out_arcs(v).map(|a| a.to).collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let (mut next_index, mut next_comp) = (0, 0);
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut k)) = call.last_mut() {
            if *k < adj[v].len() {
                let w = adj[v][*k];
                *k += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Road nodes within `r_max + margin` of any of `canal_nodes`, reduced to
/// the largest strongly connected component (ties go to the component with
/// the lowest node index) so every kept node can reach every other.
pub fn trim_road_subgraph(road: &RoadGraph, canal_nodes: &[GeoNode], r_max: f64, margin: f64) -> Result<RoadGraph> {
    let reach = r_max + margin;
    let keep: Vec<bool> = road
        .nodes()
        .iter()
        .map(|r| canal_nodes.iter().any(|c| planar_distance(r, c) <= reach))
        .collect();
    let near = road.induced(&keep);
    if near.node_count() == 0 {
        return Err(Error::Coverage(format!(
            "no road node lies within {reach} m of the subgraph"
        )));
    }
    let comp = strongly_connected_components(&near);
    let count = comp.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; count];
    for &c in &comp {
        size[c] += 1;
    }
    let mut best = comp[0];
    for &c in &comp {
        if size[c] > size[best] {
            best = c;
        }
    }
    let keep: Vec<bool> = comp.iter().map(|&c| c == best).collect();
    Ok(near.induced(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize) -> Vec<GeoNode> {
        (0..n).map(|i| GeoNode::new(format!("r{i}"), 37.0, 139.0 + 0.001 * i as f64)).collect()
    }

    #[test]
    fn scc_of_cycle_and_tail() {
        let g = RoadGraph::from_segments(row(4), &[(0, 1, 1.0, true), (1, 2, 1.0, true), (2, 0, 1.0, true), (2, 3, 1.0, true)])
            .unwrap();
        let c = strongly_connected_components(&g);
        assert_eq!(c[0], c[1]);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[2], c[3]);
    }

    #[test]
    fn trims_to_radius_and_strong_component() {
        let g = RoadGraph::from_segments(row(6), &[(0, 1, 1.0, false), (1, 2, 1.0, false), (2, 3, 1.0, true), (4, 5, 1.0, false)])
            .unwrap();
        let canal = [GeoNode::new("c", 37.0, 139.0015)];
        // r0..r3 lie within ~180 m; r3 is only reachable one way
        let t = trim_road_subgraph(&g, &canal, 180.0, 0.0).unwrap();
        let ids: Vec<_> = t.nodes().iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["r0", "r1", "r2"]);
        assert_eq!(t.arcs().len(), 4);
    }

    #[test]
    fn nothing_in_range() {
        let g = RoadGraph::from_segments(row(2), &[(0, 1, 1.0, false)]).unwrap();
        let canal = [GeoNode::new("c", 38.0, 139.0)];
        assert!(matches!(trim_road_subgraph(&g, &canal, 100.0, 0.0), Err(Error::Coverage(_))));
    }
}
