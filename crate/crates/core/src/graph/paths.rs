use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::RoadGraph;

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra; returns distances and predecessor nodes.
fn dijkstra(g: &RoadGraph, source: usize) -> (Vec<f64>, Vec<usize>) {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for a in g.out_arcs(v) {
            let nd = d + a.length;
            if nd < dist[a.to] {
                dist[a.to] = nd;
                pred[a.to] = v;
                heap.push(Entry(nd, a.to));
            }
        }
    }
    (dist, pred)
}

/// Source-by-target distances; unreachable pairs are `+inf`.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    data: Vec<f64>,
}

impl DistanceTable {
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.data[s * self.targets.len() + t]
    }
}

pub fn shortest_path_matrix(g: &RoadGraph, sources: &[usize], targets: &[usize]) -> DistanceTable {
    let mut data = Vec::with_capacity(sources.len() * targets.len());
    for &s in sources {
        let (dist, _) = dijkstra(g, s);
        data.extend(targets.iter().map(|&t| dist[t]));
    }
    DistanceTable {
        sources: sources.to_vec(),
        targets: targets.to_vec(),
        data,
    }
}

/// Length and node sequence of a shortest `from -> to` path.
pub fn shortest_path(g: &RoadGraph, from: usize, to: usize) -> Option<(f64, Vec<usize>)> {
    let (dist, pred) = dijkstra(g, from);
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = pred[v];
        path.push(v);
    }
    path.reverse();
    Some((dist[to], path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeoNode;
    use rand::{Rng, SeedableRng};

    fn floyd_warshall(g: &RoadGraph) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for a in g.arcs() {
            d[a.from][a.to] = d[a.from][a.to].min(a.length);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn matches_floyd_warshall() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let n = rng.gen_range(2..15);
            let nodes = (0..n).map(|i| GeoNode::new(format!("v{i}"), 37.0, 139.0 + i as f64 * 1e-3)).collect();
            let segs: Vec<_> = (0..rng.gen_range(0..3 * n))
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1.0..100.0), rng.gen_bool(0.4)))
                .collect();
            let g = RoadGraph::from_segments(nodes, &segs).unwrap();
            let fw = floyd_warshall(&g);
            let all: Vec<usize> = (0..n).collect();
            let t = shortest_path_matrix(&g, &all, &all);
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (t.get(i, j), fw[i][j]);
                    assert!(a == b || (a - b).abs() < 1e-9, "{i}->{j}: {a} vs {b}");
                    if let Some((len, path)) = shortest_path(&g, i, j) {
                        assert_eq!(path[0], i);
                        assert_eq!(*path.last().unwrap(), j);
                        let walked: f64 = path
                            .windows(2)
                            .map(|w| {
                                g.out_arcs(w[0]).filter(|a| a.to == w[1]).map(|a| a.length).fold(f64::INFINITY, f64::min)
                            })
                            .sum();
                        assert!((walked - len).abs() < 1e-9);
                    } else {
                        assert!(b.is_infinite());
                    }
                }
            }
        }
    }
}
