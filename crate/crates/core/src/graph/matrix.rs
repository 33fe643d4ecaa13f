use super::{planar_distance, CanalGraph, RoadGraph};
use crate::{Error, Result};

/// Dense 0/1 matrix; row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    data: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            data: vec![false; n * n],
        }
    }

    /// Symmetric canal adjacency; `self_loops` sets the diagonal.
    pub fn of_canal(g: &CanalGraph, self_loops: bool) -> Self {
        let mut m = Self::empty(g.node_count());
        for e in g.edges() {
            m.set(e.a, e.b, true);
            m.set(e.b, e.a, true);
        }
        if self_loops {
            m.set_diagonal();
        }
        m
    }

    /// `A(i, j) = 1` iff there is an arc `i -> j`.
    pub fn of_road(g: &RoadGraph, self_loops: bool) -> Self {
        let mut m = Self::empty(g.node_count());
        for a in g.arcs() {
            m.set(a.from, a.to, true);
        }
        if self_loops {
            m.set_diagonal();
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.n + j] = v;
    }

    fn set_diagonal(&mut self) {
        for i in 0..self.n {
            self.set(i, i, true);
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.get(i, j))
    }

    /// Reachability within at most `hops` steps (diagonal included).
    pub fn reachability(&self, hops: usize) -> Self {
        let mut reach = Self::empty(self.n);
        reach.set_diagonal();
        for _ in 0..hops {
            let mut next = reach.clone();
            for i in 0..self.n {
                for k in 0..self.n {
                    if reach.get(i, k) {
                        for j in self.row(k) {
                            next.set(i, j, true);
                        }
                    }
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        reach
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// `R(i, j) = 1` iff road node `i` is within `r_max` meters of canal node
/// `j`, i.e. a car parked there can relay to a UAV there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl TransmissionMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols.max(1), k % cols.max(1))).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, road: usize, canal: usize) -> bool {
        self.data[road * self.cols + canal]
    }

    /// Canal nodes in range of road node `road`.
    pub fn covered_by(&self, road: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cols).filter(move |&j| self.get(road, j))
    }

    pub fn ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

pub fn transmission_matrix(road: &RoadGraph, canal: &CanalGraph, r_max: f64) -> Result<TransmissionMatrix> {
    if !(r_max > 0.0) {
        return Err(Error::Usage(format!("communication radius must be positive, got {r_max}")));
    }
    let (rows, cols) = (road.node_count(), canal.node_count());
    let mut data = vec![false; rows * cols];
    for (i, r) in road.nodes().iter().enumerate() {
        for (j, c) in canal.nodes().iter().enumerate() {
            data[i * cols + j] = planar_distance(r, c) <= r_max;
        }
    }
    Ok(TransmissionMatrix { rows, cols, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeoNode;

    fn line(n: usize, lat: f64) -> Vec<GeoNode> {
        (0..n).map(|i| GeoNode::new(format!("p{i}"), lat, 139.0 + 0.001 * i as f64)).collect()
    }

    #[test]
    fn canal_matrix_is_symmetric_with_loops() {
        let g = CanalGraph::from_ids(line(3, 37.0), &[("p0", "p1"), ("p1", "p2")]).unwrap();
        let a = AdjacencyMatrix::of_canal(&g, true);
        assert!(a.is_symmetric());
        assert!(a.get(0, 0) && a.get(0, 1) && !a.get(0, 2));
        assert!(!AdjacencyMatrix::of_canal(&g, false).get(1, 1));
    }

    #[test]
    fn road_reachability() {
        let r = RoadGraph::from_segments(line(4, 37.0), &[(0, 1, 1.0, true), (1, 2, 1.0, true), (2, 3, 1.0, true)])
            .unwrap();
        let a = AdjacencyMatrix::of_road(&r, false);
        assert!(a.get(0, 1) && !a.get(1, 0));
        let two = a.reachability(2);
        assert!(two.get(0, 2) && !two.get(0, 3) && two.get(3, 3));
        assert_eq!(a.reachability(10), a.reachability(3));
    }

    #[test]
    fn coincident_nodes_always_in_range() {
        let canal = CanalGraph::from_ids(line(2, 37.0), &[("p0", "p1")]).unwrap();
        let road = RoadGraph::from_segments(line(2, 37.0), &[(0, 1, 1.0, false)]).unwrap();
        let t = transmission_matrix(&road, &canal, 1e-9).unwrap();
        assert!(t.get(0, 0) && t.get(1, 1) && !t.get(0, 1));
    }

    #[test]
    fn distant_sets_give_zero_matrix() {
        let canal = CanalGraph::from_ids(line(2, 37.0), &[("p0", "p1")]).unwrap();
        let road = RoadGraph::from_segments(line(2, 37.5), &[(0, 1, 1.0, false)]).unwrap();
        assert_eq!(transmission_matrix(&road, &canal, 1.0).unwrap().ones(), 0);
        assert!(transmission_matrix(&road, &canal, 0.0).is_err());
    }

    #[test]
    fn monotone_in_radius() {
        let canal = CanalGraph::from_ids(line(5, 37.0), &[("p0", "p1"), ("p1", "p2"), ("p2", "p3"), ("p3", "p4")])
            .unwrap();
        let road = RoadGraph::from_segments(line(5, 37.002), &[]).unwrap();
        let mut prev = transmission_matrix(&road, &canal, 10.0).unwrap();
        for r in [100.0, 250.0, 400.0, 1000.0] {
            let t = transmission_matrix(&road, &canal, r).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    assert!(!prev.get(i, j) || t.get(i, j));
                }
            }
            prev = t;
        }
    }
}
