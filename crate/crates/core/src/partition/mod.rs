//! Splitting the canal tree into connected subgraphs that one fleet can
//! inspect on a single battery charge.

mod tree_dp;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::CanalGraph;
use crate::model::{Relation, VarKind, VarLabel};
use crate::solver::{solve, SolveConfig, SolveStatus};
use crate::{Error, Program, Rational, Result};

use tree_dp::TreeDp;

#[derive(Clone, Debug)]
pub struct PartitionSpec {
    pub k: usize,
    pub m: usize,
    /// Minimum edges per subgraph; defaults to `k`.
    pub size_lower_bound: usize,
    /// Largest subgraph count tried; `None` means the edge count.
    pub max_subgraphs: Option<usize>,
}

impl PartitionSpec {
    pub fn new(k: usize, m: usize) -> Self {
        Self {
            k,
            m,
            size_lower_bound: k,
            max_subgraphs: None,
        }
    }

    pub fn upper(&self) -> usize {
        self.k * self.m
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 || self.size_lower_bound == 0 {
            return Err(Error::Usage(format!(
                "partition needs K, M and the size lower bound all >= 1 (got {}, {}, {})",
                self.k, self.m, self.size_lower_bound
            )));
        }
        Ok(())
    }
}

pub fn initial_subgraph_count(edges: usize, k: usize, m: usize) -> usize {
    edges.div_ceil(k * m)
}

/// Variable positions shared by both partition programs: `x[s,i]` first,
/// then `w[s,e]`.
#[derive(Clone, Copy, Debug)]
pub struct PartitionLayout {
    pub subgraphs: usize,
    pub nodes: usize,
    pub edges: usize,
}

impl PartitionLayout {
    pub fn x(&self, s: usize, i: usize) -> usize {
        s * self.nodes + i
    }

    pub fn w(&self, s: usize, e: usize) -> usize {
        self.subgraphs * self.nodes + s * self.edges + e
    }

    pub fn base_vars(&self) -> usize {
        self.subgraphs * (self.nodes + self.edges)
    }

    /// `E + 3S + S·E`
    pub fn base_rows(&self) -> usize {
        self.edges + 3 * self.subgraphs + self.subgraphs * self.edges
    }
}

fn r(v: i64) -> Rational {
    Rational::from_integer(v)
}

/// Variables and the coverage, size, connectivity and endpoint rows.
fn base_program(canal: &CanalGraph, s_count: usize, spec: &PartitionSpec, name: &str) -> (Program, PartitionLayout) {
    let layout = PartitionLayout {
        subgraphs: s_count,
        nodes: canal.node_count(),
        edges: canal.edge_count(),
    };
    let mut p = Program::new(name);
    for s in 0..s_count {
        for i in 0..layout.nodes {
            p.add_var(VarLabel::new("x", [s, i]));
        }
    }
    for s in 0..s_count {
        for e in 0..layout.edges {
            p.add_var(VarLabel::new("w", [s, e]));
        }
    }
    let var = |k: usize| crate::model::VarId(k);
    for e in 0..layout.edges {
        p.add_constraint((0..s_count).map(|s| (var(layout.w(s, e)), r(1))), Relation::Eq, r(1));
    }
    for s in 0..s_count {
        let edges: Vec<_> = (0..layout.edges).map(|e| (var(layout.w(s, e)), r(1))).collect();
        p.add_constraint(edges.clone(), Relation::Ge, r(spec.size_lower_bound as i64));
        p.add_constraint(edges, Relation::Le, r(spec.upper() as i64));
    }
    for s in 0..s_count {
        let terms = (0..layout.edges)
            .map(|e| (var(layout.w(s, e)), r(1)))
            .chain((0..layout.nodes).map(|i| (var(layout.x(s, i)), r(-1))));
        p.add_constraint(terms, Relation::Eq, r(-1));
    }
    for s in 0..s_count {
        for (e, edge) in canal.edges().iter().enumerate() {
            p.add_constraint(
                [
                    (var(layout.x(s, edge.a)), r(1)),
                    (var(layout.x(s, edge.b)), r(1)),
                    (var(layout.w(s, e)), r(-2)),
                ],
                Relation::Ge,
                r(0),
            );
        }
    }
    debug_assert_eq!(p.var_count(), layout.base_vars());
    debug_assert_eq!(p.constraints.len(), layout.base_rows());
    (p, layout)
}

/// The balancing program as stated: minimise `Σ_s (Σ_i x[s,i])²`.
///
/// Has `S·(N + E)` variables and `E + 3S + S·E` rows.
pub fn build_partition_program(canal: &CanalGraph, s_count: usize, spec: &PartitionSpec) -> (Program, PartitionLayout) {
    let (mut p, layout) = base_program(canal, s_count, spec, "partition");
    for s in 0..s_count {
        let terms: Vec<_> = (0..layout.nodes)
            .map(|i| (crate::model::VarId(layout.x(s, i)), r(1)))
            .collect();
        p.objective.add_squared_sum(&terms, r(0));
    }
    p.objective.canonicalize();
    (p, layout)
}

/// Linear form of the same program. Each subgraph gets one-hot indicators
/// `u[s,n]` for its node count `n ∈ [lb + 1, K·M + 1]`, tied to
/// `Σ_i x[s,i]`, and the objective becomes `Σ n²·u[s,n]`. The feasible sets
/// and optimal values coincide.
pub fn build_indicator_program(canal: &CanalGraph, s_count: usize, spec: &PartitionSpec) -> (Program, PartitionLayout) {
    let (mut p, layout) = base_program(canal, s_count, spec, "partition-indicator");
    let sizes = spec.size_lower_bound + 1..=spec.upper() + 1;
    for s in 0..s_count {
        let u: Vec<_> = sizes
            .clone()
            .map(|n| (n, p.add_var_of_kind(VarLabel::new("u", [s, n]), VarKind::Binary)))
            .collect();
        p.add_constraint(u.iter().map(|&(_, v)| (v, r(1))), Relation::Eq, r(1));
        let count = u
            .iter()
            .map(|&(n, v)| (v, r(n as i64)))
            .chain((0..layout.nodes).map(|i| (crate::model::VarId(layout.x(s, i)), r(-1))));
        p.add_constraint(count, Relation::Eq, r(0));
        for &(n, v) in &u {
            p.objective.add_linear(v, r((n * n) as i64));
        }
    }
    p.objective.canonicalize();
    (p, layout)
}

/// A partition of the canal edges into connected subgraphs.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// Edge indices of each subgraph, ascending; subgraphs ordered by their
    /// smallest edge.
    pub subgraphs: Vec<Vec<usize>>,
    /// `Σ_s nodes(s)²`
    pub objective: u64,
    /// Whether branch-and-bound proved the objective optimal within its
    /// time limit.
    pub certified: bool,
}

impl Partition {
    pub fn new(mut subgraphs: Vec<Vec<usize>>) -> Self {
        for s in &mut subgraphs {
            s.sort_unstable();
        }
        subgraphs.sort_by_key(|s| s.first().copied());
        let objective = subgraphs.iter().map(|s| (s.len() as u64 + 1).pow(2)).sum();
        Self {
            subgraphs,
            objective,
            certified: false,
        }
    }

    pub fn subgraph_count(&self) -> usize {
        self.subgraphs.len()
    }

    /// Subgraph index per edge.
    pub fn edge_assignment(&self, edges: usize) -> Vec<usize> {
        let mut a = vec![usize::MAX; edges];
        for (s, es) in self.subgraphs.iter().enumerate() {
            for &e in es {
                a[e] = s;
            }
        }
        a
    }

    /// Node indices of each subgraph, ascending.
    pub fn node_membership(&self, canal: &CanalGraph) -> Vec<Vec<usize>> {
        self.subgraphs
            .iter()
            .map(|es| {
                let mut nodes: Vec<usize> = es.iter().flat_map(|&e| [canal.edges()[e].a, canal.edges()[e].b]).collect();
                nodes.sort_unstable();
                nodes.dedup();
                nodes
            })
            .collect()
    }

    pub fn subgraph(&self, canal: &CanalGraph, s: usize) -> CanalGraph {
        canal.edge_subgraph(&self.subgraphs[s])
    }

    /// Checks coverage, size bounds and connectivity by traversal.
    pub fn verify(&self, canal: &CanalGraph, spec: &PartitionSpec) -> Result<()> {
        let mut seen = vec![false; canal.edge_count()];
        for (s, es) in self.subgraphs.iter().enumerate() {
            for &e in es {
                if e >= seen.len() || std::mem::replace(&mut seen[e], true) {
                    return Err(Error::Partition(format!("edge {e} is assigned more than once or does not exist")));
                }
            }
            if es.len() < spec.size_lower_bound || es.len() > spec.upper() {
                return Err(Error::Partition(format!(
                    "subgraph {s} has {} edges, outside [{}, {}]",
                    es.len(),
                    spec.size_lower_bound,
                    spec.upper()
                )));
            }
            let sub = self.subgraph(canal, s);
            if !sub.is_tree() {
                return Err(Error::Partition(format!("subgraph {s} is not a connected subtree")));
            }
        }
        if let Some(e) = seen.iter().position(|&b| !b) {
            return Err(Error::Partition(format!("edge {e} is not assigned to any subgraph")));
        }
        Ok(())
    }

    fn from_layout(canal: &CanalGraph, layout: &PartitionLayout, a: &[bool]) -> Self {
        let subgraphs = (0..layout.subgraphs)
            .map(|s| (0..canal.edge_count()).filter(|&e| a[layout.w(s, e)]).collect())
            .collect();
        Self::new(subgraphs)
    }

    fn to_layout(&self, canal: &CanalGraph, layout: &PartitionLayout, total_vars: usize) -> Vec<bool> {
        let mut a = vec![false; total_vars];
        for (s, nodes) in self.node_membership(canal).iter().enumerate() {
            for &i in nodes {
                a[layout.x(s, i)] = true;
            }
            for &e in &self.subgraphs[s] {
                a[layout.w(s, e)] = true;
            }
        }
        a
    }

    pub fn to_file(&self, canal: &CanalGraph) -> PartitionFile {
        let nodes = self.node_membership(canal);
        PartitionFile {
            s: self.subgraph_count(),
            subgraphs: self
                .subgraphs
                .iter()
                .zip(nodes)
                .map(|(es, ns)| SubgraphRecord {
                    edges: es
                        .iter()
                        .map(|&e| {
                            let edge = canal.edges()[e];
                            [canal.node(edge.a).id.clone(), canal.node(edge.b).id.clone()]
                        })
                        .collect(),
                    nodes: ns.iter().map(|&i| canal.node(i).id.clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &PartitionFile, canal: &CanalGraph) -> Result<Self> {
        if file.s != file.subgraphs.len() {
            return Err(Error::Partition(format!(
                "partition declares S = {} but lists {} subgraphs",
                file.s,
                file.subgraphs.len()
            )));
        }
        let mut subgraphs = Vec::with_capacity(file.s);
        for (s, rec) in file.subgraphs.iter().enumerate() {
            let mut es = Vec::with_capacity(rec.edges.len());
            for [a, b] in &rec.edges {
                es.push(canal.edge_between(a, b).ok_or_else(|| {
                    Error::Partition(format!("subgraph {s} lists edge ({a:?}, {b:?}) missing from the canal graph"))
                })?);
            }
            subgraphs.push(es);
        }
        Ok(Self::new(subgraphs))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    #[serde(rename = "S")]
    pub s: usize,
    pub subgraphs: Vec<SubgraphRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgraphRecord {
    pub edges: Vec<[String; 2]>,
    pub nodes: Vec<String>,
}

/// Optimal partition with exactly `s_count` subgraphs, or `None` if there is
/// none. Computed by the exact tree dynamic program only.
pub fn best_partition(canal: &CanalGraph, s_count: usize, spec: &PartitionSpec) -> Option<Partition> {
    if s_count == 0 || canal.edge_count() == 0 {
        return None;
    }
    let dp = TreeDp::new(canal, spec.size_lower_bound, spec.upper(), s_count);
    let (pieces, objective) = dp.solve()?;
    let p = Partition::new(pieces);
    debug_assert_eq!(p.objective, objective);
    Some(p)
}

/// Above this tableau size the binary program is not run and the tree
/// program's optimum is returned uncertified.
pub const MAX_CERTIFY_CELLS: usize = 8_000_000;

pub fn default_partition_solver() -> SolveConfig {
    SolveConfig {
        time_limit: Duration::from_secs(60),
        ..SolveConfig::default()
    }
}

/// Searches `S = s_o, s_o + 1, …` and returns the first feasible count with
/// an optimal partition.
pub fn partition_canal(canal: &CanalGraph, spec: &PartitionSpec) -> Result<Partition> {
    partition_canal_from(canal, spec, None, &default_partition_solver())
}

/// As [`partition_canal`], optionally starting the search at a larger
/// count. Feasibility of each count is decided by the tree dynamic program;
/// the first feasible count is then solved as a binary program seeded with
/// that solution, which certifies optimality.
pub fn partition_canal_from(
    canal: &CanalGraph,
    spec: &PartitionSpec,
    start: Option<usize>,
    solver: &SolveConfig,
) -> Result<Partition> {
    spec.validate()?;
    canal.ensure_tree()?;
    let n_e = canal.edge_count();
    if n_e == 0 {
        return Err(Error::Partition("canal graph has no edges".into()));
    }
    let s_o = initial_subgraph_count(n_e, spec.k, spec.m).max(start.unwrap_or(0));
    let cap = spec.max_subgraphs.unwrap_or(n_e);
    for s in s_o..=cap {
        let Some(seed) = best_partition(canal, s, spec) else {
            log::debug!("no partition into {s} subgraphs");
            continue;
        };
        let (program, layout) = build_indicator_program(canal, s, spec);
        let cells = program.constraints.len() * (program.var_count() + program.constraints.len());
        if cells > MAX_CERTIFY_CELLS {
            log::info!("S = {s}: program too large to certify ({cells} tableau cells), keeping the tree program optimum");
            seed.verify(canal, spec)?;
            return Ok(seed);
        }
        let mut initial = seed.to_layout(canal, &layout, program.var_count());
        for (s_idx, es) in seed.subgraphs.iter().enumerate() {
            let n = es.len() + 1;
            let u = layout.base_vars() + s_idx * (spec.upper() - spec.size_lower_bound + 1) + (n - spec.size_lower_bound - 1);
            initial[u] = true;
        }
        let cfg = SolveConfig {
            initial: Some(initial),
            ..solver.clone()
        };
        let res = solve(&program, &cfg)?;
        let assignment = res
            .assignment
            .as_ref()
            .ok_or_else(|| Error::Partition(format!("solver lost the seeded partition for S = {s}")))?;
        let mut found = Partition::from_layout(canal, &layout, assignment);
        found.certified = res.status == SolveStatus::Optimal;
        if !found.certified {
            log::warn!("partition optimality for S = {s} not certified within the time limit");
        }
        if found.objective != seed.objective {
            return Err(Error::Partition(format!(
                "branch-and-bound objective {} disagrees with the tree program {} at S = {s}",
                found.objective, seed.objective
            )));
        }
        // equal cost: keep the dynamic program's tie-break
        let mut out = seed;
        out.certified = found.certified;
        out.verify(canal, spec)?;
        log::info!("partitioned {n_e} edges into {s} subgraphs, objective {}", out.objective);
        return Ok(out);
    }
    Err(no_partition_error(canal, spec, s_o, cap))
}

fn no_partition_error(canal: &CanalGraph, spec: &PartitionSpec, from: usize, to: usize) -> Error {
    let n_e = canal.edge_count();
    let relaxed = PartitionSpec {
        size_lower_bound: 1,
        ..spec.clone()
    };
    let binding = if spec.size_lower_bound > 1 && (from..=to).any(|s| best_partition(canal, s, &relaxed).is_some()) {
        format!(
            "the lower bound of {} edges per subgraph is unsatisfiable; lower sizeLowerBound",
            spec.size_lower_bound
        )
    } else if from > to {
        format!("the search cap {to} is below the initial count {from}")
    } else {
        format!(
            "no connected split respects the upper bound of K·M = {} edges; raise maxSubgraphs or the fleet size",
            spec.upper()
        )
    };
    Error::Partition(format!("no feasible partition of {n_e} edges with S in [{from}, {to}]: {binding}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeoNode;
    use crate::solver::{enumerate, solve_quadratic};

    fn path(n_edges: usize) -> CanalGraph {
        let nodes = (0..=n_edges).map(|i| GeoNode::new(format!("p{i}"), 37.0, 139.0 + 0.001 * i as f64)).collect();
        let ids: Vec<String> = (0..=n_edges).map(|i| format!("p{i}")).collect();
        let pairs: Vec<(&str, &str)> = (0..n_edges).map(|i| (ids[i].as_str(), ids[i + 1].as_str())).collect();
        CanalGraph::from_ids(nodes, &pairs).unwrap()
    }

    fn star(leaves: usize) -> CanalGraph {
        let mut nodes = vec![GeoNode::new("c", 37.0, 139.0)];
        nodes.extend((0..leaves).map(|i| GeoNode::new(format!("l{i}"), 37.001, 139.0 + 0.001 * i as f64)));
        let ids: Vec<String> = (0..leaves).map(|i| format!("l{i}")).collect();
        let pairs: Vec<(&str, &str)> = ids.iter().map(|l| ("c", l.as_str())).collect();
        CanalGraph::from_ids(nodes, &pairs).unwrap()
    }

    #[test]
    fn initial_count() {
        assert_eq!(initial_subgraph_count(77, 4, 3), 7);
        assert_eq!(initial_subgraph_count(12, 4, 3), 1);
        assert_eq!(initial_subgraph_count(13, 4, 3), 2);
    }

    #[test]
    fn single_edge_program_has_one_point() {
        let g = path(1);
        let (p, layout) = build_partition_program(&g, 1, &PartitionSpec::new(1, 1));
        assert_eq!(p.var_count(), 3);
        assert_eq!(p.constraints.len(), layout.base_rows());
        let res = enumerate(&p).unwrap();
        assert_eq!(res.assignment.unwrap(), vec![true, true, true]);
        assert_eq!(res.objective, Some(r(4)));
    }

    #[test]
    fn coverage_rows_come_first() {
        let g = path(5);
        let (p, _) = build_partition_program(&g, 3, &PartitionSpec::new(1, 3));
        assert!(p.constraints[..5].iter().all(|c| c.relation == Relation::Eq && c.terms.len() == 3));
    }

    #[test]
    fn star_fits_in_one_subgraph() {
        let p = partition_canal(&star(3), &PartitionSpec::new(1, 3)).unwrap();
        assert_eq!(p.subgraphs, vec![vec![0, 1, 2]]);
        assert!(p.certified);
    }

    #[test]
    fn literal_and_indicator_programs_agree() {
        let g = path(5);
        let spec = PartitionSpec::new(2, 2);
        let (lit, _) = build_partition_program(&g, 2, &spec);
        let (ind, _) = build_indicator_program(&g, 2, &spec);
        let a = solve_quadratic(&lit, &SolveConfig::default()).unwrap();
        let b = solve(&ind, &SolveConfig::default()).unwrap();
        // 5 edges as 2 + 3 -> 9 + 16
        assert_eq!(a.objective, Some(r(25)));
        assert_eq!(b.objective, Some(r(25)));
        assert_eq!(best_partition(&g, 2, &spec).unwrap().objective, 25);
    }

    #[test]
    fn lower_bound_error_names_the_constraint() {
        let mut spec = PartitionSpec::new(3, 2);
        spec.max_subgraphs = Some(2);
        // two subgraphs of at least 3 edges cannot share 4 edges
        let err = partition_canal_from(&path(4), &spec, Some(2), &default_partition_solver()).unwrap_err();
        assert!(err.to_string().contains("sizeLowerBound"), "{err}");
    }

    #[test]
    fn path_pieces_preferred_on_ties() {
        // star with a tail: c-l0, c-l1, c-l2 plus l0-t; K·M = 2, two pieces
        let mut nodes = vec![GeoNode::new("c", 37.0, 139.0)];
        for (i, id) in ["a", "b", "t"].iter().enumerate() {
            nodes.push(GeoNode::new(*id, 37.001, 139.0 + 0.001 * i as f64));
        }
        let g = CanalGraph::from_ids(nodes, &[("c", "a"), ("c", "b"), ("a", "t")]).unwrap();
        let spec = PartitionSpec {
            size_lower_bound: 1,
            ..PartitionSpec::new(1, 2)
        };
        let p = partition_canal(&g, &spec).unwrap();
        assert_eq!(p.objective, 9 + 4);
        for s in 0..p.subgraph_count() {
            let sub = p.subgraph(&g, s);
            assert!((0..sub.node_count()).all(|i| sub.degree(i) <= 2));
        }
    }

    #[test]
    fn json_roundtrip() {
        let g = path(6);
        let p = partition_canal(&g, &PartitionSpec::new(1, 3)).unwrap();
        let file = p.to_file(&g);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.starts_with("{\"S\":2"));
        let back = Partition::from_file(&serde_json::from_str(&text).unwrap(), &g).unwrap();
        assert_eq!(back.subgraphs, p.subgraphs);
    }
}
