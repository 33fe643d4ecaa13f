//! Exact dynamic program over the rooted canal tree: for a given subgraph
//! count it finds an edge partition into connected pieces with sizes in
//! `[lb, ub]` minimising `Σ (edges + 1)²`, or proves none exists.
//!
//! Ties are broken by the number of branch points inside pieces, so among
//! equally balanced partitions the most path-like one is returned.

use std::collections::BTreeMap;

use crate::graph::CanalGraph;

/// `(Σ nodes², Σ branching excess)`, compared lexicographically.
type Cost = (u64, u64);

fn add(a: Cost, b: Cost) -> Cost {
    (a.0 + b.0, a.1 + b.1)
}

/// One child's contribution at its parent: which table entry it used and
/// which group its edge joined (`None` for the group through the parent edge).
#[derive(Clone, Debug)]
struct Choice {
    child: usize,
    key: (u32, u32),
    group: Option<usize>,
}

#[derive(Clone, Debug)]
struct Entry {
    cost: Cost,
    choices: Vec<Choice>,
}

/// Sequential state while folding in children: closed pieces, size of the
/// group through the parent edge, and sizes of the other open groups.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Partial {
    closed: u32,
    up: u32,
    up_members: u32,
    others: Vec<(u32, u32)>,
}

pub(crate) struct TreeDp<'a> {
    canal: &'a CanalGraph,
    lb: u32,
    ub: u32,
    pieces: u32,
    /// per node: children as `(child, edge)`
    children: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
    root: usize,
}

impl<'a> TreeDp<'a> {
    pub(crate) fn new(canal: &'a CanalGraph, lb: usize, ub: usize, pieces: usize) -> Self {
        let n = canal.node_count();
        let adj = canal.adjacency_lists();
        let root = canal.leaves().first().copied().unwrap_or(0);
        let mut children = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &(w, e) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    children[v].push((w, e));
                    stack.push(w);
                }
            }
        }
        order.reverse();
        Self {
            canal,
            lb: lb as u32,
            ub: ub as u32,
            pieces: pieces as u32,
            children,
            order,
            root,
        }
    }

    fn close_cost(&self, size: u32, members: u32) -> Option<Cost> {
        (size >= self.lb && size <= self.ub).then(|| ((size as u64 + 1).pow(2), members.saturating_sub(2) as u64))
    }

    /// Folds the children of `v` into partial states.
    fn fold(&self, v: usize, tables: &[BTreeMap<(u32, u32), Entry>], has_parent: bool) -> BTreeMap<Partial, Entry> {
        let mut states: BTreeMap<Partial, Entry> = BTreeMap::new();
        states.insert(
            Partial {
                closed: 0,
                up: u32::from(has_parent),
                up_members: u32::from(has_parent),
                others: Vec::new(),
            },
            Entry {
                cost: (0, 0),
                choices: Vec::new(),
            },
        );
        for &(c, _) in &self.children[v] {
            let mut next: BTreeMap<Partial, Entry> = BTreeMap::new();
            let mut offer = |p: Partial, e: Entry| match next.get(&p) {
                Some(old) if old.cost <= e.cost => {}
                _ => {
                    next.insert(p, e);
                }
            };
            for (p, entry) in &states {
                for (&(cc, cs), ce) in &tables[c] {
                    let closed = p.closed + cc;
                    if closed > self.pieces {
                        continue;
                    }
                    let cost = add(entry.cost, ce.cost);
                    let with = |group: Option<usize>| {
                        let mut choices = entry.choices.clone();
                        choices.push(Choice {
                            child: c,
                            key: (cc, cs),
                            group,
                        });
                        Entry { cost, choices }
                    };
                    if has_parent && p.up + cs <= self.ub {
                        let mut q = p.clone();
                        q.closed = closed;
                        q.up += cs;
                        q.up_members += 1;
                        offer(q, with(None));
                    }
                    for g in 0..p.others.len() {
                        if p.others[g].0 + cs <= self.ub {
                            let mut q = p.clone();
                            q.closed = closed;
                            q.others[g].0 += cs;
                            q.others[g].1 += 1;
                            offer(q, with(Some(g)));
                        }
                    }
                    let mut q = p.clone();
                    q.closed = closed;
                    q.others.push((cs, 1));
                    offer(q, with(Some(p.others.len())));
                }
            }
            states = next;
        }
        states
    }

    /// Closes the non-parent groups of every partial state.
    fn finish(&self, states: BTreeMap<Partial, Entry>, has_parent: bool) -> BTreeMap<(u32, u32), Entry> {
        let mut table: BTreeMap<(u32, u32), Entry> = BTreeMap::new();
        'state: for (p, mut e) in states {
            let mut closed = p.closed;
            for &(size, members) in &p.others {
                let Some(c) = self.close_cost(size, members) else {
                    continue 'state;
                };
                e.cost = add(e.cost, c);
                closed += 1;
            }
            if closed > self.pieces {
                continue;
            }
            let key = if has_parent {
                e.cost.1 += p.up_members.saturating_sub(2) as u64;
                (closed, p.up)
            } else {
                (closed, 0)
            };
            match table.get(&key) {
                Some(old) if old.cost <= e.cost => {}
                _ => {
                    table.insert(key, e);
                }
            }
        }
        table
    }

    /// Optimal pieces (edge lists) and their `Σ nodes²`, or `None` when no
    /// partition into exactly `pieces` subgraphs exists.
    pub(crate) fn solve(&self) -> Option<(Vec<Vec<usize>>, u64)> {
        let n = self.canal.node_count();
        let mut tables: Vec<BTreeMap<(u32, u32), Entry>> = vec![BTreeMap::new(); n];
        for &v in &self.order {
            let has_parent = v != self.root;
            let states = self.fold(v, &tables, has_parent);
            tables[v] = self.finish(states, has_parent);
        }
        let best = tables[self.root].get(&(self.pieces, 0))?;
        let objective = best.cost.0;
        let mut label = vec![usize::MAX; self.canal.edge_count()];
        let mut next_piece = 0;
        self.assign(self.root, &tables, best, None, &mut label, &mut next_piece);
        let mut pieces = vec![Vec::new(); next_piece];
        for (e, &l) in label.iter().enumerate() {
            pieces[l].push(e);
        }
        Some((pieces, objective))
    }

    fn assign(
        &self,
        v: usize,
        tables: &[BTreeMap<(u32, u32), Entry>],
        entry: &Entry,
        up: Option<usize>,
        label: &mut [usize],
        next_piece: &mut usize,
    ) {
        let mut groups: Vec<usize> = Vec::new();
        for ch in &entry.choices {
            let piece = match ch.group {
                None => up.expect("only non-root nodes join the parent group"),
                Some(g) => {
                    while groups.len() <= g {
                        groups.push(*next_piece);
                        *next_piece += 1;
                    }
                    groups[g]
                }
            };
            let edge = self.children[v].iter().find(|(c, _)| *c == ch.child).unwrap().1;
            label[edge] = piece;
            self.assign(ch.child, tables, &tables[ch.child][&ch.key], Some(piece), label, next_piece);
        }
    }
}
