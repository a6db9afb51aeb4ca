//! Exact offline references: maximality check, maximum matching, and a
//! naive stream replay.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::stream::{Edge, EventKind, Graph, StreamSpec, Violation};

/// Outcome of checking a matching against a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub is_valid_matching: bool,
    pub is_maximal: bool,
    /// First edge in canonical order with both endpoints unmatched.
    pub witness: Option<Edge>,
    pub max_matching_size: Option<usize>,
}

/// Checks that `m` uses only edges of `g` and cannot be extended.
pub fn check_maximal(g: &Graph, m: &Matching) -> Verdict {
    let is_valid_matching =
        m.n() == g.n() && m.is_consistent() && m.edges().all(|e| g.has_edge(e));
    let witness = if m.n() == g.n() {
        g.edges().find(|&e| m.can_add(e))
    } else {
        None
    };
    Verdict {
        is_valid_matching,
        is_maximal: is_valid_matching && witness.is_none(),
        witness,
        max_matching_size: None,
    }
}

/// [`check_maximal`] plus the size of a maximum matching of `g`.
pub fn verify(g: &Graph, m: &Matching) -> Verdict {
    Verdict {
        max_matching_size: Some(max_matching(g).len()),
        ..check_maximal(g, m)
    }
}

/// Greedy maximal matching in canonical edge order.
pub fn greedy_maximal(g: &Graph) -> Matching {
    let mut m = Matching::new(g.n());
    for e in g.edges() {
        m.add(e);
    }
    m
}

const NONE: usize = usize::MAX;

/// Maximum-cardinality matching by Edmonds' blossom algorithm, seeded
/// with a greedy matching.
pub fn max_matching(g: &Graph) -> Matching {
    let n = g.n();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|v| g.neighbors(v as u32).iter().map(|&w| w as usize).collect())
        .collect();
    let mut mate = vec![NONE; n];
    for e in g.edges() {
        let (u, v) = (e.u() as usize, e.v() as usize);
        if mate[u] == NONE && mate[v] == NONE {
            mate[u] = v;
            mate[v] = u;
        }
    }
    let mut search = Blossom::new(n);
    for root in 0..n {
        if mate[root] != NONE {
            continue;
        }
        if let Some(mut v) = search.find_path(root, &adj, &mate) {
            while v != NONE {
                let pv = search.parent[v];
                let next = mate[pv];
                mate[v] = pv;
                mate[pv] = v;
                v = next;
            }
        }
    }
    let mut m = Matching::new(n);
    for (u, &v) in mate.iter().enumerate() {
        if v != NONE && u < v {
            m.add(Edge::of(u as u32, v as u32));
        }
    }
    m
}

struct Blossom {
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    queue: VecDeque<usize>,
}

impl Blossom {
    fn new(n: usize) -> Self {
        Blossom {
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            queue: VecDeque::new(),
        }
    }

    fn lca(&self, mate: &[usize], mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; mate.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if mate[a] == NONE {
                break;
            }
            a = self.parent[mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[mate[b]];
        }
    }

    fn mark_path(&mut self, mate: &[usize], mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[mate[v]]] = true;
            self.parent[v] = child;
            child = mate[v];
            v = self.parent[mate[v]];
        }
    }

    /// Breadth-first search for an augmenting path from `root`; returns its
    /// free far endpoint, with the path stored in `parent`.
    fn find_path(&mut self, root: usize, adj: &[Vec<usize>], mate: &[usize]) -> Option<usize> {
        let n = mate.len();
        self.parent.fill(NONE);
        self.used.fill(false);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.queue.clear();
        self.used[root] = true;
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for &to in &adj[v] {
                if self.base[v] == self.base[to] || mate[v] == to {
                    continue;
                }
                if to == root || (mate[to] != NONE && self.parent[mate[to]] != NONE) {
                    let cur = self.lca(mate, v, to);
                    self.in_blossom.fill(false);
                    self.mark_path(mate, v, cur, to);
                    self.mark_path(mate, to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if mate[to] == NONE {
                        return Some(to);
                    }
                    self.used[mate[to]] = true;
                    self.queue.push_back(mate[to]);
                }
            }
        }
        None
    }
}

/// Final graph by counting replay: every insert adds one to the edge's
/// multiplicity and every delete subtracts one. Shares no code with
/// [`crate::stream::final_graph`].
pub fn replay_reference(spec: &StreamSpec) -> Result<Graph> {
    let mut count: HashMap<(u32, u32), i64> = HashMap::new();
    let mut deletions = 0;
    for ev in &spec.events {
        let (a, b) = (ev.edge.u(), ev.edge.v());
        if a as usize >= spec.n || b as usize >= spec.n {
            return Err(Error::InvalidStream {
                seq: ev.seq,
                violation: Violation::VertexOutOfRange(ev.edge),
            });
        }
        let c = count.entry((a, b)).or_insert(0);
        match ev.kind {
            EventKind::Insert => {
                *c += 1;
                if *c > 1 {
                    return Err(Error::InvalidStream {
                        seq: ev.seq,
                        violation: Violation::DuplicateInsert(ev.edge),
                    });
                }
            }
            EventKind::Delete => {
                *c -= 1;
                deletions += 1;
                if *c < 0 {
                    return Err(Error::InvalidStream {
                        seq: ev.seq,
                        violation: Violation::DeleteAbsent(ev.edge),
                    });
                }
                if deletions > spec.k {
                    return Err(Error::InvalidStream {
                        seq: ev.seq,
                        violation: Violation::BudgetExceeded { budget: spec.k },
                    });
                }
            }
        }
    }
    let edges = count
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|((a, b), _)| Edge::of(a, b));
    Ok(Graph::from_edges(spec.n, edges))
}
