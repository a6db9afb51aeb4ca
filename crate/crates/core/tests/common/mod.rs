//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use bdmatch::stream::{Edge, EventKind, Graph, StreamSpec};
use bdmatch::Matching;
use rand::Rng;

/// Largest matching size by search over vertex subsets, memoized on the
/// set of used vertices. Fine up to about 16 vertices.
pub fn brute_max_matching(n: usize, edges: &[Edge]) -> usize {
    assert!(n <= 20);
    let mut adj = vec![0u32; n];
    for e in edges {
        adj[e.u() as usize] |= 1 << e.v();
        adj[e.v() as usize] |= 1 << e.u();
    }
    fn go(used: u32, n: usize, adj: &[u32], memo: &mut HashMap<u32, usize>) -> usize {
        let Some(v) = (0..n).find(|&v| used & (1 << v) == 0) else {
            return 0;
        };
        if let Some(&r) = memo.get(&used) {
            return r;
        }
        let used_v = used | (1 << v);
        let mut best = go(used_v, n, adj, memo);
        let mut free = adj[v] & !used_v;
        while free != 0 {
            let w = free.trailing_zeros();
            free &= free - 1;
            best = best.max(1 + go(used_v | (1 << w), n, adj, memo));
        }
        memo.insert(used, best);
        best
    }
    go(0, n, &adj, &mut HashMap::new())
}

/// Maximality straight from the definition: a valid matching of `edges`
/// with no edge whose endpoints are both free.
pub fn brute_is_maximal(n: usize, edges: &[Edge], m: &[Edge]) -> bool {
    let set: BTreeSet<Edge> = edges.iter().copied().collect();
    let mut used = vec![false; n];
    for e in m {
        if !set.contains(e) {
            return false;
        }
        for x in e.endpoints() {
            if std::mem::replace(&mut used[x as usize], true) {
                return false;
            }
        }
    }
    edges.iter().all(|e| used[e.u() as usize] || used[e.v() as usize])
}

pub fn matching_edges(m: &Matching) -> Vec<Edge> {
    m.edges().collect()
}

pub fn graph_edges(g: &Graph) -> Vec<Edge> {
    g.edges().collect()
}

/// Final edge set by naive replay over a plain list.
pub fn naive_replay(spec: &StreamSpec) -> BTreeSet<Edge> {
    let mut live: Vec<Edge> = Vec::new();
    for ev in &spec.events {
        match ev.kind {
            EventKind::Insert => live.push(ev.edge),
            EventKind::Delete => {
                let i = live.iter().position(|&e| e == ev.edge).expect("deleting a live edge");
                live.swap_remove(i);
            }
        }
    }
    live.into_iter().collect()
}

pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    pub fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a] = b;
    }
}

/// Every edge of `K_n` independently with probability `p`.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<Edge> {
    let mut out = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen_bool(p) {
                out.push(Edge::of(a, b));
            }
        }
    }
    out
}

/// Edges of the graph on `n` vertices encoded by the bits of `mask`, in
/// lexicographic pair order.
pub fn graph_from_mask(n: usize, mask: u64) -> Vec<Edge> {
    let mut out = Vec::new();
    let mut bit = 0;
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if mask >> bit & 1 == 1 {
                out.push(Edge::of(a, b));
            }
            bit += 1;
        }
    }
    out
}
