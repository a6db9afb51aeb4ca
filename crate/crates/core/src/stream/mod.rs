//! The bounded-deletion stream model.
//!
//! A stream over a fixed vertex set `[0, n)` is a sequence of edge
//! insertions and deletions with at most `K` deletions in total. Every
//! prefix must describe a simple graph: an edge may only be inserted while
//! absent and only deleted while present. Insertions and deletions taken on
//! their own may therefore be multisets (insert, delete, insert again), and
//! the final graph is `E = I \ D`.

mod format;
pub(crate) mod generate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{parse_stream, read_stream, write_stream, StreamWriter};
pub use generate::{generate, GeneratorConfig, GeneratorKind};

pub type VertexId = u32;

/// An undirected edge, stored canonically with `u < v`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(VertexId, VertexId)", into = "(VertexId, VertexId)")]
pub struct Edge {
    u: VertexId,
    v: VertexId,
}

impl Edge {
    pub fn new(a: VertexId, b: VertexId) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfLoop(a as u64)),
        }
    }

    /// Panics on a self-loop. For literals in tests and generators.
    pub fn of(a: VertexId, b: VertexId) -> Self {
        Self::new(a, b).expect("self-loop")
    }

    pub fn u(self) -> VertexId {
        self.u
    }

    pub fn v(self) -> VertexId {
        self.v
    }

    pub fn endpoints(self) -> [VertexId; 2] {
        [self.u, self.v]
    }

    pub fn touches(self, w: VertexId) -> bool {
        self.u == w || self.v == w
    }

    pub fn other(self, w: VertexId) -> Option<VertexId> {
        if self.u == w {
            Some(self.v)
        } else if self.v == w {
            Some(self.u)
        } else {
            None
        }
    }

    pub fn shares_endpoint(self, other: Edge) -> bool {
        self.touches(other.u) || self.touches(other.v)
    }

    /// Position of the edge in the `n²`-dimensional edge-indicator vector.
    pub fn coordinate(self, n: usize) -> u64 {
        self.u as u64 * n as u64 + self.v as u64
    }

    /// Inverse of [`Edge::coordinate`]; `None` for coordinates that do not
    /// encode a canonical edge over `[0, n)`.
    pub fn from_coordinate(c: u64, n: usize) -> Option<Edge> {
        let n = n as u64;
        if n == 0 {
            return None;
        }
        let (u, v) = (c / n, c % n);
        (u < v && v < n).then_some(Edge {
            u: u as VertexId,
            v: v as VertexId,
        })
    }

    pub(crate) fn check_range(self, n: usize) -> Result<()> {
        if (self.v as usize) < n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: self.v as u64,
                n,
            })
        }
    }
}

impl TryFrom<(VertexId, VertexId)> for Edge {
    type Error = Error;
    fn try_from((a, b): (VertexId, VertexId)) -> Result<Self> {
        Edge::new(a, b)
    }
}

impl From<Edge> for (VertexId, VertexId) {
    fn from(e: Edge) -> Self {
        (e.u, e.v)
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Insert,
    Delete,
}

impl EventKind {
    pub fn delta(self) -> i64 {
        match self {
            EventKind::Insert => 1,
            EventKind::Delete => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub edge: Edge,
    pub kind: EventKind,
    pub seq: u64,
}

impl EdgeEvent {
    pub fn insert(edge: Edge, seq: u64) -> Self {
        EdgeEvent {
            edge,
            kind: EventKind::Insert,
            seq,
        }
    }

    pub fn delete(edge: Edge, seq: u64) -> Self {
        EdgeEvent {
            edge,
            kind: EventKind::Delete,
            seq,
        }
    }

    pub fn is_delete(&self) -> bool {
        self.kind == EventKind::Delete
    }
}

/// A complete stream: vertex count, deletion budget and events.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub n: usize,
    pub k: usize,
    pub events: Vec<EdgeEvent>,
}

impl StreamSpec {
    pub fn new(n: usize, k: usize) -> Self {
        StreamSpec {
            n,
            k,
            events: Vec::new(),
        }
    }

    /// Builds a stream from `(kind, a, b)` triples, numbering events from 1.
    pub fn from_ops<I>(n: usize, k: usize, ops: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EventKind, VertexId, VertexId)>,
    {
        let mut spec = StreamSpec::new(n, k);
        for (kind, a, b) in ops {
            spec.push(kind, Edge::new(a, b)?);
        }
        Ok(spec)
    }

    pub fn push(&mut self, kind: EventKind, edge: Edge) {
        let seq = self.events.last().map_or(1, |e| e.seq + 1);
        self.events.push(EdgeEvent { edge, kind, seq });
    }

    pub fn insert(&mut self, edge: Edge) {
        self.push(EventKind::Insert, edge);
    }

    pub fn delete(&mut self, edge: Edge) {
        self.push(EventKind::Delete, edge);
    }

    pub fn deletion_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_delete()).count()
    }

    /// Consuming view of the events, for the single-pass drivers.
    pub fn into_events(self) -> std::vec::IntoIter<EdgeEvent> {
        self.events.into_iter()
    }
}

/// First rule a stream breaks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DuplicateInsert(Edge),
    DeleteAbsent(Edge),
    BudgetExceeded { budget: usize },
    VertexOutOfRange(Edge),
    NonMonotoneSeq { previous: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateInsert(e) => write!(f, "insert of present edge {e}"),
            Violation::DeleteAbsent(e) => write!(f, "delete of absent edge {e}"),
            Violation::BudgetExceeded { budget } => {
                write!(f, "more than {budget} deletions")
            }
            Violation::VertexOutOfRange(e) => write!(f, "edge {e} leaves the vertex set"),
            Violation::NonMonotoneSeq { previous } => {
                write!(f, "sequence number not above {previous}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    /// `(seq, violation)` for the first offending event.
    pub violation: Option<(u64, Violation)>,
    /// Edge set after the last valid event; the final graph when OK.
    pub edges: BTreeSet<Edge>,
    pub deletions: usize,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }

    pub fn into_result(self) -> Result<BTreeSet<Edge>> {
        match self.violation {
            None => Ok(self.edges),
            Some((seq, violation)) => Err(Error::InvalidStream { seq, violation }),
        }
    }
}

/// Replays the stream under set semantics and reports the first event that
/// breaks prefix simplicity, the deletion budget, or the vertex range.
pub fn validate_stream(spec: &StreamSpec) -> ValidationReport {
    let mut edges = BTreeSet::new();
    let mut deletions = 0usize;
    let mut last_seq: Option<u64> = None;
    for ev in &spec.events {
        let violation = if last_seq.is_some_and(|p| ev.seq <= p) {
            Some(Violation::NonMonotoneSeq {
                previous: last_seq.unwrap(),
            })
        } else if ev.edge.check_range(spec.n).is_err() {
            Some(Violation::VertexOutOfRange(ev.edge))
        } else {
            match ev.kind {
                EventKind::Insert => (!edges.insert(ev.edge)).then_some(Violation::DuplicateInsert(ev.edge)),
                EventKind::Delete => {
                    if !edges.remove(&ev.edge) {
                        Some(Violation::DeleteAbsent(ev.edge))
                    } else {
                        deletions += 1;
                        (deletions > spec.k).then_some(Violation::BudgetExceeded { budget: spec.k })
                    }
                }
            }
        };
        if let Some(v) = violation {
            return ValidationReport {
                violation: Some((ev.seq, v)),
                edges,
                deletions,
            };
        }
        last_seq = Some(ev.seq);
    }
    ValidationReport {
        violation: None,
        edges,
        deletions,
    }
}

/// The final graph `E = I \ D` of a valid stream.
pub fn final_graph(spec: &StreamSpec) -> Result<Graph> {
    let edges = validate_stream(spec).into_result()?;
    Ok(Graph::from_edges(spec.n, edges))
}

/// A simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<VertexId>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Duplicate edges are collapsed. Panics if an endpoint is `>= n`.
    pub fn from_edges<I: IntoIterator<Item = Edge>>(n: usize, edges: I) -> Self {
        let mut adj = vec![Vec::new(); n];
        for e in edges {
            adj[e.u as usize].push(e.v);
            adj[e.v as usize].push(e.u);
        }
        let mut m = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            m += list.len();
        }
        Graph { n, adj, m: m / 2 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        (e.v as usize) < self.n && self.adj[e.u as usize].binary_search(&e.v).is_ok()
    }

    /// Edges in canonical (lexicographic) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let start = list.partition_point(|&w| (w as usize) <= u);
            list[start..].iter().map(move |&w| Edge {
                u: u as VertexId,
                v: w,
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EventKind::{Delete as D, Insert as I};

    #[test]
    fn edge_is_canonical() {
        let e = Edge::of(5, 2);
        assert_eq!((e.u(), e.v()), (2, 5));
        assert_eq!(e, Edge::of(2, 5));
        assert!(Edge::new(3, 3).is_err());
        assert_eq!(e.other(5), Some(2));
        assert_eq!(e.other(4), None);
    }

    #[test]
    fn coordinates_round_trip() {
        let n = 9;
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                let e = Edge::of(a, b);
                assert_eq!(Edge::from_coordinate(e.coordinate(n), n), Some(e));
            }
        }
        assert_eq!(Edge::from_coordinate(0, n), None);
        assert_eq!(Edge::from_coordinate(3 * 9 + 1, n), None);
    }

    #[test]
    fn duplicate_insert_is_flagged() {
        let s = StreamSpec::from_ops(2, 0, [(I, 0, 1), (I, 0, 1)]).unwrap();
        let r = validate_stream(&s);
        assert_eq!(r.violation, Some((2, Violation::DuplicateInsert(Edge::of(0, 1)))));
    }

    #[test]
    fn reinsert_after_delete_is_legal() {
        let s = StreamSpec::from_ops(2, 1, [(I, 0, 1), (D, 0, 1), (I, 0, 1)]).unwrap();
        let r = validate_stream(&s);
        assert!(r.is_ok());
        assert_eq!(r.edges.into_iter().collect::<Vec<_>>(), vec![Edge::of(0, 1)]);
    }

    #[test]
    fn delete_of_absent_edge_is_flagged() {
        let s = StreamSpec::from_ops(2, 2, [(I, 0, 1), (D, 0, 1), (D, 0, 1)]).unwrap();
        assert_eq!(
            validate_stream(&s).violation,
            Some((3, Violation::DeleteAbsent(Edge::of(0, 1))))
        );
    }

    #[test]
    fn budget_and_range_are_enforced() {
        let s = StreamSpec::from_ops(3, 0, [(I, 0, 1), (D, 0, 1)]).unwrap();
        assert_eq!(
            validate_stream(&s).violation,
            Some((2, Violation::BudgetExceeded { budget: 0 }))
        );
        let s = StreamSpec::from_ops(3, 0, [(I, 0, 3)]).unwrap();
        assert!(matches!(
            validate_stream(&s).violation,
            Some((1, Violation::VertexOutOfRange(_)))
        ));
    }

    #[test]
    fn final_graph_examples() {
        let empty = StreamSpec::new(4, 0);
        assert_eq!(final_graph(&empty).unwrap().edge_count(), 0);

        let s = StreamSpec::from_ops(3, 1, [(I, 0, 1), (I, 1, 2), (D, 0, 1)]).unwrap();
        let g = final_graph(&s).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![Edge::of(1, 2)]);
        // idempotent
        assert_eq!(final_graph(&s).unwrap(), g);

        let bad = StreamSpec::from_ops(3, 1, [(D, 0, 1)]).unwrap();
        assert!(final_graph(&bad).is_err());
    }

    #[test]
    fn graph_edges_are_canonical_and_deduplicated() {
        let g = Graph::from_edges(4, [Edge::of(2, 3), Edge::of(0, 2), Edge::of(3, 2)]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![Edge::of(0, 2), Edge::of(2, 3)]);
        assert_eq!(g.degree(2), 2);
        assert!(g.has_edge(Edge::of(0, 2)));
        assert!(!g.has_edge(Edge::of(0, 3)));
    }
}
