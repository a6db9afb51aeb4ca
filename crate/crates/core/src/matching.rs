use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stream::{Edge, VertexId};

const FREE: VertexId = VertexId::MAX;

/// A set of vertex-disjoint edges over `[0, n)`, kept as a symmetric
/// partner map.
#[derive(Clone, PartialEq, Eq)]
pub struct Matching {
    partner: Vec<VertexId>,
    size: usize,
}

impl Matching {
    pub fn new(n: usize) -> Self {
        Matching {
            partner: vec![FREE; n],
            size: 0,
        }
    }

    /// Fails on the first edge that shares an endpoint with an earlier one.
    pub fn from_edges<I: IntoIterator<Item = Edge>>(n: usize, edges: I) -> Result<Self> {
        let mut m = Matching::new(n);
        for e in edges {
            e.check_range(n)?;
            if !m.add(e) && !m.contains(e) {
                return Err(Error::NotAMatching(e));
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.partner.len()
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        match self.partner[v as usize] {
            FREE => None,
            w => Some(w),
        }
    }

    pub fn is_matched(&self, v: VertexId) -> bool {
        self.partner[v as usize] != FREE
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.partner[e.u() as usize] == e.v()
    }

    pub fn can_add(&self, e: Edge) -> bool {
        !self.is_matched(e.u()) && !self.is_matched(e.v())
    }

    /// Adds `e` if both endpoints are free; returns whether it was added.
    pub fn add(&mut self, e: Edge) -> bool {
        if !self.can_add(e) {
            return false;
        }
        self.partner[e.u() as usize] = e.v();
        self.partner[e.v() as usize] = e.u();
        self.size += 1;
        true
    }

    pub fn remove(&mut self, e: Edge) -> bool {
        if !self.contains(e) {
            return false;
        }
        self.partner[e.u() as usize] = FREE;
        self.partner[e.v() as usize] = FREE;
        self.size -= 1;
        true
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(u, &w)| w != FREE && (u as VertexId) < w)
            .map(|(u, &w)| Edge::of(u as VertexId, w))
    }

    pub fn matched_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w != FREE)
            .map(|(u, _)| u as VertexId)
    }

    /// Sorted `u v` lines, the fixture format for a single level.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in self.edges() {
            writeln!(s, "{} {}", e.u(), e.v()).unwrap();
        }
        s
    }

    pub fn parse_text(n: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = || Error::Parse {
                line: i + 1,
                msg: "expected `u v`".into(),
            };
            let [a, b] = fields[..] else {
                return Err(err());
            };
            let a = a.parse().map_err(|_| err())?;
            let b = b.parse().map_err(|_| err())?;
            edges.push(Edge::new(a, b)?);
        }
        Matching::from_edges(n, edges)
    }

    /// Checks the partner map against the edge count.
    pub fn is_consistent(&self) -> bool {
        let mut count = 0;
        for (u, &w) in self.partner.iter().enumerate() {
            if w != FREE {
                if w as usize >= self.partner.len() || self.partner[w as usize] != u as VertexId || w as usize == u {
                    return false;
                }
                count += 1;
            }
        }
        count == 2 * self.size
    }
}

impl std::fmt::Debug for Matching {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.edges()).finish()
    }
}

/// Serializes as `{"n": .., "edges": [[u, v], ..]}`.
impl Serialize for Matching {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatchingRepr {
            n: self.n(),
            edges: self.edges().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matching {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatchingRepr::deserialize(d)?;
        Matching::from_edges(repr.n, repr.edges).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct MatchingRepr {
    n: usize,
    edges: Vec<Edge>,
}

/// Greedily adds edges from each source, in the given order of sources
/// and canonical edge order within a source, to a copy of `base`.
///
/// The result is maximal within `base ∪ sources`.
pub fn extend_downward<I, S>(base: &Matching, sources: I) -> Matching
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = Edge>,
{
    let mut m = base.clone();
    for source in sources {
        let mut edges: Vec<Edge> = source.into_iter().collect();
        edges.sort_unstable();
        for e in edges {
            m.add(e);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_remove_keep_partner_map_symmetric() {
        let mut m = Matching::new(5);
        assert!(m.add(Edge::of(0, 1)));
        assert!(!m.add(Edge::of(1, 2)));
        assert!(m.add(Edge::of(3, 2)));
        assert_eq!(m.len(), 2);
        assert_eq!(m.mate(2), Some(3));
        assert!(m.is_consistent());
        assert!(m.remove(Edge::of(0, 1)));
        assert!(!m.remove(Edge::of(0, 1)));
        assert_eq!(m.edges().collect::<Vec<_>>(), vec![Edge::of(2, 3)]);
        assert!(m.is_consistent());
    }

    #[test]
    fn from_edges_rejects_conflicts() {
        assert!(Matching::from_edges(4, [Edge::of(0, 1), Edge::of(1, 2)]).is_err());
        assert!(Matching::from_edges(2, [Edge::of(0, 2)]).is_err());
        let m = Matching::from_edges(4, [Edge::of(0, 1), Edge::of(0, 1)]).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn text_and_json_forms() {
        let m = Matching::from_edges(6, [Edge::of(4, 5), Edge::of(0, 2)]).unwrap();
        assert_eq!(m.to_text(), "0 2\n4 5\n");
        assert_eq!(Matching::parse_text(6, &m.to_text()).unwrap(), m);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"n":6,"edges":[[0,2],[4,5]]}"#);
        assert_eq!(serde_json::from_str::<Matching>(&json).unwrap(), m);
    }

    #[test]
    fn extend_downward_examples() {
        let base = Matching::from_edges(4, [Edge::of(2, 3)]).unwrap();
        let none: [Vec<Edge>; 0] = [];
        assert_eq!(extend_downward(&base, none), base);

        let empty = Matching::new(3);
        let out = extend_downward(&empty, [vec![Edge::of(1, 2), Edge::of(0, 1)]]);
        assert_eq!(out.edges().collect::<Vec<_>>(), vec![Edge::of(0, 1)]);
    }
}
