//! Hierarchical greedy matchings over the insertion substream.
//!
//! Each inserted edge lands on the lowest level `M_ℓ` for which
//! `M_ℓ ∪ {e}` is still a matching. Re-inserting an edge that is already
//! stored on that level bumps its copy count instead, so a later deletion
//! can be matched to the right insertion.
//!
//! Two modes exist. With `FixedLevels(L)` an edge that fits nowhere among
//! `M_1..M_L` is dropped. With `Budgeted(B)` a new level is opened instead,
//! and whenever the structure would hold `B + 1` edges the newest edge of
//! the top level is evicted (the top level is removed once empty).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use crate::matching::extend_downward;
use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::stream::{Edge, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HierarchyMode {
    FixedLevels(usize),
    Budgeted(usize),
}

#[derive(Clone, Debug)]
struct Level {
    matching: Matching,
    copies: HashMap<Edge, u32>,
    // distinct entries in arrival order; eviction pops from the back
    arrivals: Vec<Edge>,
}

impl Level {
    fn new(n: usize) -> Self {
        Level {
            matching: Matching::new(n),
            copies: HashMap::new(),
            arrivals: Vec::new(),
        }
    }

    fn admits(&self, e: Edge) -> bool {
        self.matching.contains(e) || self.matching.can_add(e)
    }

    /// Returns true when `e` became a new entry.
    fn place(&mut self, e: Edge) -> bool {
        let c = self.copies.entry(e).or_insert(0);
        *c += 1;
        if *c == 1 {
            self.matching.add(e);
            self.arrivals.push(e);
            true
        } else {
            false
        }
    }
}

/// Where an inserted edge ended up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    /// 0-based level, `None` when the edge was dropped.
    pub level: Option<usize>,
    /// Entry evicted to respect the budget, with its level.
    pub evicted: Option<(usize, Edge)>,
}

#[derive(Clone, Debug)]
pub struct HierarchicalMatching {
    n: usize,
    mode: HierarchyMode,
    levels: Vec<Level>,
    stored: usize,
    dropped: u64,
    evictions: Vec<(usize, Edge)>,
}

impl HierarchicalMatching {
    pub fn new(n: usize, mode: HierarchyMode) -> Self {
        let levels = match mode {
            HierarchyMode::FixedLevels(l) => (0..l).map(|_| Level::new(n)).collect(),
            HierarchyMode::Budgeted(_) => vec![Level::new(n)],
        };
        HierarchicalMatching {
            n,
            mode,
            levels,
            stored: 0,
            dropped: 0,
            evictions: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> HierarchyMode {
        self.mode
    }

    pub fn insert(&mut self, e: Edge) -> Placement {
        match self.mode {
            HierarchyMode::FixedLevels(_) => self.place_fixed(e),
            HierarchyMode::Budgeted(b) => self.place_budgeted(e, b),
        }
    }

    /// Hierarchical greedy step on a fixed number of levels.
    pub fn hg_insert(&mut self, e: Edge) -> Result<Placement> {
        match self.mode {
            HierarchyMode::FixedLevels(_) => Ok(self.place_fixed(e)),
            HierarchyMode::Budgeted(_) => Err(Error::ModeMismatch {
                expected: "fixed-levels",
            }),
        }
    }

    /// Budgeted hierarchical greedy step.
    pub fn bhg_insert(&mut self, e: Edge) -> Result<Placement> {
        match self.mode {
            HierarchyMode::Budgeted(b) => Ok(self.place_budgeted(e, b)),
            HierarchyMode::FixedLevels(_) => Err(Error::ModeMismatch { expected: "budgeted" }),
        }
    }

    fn lowest_admitting(&self, e: Edge) -> Option<usize> {
        self.levels.iter().position(|l| l.admits(e))
    }

    fn place_fixed(&mut self, e: Edge) -> Placement {
        let level = self.lowest_admitting(e);
        match level {
            Some(l) => {
                if self.levels[l].place(e) {
                    self.stored += 1;
                }
            }
            None => self.dropped += 1,
        }
        self.debug_check();
        Placement { level, evicted: None }
    }

    fn place_budgeted(&mut self, e: Edge, budget: usize) -> Placement {
        let l = match self.lowest_admitting(e) {
            Some(l) => l,
            None => {
                self.levels.push(Level::new(self.n));
                self.levels.len() - 1
            }
        };
        if self.levels[l].place(e) {
            self.stored += 1;
        }
        let mut evicted = None;
        if self.stored == budget + 1 {
            let top = self.levels.len() - 1;
            let level = &mut self.levels[top];
            let victim = level.arrivals.pop().expect("top level is never empty");
            level.copies.remove(&victim);
            level.matching.remove(victim);
            self.stored -= 1;
            self.evictions.push((top, victim));
            evicted = Some((top, victim));
            if level.arrivals.is_empty() && self.levels.len() > 1 {
                self.levels.pop();
            }
        }
        self.debug_check();
        Placement { level: Some(l), evicted }
    }

    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        {
            for l in &self.levels {
                debug_assert!(l.matching.is_consistent());
                debug_assert_eq!(l.matching.len(), l.copies.len());
            }
            if let HierarchyMode::Budgeted(b) = self.mode {
                debug_assert!(self.stored <= b);
            }
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Number of levels holding at least one edge.
    pub fn nonempty_levels(&self) -> usize {
        self.levels.iter().filter(|l| !l.matching.is_empty()).count()
    }

    pub fn level(&self, i: usize) -> &Matching {
        &self.levels[i].matching
    }

    pub fn levels(&self) -> impl Iterator<Item = &Matching> {
        self.levels.iter().map(|l| &l.matching)
    }

    /// Live copies of `e` on level `i`.
    pub fn copies(&self, i: usize, e: Edge) -> u32 {
        self.levels[i].copies.get(&e).copied().unwrap_or(0)
    }

    /// Distinct `(level, edge)` entries currently stored.
    pub fn stored_edges(&self) -> usize {
        self.stored
    }

    /// Insertions that found no level (fixed mode).
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Budget evictions in order, with the level each came from.
    pub fn evictions(&self) -> &[(usize, Edge)] {
        &self.evictions
    }

    /// Whether every inserted edge is still represented somewhere.
    pub fn is_lossless(&self) -> bool {
        self.dropped == 0 && self.evictions.is_empty()
    }

    /// Applies deletions in arrival order, each one removing a copy from
    /// the lowest level that still holds the edge. Deletions of edges held
    /// nowhere are ignored. Returns the primed hierarchy; `self` is
    /// untouched.
    pub fn apply_deletions<'a, I>(&self, deletions: I) -> HierarchicalMatching
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let mut primed = self.clone();
        for &e in deletions {
            let Some(level) = primed.levels.iter_mut().find(|l| l.copies.contains_key(&e)) else {
                continue;
            };
            let c = level.copies.get_mut(&e).unwrap();
            *c -= 1;
            if *c == 0 {
                level.copies.remove(&e);
                level.matching.remove(e);
                level.arrivals.retain(|&a| a != e);
                primed.stored -= 1;
            }
        }
        primed
    }

    /// `M_i \ M_i'`: edges of level `i` that `primed` no longer holds.
    pub fn lost_edges(&self, primed: &HierarchicalMatching, i: usize) -> Vec<Edge> {
        let after = primed.level(i);
        self.level(i).edges().filter(|&e| !after.contains(e)).collect()
    }
}

/// The exact final graph, available only when no inserted edge was ever
/// dropped or evicted: the union of the levels after the deletions.
pub fn reconstruct_if_small(h: &HierarchicalMatching, deletions: &[Edge]) -> Option<Graph> {
    if !h.is_lossless() {
        return None;
    }
    let primed = h.apply_deletions(deletions);
    Some(Graph::from_edges(h.n(), primed.levels().flat_map(|m| m.edges())))
}
