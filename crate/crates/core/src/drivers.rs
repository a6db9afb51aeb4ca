//! Single-pass drivers for the three algorithms.
//!
//! Each driver consumes its events exactly once. Vertex range and the
//! deletion budget are checked on the fly; the `*_spec` wrappers validate
//! the whole stream first.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hierarchy::{extend_downward, reconstruct_if_small, HierarchicalMatching, HierarchyMode};
use crate::matching::Matching;
use crate::oracle;
use crate::repair::{self, AlgorithmConfig, ChainCase, RepairStructure, TraceStep};
use crate::stream::{validate_stream, Edge, EdgeEvent, EventKind, Graph, StreamSpec, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum AlgorithmKind {
    RandomizedSqrtK,
    DeterministicK,
    BudgetedApprox { epsilon: f64 },
}

impl AlgorithmKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            AlgorithmKind::RandomizedSqrtK => "rand",
            AlgorithmKind::DeterministicK => "det",
            AlgorithmKind::BudgetedApprox { .. } => "budget",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            AlgorithmKind::BudgetedApprox { epsilon } => Some(*epsilon),
            _ => None,
        }
    }
}

/// How the budgeted driver turns its stored levels into an answer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetedRoute {
    /// Maximum matching over every surviving stored edge.
    #[default]
    MaximumMatching,
    /// Extend a level that kept a `1 - ε` fraction of its edges downward.
    DownwardExtension,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Distinct edges held by the hierarchy at the end of the stream.
    pub stored_edges: usize,
    pub stored_deletions: usize,
    pub levels: usize,
    pub sampler_count: u64,
    pub estimated_bits: u64,
    pub matching_size: usize,
    pub is_maximal: Option<bool>,
    pub max_matching_size: Option<usize>,
    pub approx_ratio: Option<f64>,
    pub selected_level: Option<usize>,
    pub affected_vertices: usize,
    pub chains: usize,
    pub full_neighborhood: usize,
    pub matched_free: usize,
    pub swapped: usize,
    pub exhausted: usize,
    pub used_fallback: bool,
    pub budget: Option<usize>,
    pub evictions: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub config: Option<AlgorithmConfig>,
    pub matching: Matching,
    pub metrics: RunMetrics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<oracle::Verdict>,
}

impl RunResult {
    /// Checks the output against the final graph and fills the verdict,
    /// maximality, and ratio fields.
    pub fn verify_against(&mut self, g: &Graph) {
        let verdict = oracle::verify(g, &self.matching);
        self.metrics.is_maximal = Some(verdict.is_maximal);
        self.metrics.max_matching_size = verdict.max_matching_size;
        self.metrics.approx_ratio = verdict.max_matching_size.map(|best| ratio(best, self.matching.len()));
        self.verdict = Some(verdict);
    }
}

/// `|M*| / |M|`, with `0/0 = 1`.
pub fn ratio(best: usize, got: usize) -> f64 {
    match (best, got) {
        (0, _) => 1.0,
        (_, 0) => f64::INFINITY,
        (b, g) => b as f64 / g as f64,
    }
}

/// Enforces vertex range and the deletion budget while the stream is read.
struct Guard {
    n: usize,
    k: usize,
    deletions: Vec<Edge>,
}

impl Guard {
    fn new(n: usize, k: usize) -> Self {
        Guard {
            n,
            k,
            deletions: Vec::new(),
        }
    }

    fn admit(&mut self, ev: &EdgeEvent) -> Result<()> {
        if ev.edge.check_range(self.n).is_err() {
            return Err(Error::InvalidStream {
                seq: ev.seq,
                violation: Violation::VertexOutOfRange(ev.edge),
            });
        }
        if ev.kind == EventKind::Delete {
            if self.deletions.len() == self.k {
                return Err(Error::InvalidStream {
                    seq: ev.seq,
                    violation: Violation::BudgetExceeded { budget: self.k },
                });
            }
            self.deletions.push(ev.edge);
        }
        Ok(())
    }
}

const BATCH: usize = 4096;

/// Randomized algorithm: `⌈√K⌉` hierarchical levels plus sampler banks,
/// repaired after the stream.
pub fn run_randomized<I>(cfg: &AlgorithmConfig, events: I) -> Result<RunResult>
where
    I: IntoIterator<Item = EdgeEvent>,
{
    cfg.validate()?;
    let start = Instant::now();
    let mut guard = Guard::new(cfg.n, cfg.k);
    let mut h = HierarchicalMatching::new(cfg.n, HierarchyMode::FixedLevels(cfg.hierarchy_levels()));
    let mut rs = RepairStructure::new(cfg);
    let mut pending = Vec::with_capacity(BATCH);
    for ev in events {
        guard.admit(&ev)?;
        if ev.kind == EventKind::Insert {
            h.insert(ev.edge);
        }
        pending.push(ev);
        if pending.len() == BATCH {
            rs.ingest_batch(&pending, cfg.exec);
            pending.clear();
        }
    }
    rs.ingest_batch(&pending, cfg.exec);

    let primed = h.apply_deletions(&guard.deletions);
    let level = repair::select_level(&h, &primed, cfg.k);
    let outcome = repair::repair(&rs, &h, &primed, level);
    let mut metrics = RunMetrics {
        stored_edges: h.stored_edges(),
        stored_deletions: guard.deletions.len(),
        levels: h.level_count(),
        selected_level: Some(level),
        affected_vertices: outcome.affected.len(),
        chains: outcome.trace.iter().map(|s| s.chain).collect::<std::collections::BTreeSet<_>>().len(),
        exhausted: outcome.exhausted,
        ..RunMetrics::default()
    };
    for s in &outcome.trace {
        match s.case {
            ChainCase::FullNeighborhood => metrics.full_neighborhood += 1,
            ChainCase::MatchedFree => metrics.matched_free += 1,
            ChainCase::Swapped => metrics.swapped += 1,
            ChainCase::Exhausted => {}
        }
    }
    let space = rs.space();
    metrics.sampler_count = space.sampler_count;
    metrics.estimated_bits = space.estimated_bits;

    let mut matching = outcome.matching;
    if cfg.k <= 1 && outcome.exhausted > 0 {
        if let Some(m) = lowest_untouched_extension(&h, &primed) {
            matching = m;
            metrics.used_fallback = true;
        }
    }
    metrics.matching_size = matching.len();
    metrics.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(RunResult {
        algorithm: AlgorithmKind::RandomizedSqrtK,
        n: cfg.n,
        k: cfg.k,
        seed: Some(cfg.seed),
        config: Some(cfg.clone()),
        matching,
        metrics,
        trace: outcome.trace,
        verdict: None,
    })
}

/// Lowest level that lost nothing, extended downward by the surviving
/// levels below it.
fn lowest_untouched_extension(h: &HierarchicalMatching, primed: &HierarchicalMatching) -> Option<Matching> {
    let i = (0..h.level_count()).find(|&i| h.lost_edges(primed, i).is_empty())?;
    let lower = (0..i).map(|j| primed.level(j).edges().collect::<Vec<_>>());
    Some(extend_downward(primed.level(i), lower))
}

/// Deterministic algorithm on `K + 1` hierarchical levels.
pub fn run_deterministic<I>(n: usize, k: usize, events: I) -> Result<RunResult>
where
    I: IntoIterator<Item = EdgeEvent>,
{
    let start = Instant::now();
    let mut guard = Guard::new(n, k);
    let mut h = HierarchicalMatching::new(n, HierarchyMode::FixedLevels(k + 1));
    for ev in events {
        guard.admit(&ev)?;
        if ev.kind == EventKind::Insert {
            h.insert(ev.edge);
        }
    }
    let matching = match reconstruct_if_small(&h, &guard.deletions) {
        Some(g) => oracle::greedy_maximal(&g),
        None => {
            let primed = h.apply_deletions(&guard.deletions);
            lowest_untouched_extension(&h, &primed)
                .expect("K deletions cannot touch all K + 1 levels")
        }
    };
    Ok(RunResult {
        algorithm: AlgorithmKind::DeterministicK,
        n,
        k,
        seed: None,
        config: None,
        metrics: RunMetrics {
            stored_edges: h.stored_edges(),
            stored_deletions: guard.deletions.len(),
            levels: h.level_count(),
            matching_size: matching.len(),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            ..RunMetrics::default()
        },
        matching,
        trace: Vec::new(),
        verdict: None,
    })
}

/// Budget `n + ⌈K/ε⌉` used by the approximation algorithm.
pub fn budget_for(n: usize, k: usize, epsilon: f64) -> usize {
    n + (k as f64 / epsilon).ceil() as usize
}

/// `(2 + ε)`-approximation with a budgeted hierarchy.
pub fn run_budgeted<I>(n: usize, k: usize, epsilon: f64, route: BudgetedRoute, events: I) -> Result<RunResult>
where
    I: IntoIterator<Item = EdgeEvent>,
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    let start = Instant::now();
    let budget = budget_for(n, k, epsilon);
    let mut guard = Guard::new(n, k);
    let mut h = HierarchicalMatching::new(n, HierarchyMode::Budgeted(budget));
    for ev in events {
        guard.admit(&ev)?;
        if ev.kind == EventKind::Insert {
            h.insert(ev.edge);
        }
    }
    let primed = h.apply_deletions(&guard.deletions);
    let matching = match route {
        BudgetedRoute::MaximumMatching => {
            let g = Graph::from_edges(n, primed.levels().flat_map(|m| m.edges()));
            oracle::max_matching(&g)
        }
        BudgetedRoute::DownwardExtension => downward_extension(&h, &primed, epsilon),
    };
    Ok(RunResult {
        algorithm: AlgorithmKind::BudgetedApprox { epsilon },
        n,
        k,
        seed: None,
        config: None,
        metrics: RunMetrics {
            stored_edges: h.stored_edges(),
            stored_deletions: guard.deletions.len(),
            levels: h.level_count(),
            budget: Some(budget),
            evictions: h.evictions().len(),
            matching_size: matching.len(),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            ..RunMetrics::default()
        },
        matching,
        trace: Vec::new(),
        verdict: None,
    })
}

/// Picks the lowest level below the top that kept a `1 - ε` fraction of
/// its edges (the fullest surviving level if none did), extends it
/// downward with the surviving lower levels, and removes deleted edges.
fn downward_extension(h: &HierarchicalMatching, primed: &HierarchicalMatching, epsilon: f64) -> Matching {
    let candidates = h.level_count().saturating_sub(1).max(1);
    let j = (0..candidates)
        .find(|&j| primed.level(j).len() as f64 >= (1.0 - epsilon) * h.level(j).len() as f64)
        .unwrap_or_else(|| (0..candidates).max_by_key(|&j| primed.level(j).len()).unwrap_or(0));
    let lower = (0..j).map(|i| primed.level(i).edges().collect::<Vec<_>>());
    let mut m = extend_downward(h.level(j), lower);
    for e in h.lost_edges(primed, j) {
        m.remove(e);
    }
    m
}

/// Validates `spec` and runs `kind` on it. The randomized driver takes its
/// seed and constants from `cfg`.
pub fn run(kind: AlgorithmKind, spec: StreamSpec, cfg: &AlgorithmConfig) -> Result<RunResult> {
    validate_stream(&spec).into_result()?;
    let (n, k) = (spec.n, spec.k);
    match kind {
        AlgorithmKind::RandomizedSqrtK => {
            let cfg = AlgorithmConfig { n, k, ..cfg.clone() };
            run_randomized(&cfg, spec.into_events())
        }
        AlgorithmKind::DeterministicK => run_deterministic(n, k, spec.into_events()),
        AlgorithmKind::BudgetedApprox { epsilon } => {
            run_budgeted(n, k, epsilon, BudgetedRoute::default(), spec.into_events())
        }
    }
}

/// Default configuration for a stream, with the given seed and policy.
pub fn default_config(spec: &StreamSpec, seed: u64, exec: Exec) -> AlgorithmConfig {
    AlgorithmConfig {
        exec,
        ..AlgorithmConfig::new(spec.n, spec.k, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, k: usize, ops: &[(char, u32, u32)]) -> StreamSpec {
        let mut s = StreamSpec::new(n, k);
        for &(c, a, b) in ops {
            let e = Edge::of(a, b);
            if c == '+' {
                s.insert(e)
            } else {
                s.delete(e)
            }
        }
        s
    }

    #[test]
    fn deletion_free_randomized_run_returns_first_level() {
        let s = spec(4, 0, &[('+', 0, 1), ('+', 1, 2), ('+', 2, 3)]);
        let cfg = AlgorithmConfig::new(4, 0, 1);
        let r = run(AlgorithmKind::RandomizedSqrtK, s, &cfg).unwrap();
        assert_eq!(r.matching.edges().collect::<Vec<_>>(), vec![Edge::of(0, 1), Edge::of(2, 3)]);
        assert_eq!(r.metrics.sampler_count, 0);
    }

    #[test]
    fn deterministic_k0_is_first_level() {
        let s = spec(3, 0, &[('+', 0, 1), ('+', 1, 2)]);
        let r = run_deterministic(3, 0, s.into_events()).unwrap();
        assert_eq!(r.matching.edges().collect::<Vec<_>>(), vec![Edge::of(0, 1)]);
    }

    #[test]
    fn guard_rejects_excess_deletions_and_range() {
        let s = spec(3, 0, &[('+', 0, 1), ('-', 0, 1)]);
        assert!(matches!(
            run_deterministic(3, 0, s.into_events()),
            Err(Error::InvalidStream { seq: 2, .. })
        ));
        let s = spec(4, 0, &[('+', 0, 3)]);
        assert!(run_budgeted(3, 0, 0.5, BudgetedRoute::default(), s.into_events()).is_err());
    }

    #[test]
    fn budgeted_under_budget_is_exact() {
        // P4 inserted middle edge first: greedy gets 1, maximum is 2
        let s = spec(4, 0, &[('+', 1, 2), ('+', 0, 1), ('+', 2, 3)]);
        let r = run_budgeted(4, 0, 0.5, BudgetedRoute::MaximumMatching, s.into_events()).unwrap();
        assert_eq!(r.matching.len(), 2);
        assert_eq!(r.metrics.budget, Some(4));
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0, 0), 1.0);
        assert_eq!(ratio(4, 2), 2.0);
        assert!(ratio(1, 0).is_infinite());
    }
}
