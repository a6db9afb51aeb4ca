mod common;

use std::collections::BTreeSet;

use bdmatch::drivers::run_randomized;
use bdmatch::hierarchy::extend_downward;
use bdmatch::repair::{ChainCase, TraceStep};
use bdmatch::rng::rng_from;
use bdmatch::stream::{final_graph, generate, Edge, EventKind, GeneratorConfig};
use bdmatch::{AlgorithmConfig, Exec, HierarchicalMatching, HierarchyMode, Matching};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_insertions(seed: u64, n: usize, count: usize) -> Vec<Edge> {
    let mut rng = rng_from(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..n as u32);
            let mut b = rng.gen_range(0..n as u32 - 1);
            if b >= a {
                b += 1;
            }
            Edge::of(a, b)
        })
        .collect()
}

/// Checks that every chain climbs one vertex level per step, hands off to
/// the vertex it continues from, and ends at its first terminal case.
fn assert_chains_monotone(trace: &[TraceStep]) {
    let mut i = 0;
    while i < trace.len() {
        let chain = trace[i].chain;
        let steps: Vec<&TraceStep> = trace[i..].iter().take_while(|s| s.chain == chain).collect();
        assert_eq!(steps[0].level, 0);
        for w in steps.windows(2) {
            assert_eq!(w[0].case, ChainCase::Swapped);
            assert_eq!(w[1].level, w[0].level + 1);
            assert_eq!(w[0].handoff, Some(w[1].vertex));
        }
        assert_ne!(steps.last().unwrap().case, ChainCase::Swapped);
        i += steps.len();
    }
    let chains: Vec<usize> = trace.iter().map(|s| s.chain).collect();
    assert!(chains.windows(2).all(|w| w[0] <= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fixed_levels_place_each_edge_at_its_lowest_admitting_level(
        seed in any::<u64>(), n in 2usize..12, levels in 1usize..6, count in 0usize..80,
    ) {
        let mut h = HierarchicalMatching::new(n, HierarchyMode::FixedLevels(levels));
        let mut dropped = Vec::new();
        for e in random_insertions(seed, n, count) {
            if h.insert(e).level.is_none() {
                dropped.push(e);
            }
        }
        for (l, m) in h.levels().enumerate() {
            prop_assert!(m.is_consistent());
            for e in m.edges() {
                for j in 0..l {
                    let below = h.level(j);
                    prop_assert!(!below.contains(e) && !below.can_add(e));
                }
            }
        }
        for e in dropped {
            prop_assert!(h.levels().all(|m| !m.contains(e) && !m.can_add(e)));
        }
        prop_assert_eq!(h.dropped() == 0, h.is_lossless());
    }

    #[test]
    fn budgeted_hierarchy_only_evicts_from_the_top(
        seed in any::<u64>(), n in 2usize..16, budget in 1usize..30, count in 0usize..300,
    ) {
        let mut h = HierarchicalMatching::new(n, HierarchyMode::Budgeted(budget));
        for e in random_insertions(seed, n, count) {
            let before: Vec<Vec<Edge>> = h.levels().map(|m| m.edges().collect()).collect();
            let top_before = before.len() - 1;
            let placed = h.insert(e);
            if let Some((l, _)) = placed.evicted {
                prop_assert!(l + 1 >= h.level_count());
                prop_assert!(l >= top_before);
            }
            // every level below the old top keeps all of its edges
            for (j, edges) in before.iter().enumerate().take(top_before) {
                prop_assert!(edges.iter().all(|&x| h.level(j).contains(x)));
            }
            prop_assert!(h.stored_edges() <= budget);
            prop_assert!(h.evictions().is_empty() || h.stored_edges() == budget);
        }
    }

    #[test]
    fn downward_extension_with_full_recovery_is_maximal(
        seed in any::<u64>(), n in 2usize..13, k in 0usize..5, levels in 1usize..6, pick in any::<prop::sample::Index>(),
    ) {
        let Ok(spec) = generate(&GeneratorConfig::erdos_renyi(n, 0.4, k, seed)) else { return Ok(()); };
        let g = final_graph(&spec).unwrap();
        let mut h = HierarchicalMatching::new(n, HierarchyMode::FixedLevels(levels));
        let mut deletions = Vec::new();
        for ev in &spec.events {
            match ev.kind {
                EventKind::Insert => { h.insert(ev.edge); }
                EventKind::Delete => deletions.push(ev.edge),
            }
        }
        let primed = h.apply_deletions(&deletions);
        let l = pick.index(levels);
        let affected: BTreeSet<u32> = h.lost_edges(&primed, l).into_iter().flat_map(Edge::endpoints).collect();
        let recovered: Vec<Edge> = g.edges().filter(|e| e.endpoints().iter().any(|x| affected.contains(x))).collect();
        let lower = (0..l).map(|j| primed.level(j).edges().collect::<Vec<_>>());
        let m = extend_downward(primed.level(l), lower.chain([recovered]));
        prop_assert!(brute_is_maximal(n, &graph_edges(&g), &matching_edges(&m)));
    }

    #[test]
    fn extend_downward_is_maximal_within_its_inputs(
        seed in any::<u64>(), n in 2usize..12, sources in 0usize..4,
    ) {
        let mut rng = rng_from(seed);
        let mut base = Matching::new(n);
        for e in random_edges(&mut rng, n, 0.2) {
            base.add(e);
        }
        let srcs: Vec<Vec<Edge>> = (0..sources).map(|_| random_edges(&mut rng, n, 0.3)).collect();
        let m = extend_downward(&base, srcs.iter().cloned());
        prop_assert!(base.edges().all(|e| m.contains(e)));
        let mut all: BTreeSet<Edge> = base.edges().collect();
        all.extend(srcs.into_iter().flatten());
        let all: Vec<Edge> = all.into_iter().collect();
        prop_assert!(brute_is_maximal(n, &all, &matching_edges(&m)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn randomized_traces_are_monotone_and_full_neighborhoods_sound(
        seed in any::<u64>(), n in 8usize..40, k in 1usize..12, killer in any::<bool>(),
    ) {
        let cfg = if killer {
            GeneratorConfig::matching_killer(n, 0.3, k, seed)
        } else {
            GeneratorConfig::erdos_renyi(n, 0.3, k, seed)
        };
        let Ok(spec) = generate(&cfg) else { return Ok(()); };
        let g = final_graph(&spec).unwrap();
        let alg = AlgorithmConfig { exec: Exec::Sequential, ..AlgorithmConfig::new(n, k, seed) };
        let r = run_randomized(&alg, spec.events).unwrap();
        assert_chains_monotone(&r.trace);
        for s in &r.trace {
            prop_assert_eq!(s.degree, g.degree(s.vertex) as i64);
            prop_assert!(s.recovered as i64 <= s.degree);
            if s.case == ChainCase::FullNeighborhood {
                prop_assert_eq!(s.recovered as i64, s.degree);
            }
            if let Some(w) = s.neighbor {
                prop_assert!(g.has_edge(Edge::of(s.vertex, w)));
            }
        }
        prop_assert!(r.matching.edges().all(|e| g.has_edge(e)));
        if r.metrics.exhausted == 0 {
            prop_assert!(brute_is_maximal(n, &graph_edges(&g), &matching_edges(&r.matching)));
        }
    }
}

#[test]
fn apply_deletions_touches_at_most_k_levels() {
    for seed in 0..200 {
        let k = (seed % 5) as usize;
        let Ok(spec) = generate(&GeneratorConfig::matching_killer(16, 0.4, k, seed)) else {
            continue;
        };
        let mut h = HierarchicalMatching::new(16, HierarchyMode::FixedLevels(k + 1));
        let mut deletions = Vec::new();
        for ev in &spec.events {
            match ev.kind {
                EventKind::Insert => {
                    h.insert(ev.edge);
                }
                EventKind::Delete => deletions.push(ev.edge),
            }
        }
        let primed = h.apply_deletions(&deletions);
        let touched = (0..k + 1).filter(|&i| !h.lost_edges(&primed, i).is_empty()).count();
        assert!(touched <= deletions.len());
        assert!(touched <= k);
        for i in 0..k + 1 {
            assert!(primed.level(i).edges().all(|e| h.level(i).contains(e)));
        }
    }
}
