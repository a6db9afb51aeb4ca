mod common;

use std::collections::{BTreeMap, BTreeSet};

use bdmatch::repair::{AlgorithmConfig, RepairStructure};
use bdmatch::sketch::SamplerBank;
use bdmatch::stream::{final_graph, generate, validate_stream, Edge, EventKind, GeneratorConfig};
use bdmatch::{Exec, HierarchicalMatching, HierarchyMode};
use common::*;

#[test]
fn matching_killer_deletes_edges_it_matched() {
    for seed in 0..50 {
        let spec = generate(&GeneratorConfig::matching_killer(8, 0.6, 2, seed)).unwrap();
        assert!(validate_stream(&spec).is_ok());
        assert_eq!(spec.deletion_count(), 2);

        // Re-derive the greedy matchings of everything inserted before the
        // first deletion; each deleted edge must sit in one of them.
        let first_delete = spec.events.iter().position(|e| e.kind == EventKind::Delete).unwrap();
        let mut h = HierarchicalMatching::new(8, HierarchyMode::FixedLevels(2));
        for ev in &spec.events[..first_delete] {
            h.insert(ev.edge);
        }
        for ev in spec.events.iter().filter(|e| e.kind == EventKind::Delete) {
            assert!(h.levels().any(|m| m.contains(ev.edge)), "seed {seed}: {:?}", ev.edge);
            assert!(spec.events[..first_delete].iter().any(|i| i.edge == ev.edge));
        }
    }
}

#[test]
fn block_bipartite_components_stay_within_blocks() {
    for seed in 0..20 {
        let spec = generate(&GeneratorConfig::block_bipartite(2, 10, 4, seed)).unwrap();
        assert!(validate_stream(&spec).is_ok());
        assert_eq!(spec.n, 20);
        let mut uf = UnionFind::new(spec.n);
        for ev in &spec.events {
            uf.union(ev.edge.u() as usize, ev.edge.v() as usize);
        }
        let roots: BTreeSet<usize> = (0..20).map(|v| uf.find(v)).collect();
        // no edge crosses blocks, so every component lies in one block
        let groups: BTreeSet<usize> = roots.iter().map(|&r| r / 10).collect();
        assert_eq!(groups.len(), 2);
        for v in 0..20 {
            assert_eq!(uf.find(v) / 10, v / 10, "seed {seed}");
        }
    }
}

#[test]
fn erdos_renyi_complete_graph_without_deletions() {
    for seed in 0..5 {
        let spec = generate(&GeneratorConfig::erdos_renyi(4, 1.0, 0, seed)).unwrap();
        assert_eq!(spec.events.len(), 6);
        assert!(spec.events.iter().all(|e| e.kind == EventKind::Insert));
    }
}

#[test]
fn bank_degrees_follow_adjacency_replay() {
    for seed in 0..10 {
        let spec = generate(&GeneratorConfig::erdos_renyi(10, 0.5, 6, seed)).unwrap();
        let n = spec.n;
        let mut banks: Vec<SamplerBank> = (0..n as u32).map(|v| SamplerBank::new(v, n, 1, 4, 1, seed)).collect();
        let mut degree: BTreeMap<u32, i64> = BTreeMap::new();
        for ev in &spec.events {
            for x in ev.edge.endpoints() {
                banks[x as usize].update(ev).unwrap();
                *degree.entry(x).or_default() += ev.kind.delta();
            }
        }
        let g = final_graph(&spec).unwrap();
        for v in 0..n as u32 {
            assert_eq!(banks[v as usize].degree(), g.degree(v) as i64);
            assert_eq!(degree.get(&v).copied().unwrap_or(0), g.degree(v) as i64);
        }
    }
}

#[test]
fn recovered_neighbors_are_real_and_complete_flags_are_sound() {
    for seed in 0..10 {
        let spec = generate(&GeneratorConfig::matching_killer(24, 0.3, 6, seed)).unwrap();
        let g = final_graph(&spec).unwrap();
        let cfg = AlgorithmConfig {
            exec: Exec::Sequential,
            ..AlgorithmConfig::new(24, 6, seed)
        };
        let mut rs = RepairStructure::new(&cfg);
        rs.ingest_batch(&spec.events, Exec::Sequential);
        for i in 0..rs.layout().depth + 1 {
            for v in rs.vertex_levels().members(i) {
                let bank = rs.bank(i, v).unwrap();
                assert_eq!(bank.degree(), g.degree(v) as i64);
                for slot in 0..bank.slots() {
                    let s = bank.recover_neighborhood(slot);
                    for &w in &s.neighbors {
                        assert!(g.has_edge(Edge::of(v, w)));
                    }
                    if s.complete {
                        assert_eq!(s.neighbors, g.neighbors(v).iter().copied().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>());
                    }
                }
            }
        }
    }
}

#[test]
fn insert_then_delete_leaves_banks_empty() {
    let mut b = SamplerBank::new(3, 8, 2, 5, 2, 1);
    let e = Edge::of(3, 6);
    b.update(&bdmatch::EdgeEvent::insert(e, 1)).unwrap();
    assert_eq!(b.degree(), 1);
    b.update(&bdmatch::EdgeEvent::delete(e, 2)).unwrap();
    assert_eq!(b.degree(), 0);
    for slot in 0..2 {
        let s = b.recover_neighborhood(slot);
        assert!(s.neighbors.is_empty() && s.complete);
    }
}
