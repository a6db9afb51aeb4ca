//! Seeded stream generators.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, EventKind, StreamSpec, VertexId};
use crate::error::{Error, Result};
use crate::hierarchy::{HierarchicalMatching, HierarchyMode};
use crate::rng::{derive_seed, rng_from, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `G(n, p)` inserted in random order; `K` random edges are deleted at
    /// random times after their insertion, and each deleted edge is
    /// re-inserted later with probability `reinsert`.
    ErdosRenyi { p: f64, reinsert: f64 },
    /// `G(n, p)` in random order, split into a head and a tail. A
    /// hierarchical greedy matching over the head (on `⌈√K⌉` levels, level 1
    /// being the plain greedy matching) picks the deletions round-robin
    /// across levels; they are applied after the head, then the tail is
    /// inserted.
    MatchingKiller { p: f64, tail: f64 },
    /// `blocks` vertex-disjoint random bipartite graphs of `block_size`
    /// vertices each, edge probability `p`. One block is chosen at random
    /// and all of its edges outside a greedy matching are candidates for
    /// deletion; the deletions come after every insertion.
    BlockBipartite {
        blocks: usize,
        block_size: usize,
        p: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn erdos_renyi(n: usize, p: f64, k: usize, seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::ErdosRenyi { p, reinsert: 0.25 },
            n,
            k,
            seed,
        }
    }

    pub fn matching_killer(n: usize, p: f64, k: usize, seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::MatchingKiller { p, tail: 0.1 },
            n,
            k,
            seed,
        }
    }

    pub fn block_bipartite(blocks: usize, block_size: usize, k: usize, seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::BlockBipartite {
                blocks,
                block_size,
                p: 0.5,
            },
            n: blocks * block_size,
            k,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GeneratorKind::ErdosRenyi { .. } => "erdos_renyi",
            GeneratorKind::MatchingKiller { .. } => "matching_killer",
            GeneratorKind::BlockBipartite { .. } => "block_bipartite",
        }
    }

    fn check(&self) -> Result<()> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Infeasible(format!("{what} = {p} is not a probability")))
            }
        };
        if self.n > u32::MAX as usize {
            return Err(Error::Infeasible("n exceeds the vertex id range".into()));
        }
        match self.kind {
            GeneratorKind::ErdosRenyi { p, reinsert } => {
                prob(p, "p")?;
                prob(reinsert, "reinsert")
            }
            GeneratorKind::MatchingKiller { p, tail } => {
                prob(p, "p")?;
                prob(tail, "tail")
            }
            GeneratorKind::BlockBipartite {
                blocks,
                block_size,
                p,
            } => {
                prob(p, "p")?;
                if block_size < 2 {
                    return Err(Error::Infeasible("block_size must be at least 2".into()));
                }
                if blocks * block_size > self.n {
                    return Err(Error::Infeasible(format!(
                        "{blocks} blocks of {block_size} vertices exceed n = {}",
                        self.n
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Generates a valid stream. The output is a pure function of `config`.
pub fn generate(config: &GeneratorConfig) -> Result<StreamSpec> {
    config.check()?;
    let mut rng = rng_from(derive_seed(config.seed, &[tag::GENERATOR]));
    let spec = match config.kind {
        GeneratorKind::ErdosRenyi { p, reinsert } => {
            let mut edges = random_graph(config.n, p, &mut rng);
            edges.shuffle(&mut rng);
            erdos_renyi(config, edges, reinsert, &mut rng)?
        }
        GeneratorKind::MatchingKiller { p, tail } => {
            let mut edges = random_graph(config.n, p, &mut rng);
            edges.shuffle(&mut rng);
            matching_killer(config, edges, tail, &mut rng)?
        }
        GeneratorKind::BlockBipartite {
            blocks,
            block_size,
            p,
        } => block_bipartite(config, blocks, block_size, p, &mut rng)?,
    };
    debug_assert!(super::validate_stream(&spec).is_ok());
    Ok(spec)
}

fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<Edge> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if p >= 1.0 || rng.gen_bool(p) {
                edges.push(Edge::of(u as VertexId, v as VertexId));
            }
        }
    }
    edges
}

fn not_enough(k: usize, have: usize) -> Error {
    Error::Infeasible(format!("{k} deletions requested but only {have} deletable edges"))
}

fn erdos_renyi<R: Rng>(
    config: &GeneratorConfig,
    edges: Vec<Edge>,
    reinsert: f64,
    rng: &mut R,
) -> Result<StreamSpec> {
    let m = edges.len();
    if config.k > m {
        return Err(not_enough(config.k, m));
    }
    // Sort key: inserts at slot i get 2i; a delete placed before slot d gets
    // 2d - 1, which always lands after its own insert. Re-inserts use 2r with
    // a higher tie-break so they follow the regular insert at slot r.
    let mut timeline: Vec<(usize, usize, EventKind, Edge)> = edges
        .iter()
        .enumerate()
        .map(|(i, &e)| (2 * i, 0, EventKind::Insert, e))
        .collect();
    let chosen = rand::seq::index::sample(rng, m, config.k).into_vec();
    for (t, i) in chosen.into_iter().enumerate() {
        let d = rng.gen_range(i + 1..=m);
        timeline.push((2 * d - 1, t, EventKind::Delete, edges[i]));
        if rng.gen_bool(reinsert) {
            let r = rng.gen_range(d..=m);
            timeline.push((2 * r, 1 + t, EventKind::Insert, edges[i]));
        }
    }
    timeline.sort_by_key(|&(key, tie, _, _)| (key, tie));
    let mut spec = StreamSpec::new(config.n, config.k);
    for (_, _, kind, e) in timeline {
        spec.push(kind, e);
    }
    Ok(spec)
}

fn matching_killer<R: Rng>(
    config: &GeneratorConfig,
    edges: Vec<Edge>,
    tail: f64,
    rng: &mut R,
) -> Result<StreamSpec> {
    let m = edges.len();
    let head_len = m - ((m as f64) * tail).floor() as usize;
    let (head, rest) = edges.split_at(head_len);
    if config.k > head.len() {
        return Err(not_enough(config.k, head.len()));
    }

    let levels = ceil_sqrt(config.k).max(1);
    let mut h = HierarchicalMatching::new(config.n, HierarchyMode::FixedLevels(levels));
    for &e in head {
        h.insert(e);
    }
    let mut per_level: Vec<Vec<Edge>> = h
        .levels()
        .map(|m| {
            let mut es: Vec<Edge> = m.edges().collect();
            es.shuffle(rng);
            es
        })
        .collect();

    let mut victims = Vec::with_capacity(config.k);
    'outer: while victims.len() < config.k {
        let mut progressed = false;
        for level in per_level.iter_mut() {
            if victims.len() == config.k {
                break 'outer;
            }
            if let Some(e) = level.pop() {
                victims.push(e);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    if victims.len() < config.k {
        let taken: std::collections::HashSet<Edge> = victims.iter().copied().collect();
        let mut others: Vec<Edge> = head.iter().copied().filter(|e| !taken.contains(e)).collect();
        others.shuffle(rng);
        victims.extend(others.into_iter().take(config.k - victims.len()));
    }
    victims.shuffle(rng);

    let mut spec = StreamSpec::new(config.n, config.k);
    head.iter().for_each(|&e| spec.insert(e));
    victims.iter().for_each(|&e| spec.delete(e));
    rest.iter().for_each(|&e| spec.insert(e));
    Ok(spec)
}

fn block_bipartite<R: Rng>(
    config: &GeneratorConfig,
    blocks: usize,
    block_size: usize,
    p: f64,
    rng: &mut R,
) -> Result<StreamSpec> {
    let left = block_size / 2;
    let mut by_block: Vec<Vec<Edge>> = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let base = b * block_size;
        let mut es = Vec::new();
        for x in 0..left {
            for y in left..block_size {
                if p >= 1.0 || rng.gen_bool(p) {
                    es.push(Edge::of((base + x) as VertexId, (base + y) as VertexId));
                }
            }
        }
        by_block.push(es);
    }
    let mut edges: Vec<Edge> = by_block.iter().flatten().copied().collect();
    if config.k > edges.len() {
        return Err(not_enough(config.k, edges.len()));
    }
    edges.shuffle(rng);

    let mut victims = Vec::new();
    if blocks > 0 && config.k > 0 {
        let target = rng.gen_range(0..blocks);
        let mut inside = by_block[target].clone();
        inside.shuffle(rng);
        let mut keep = crate::matching::Matching::new(config.n);
        let mut candidates = Vec::new();
        for e in inside {
            if !keep.add(e) {
                candidates.push(e);
            }
        }
        victims.extend(candidates.into_iter().take(config.k));
        if victims.len() < config.k {
            let taken: std::collections::HashSet<Edge> = victims.iter().copied().collect();
            let mut others: Vec<Edge> = edges.iter().copied().filter(|e| !taken.contains(e)).collect();
            others.shuffle(rng);
            let missing = config.k - victims.len();
            victims.extend(others.into_iter().take(missing));
        }
        victims.shuffle(rng);
    }

    let mut spec = StreamSpec::new(config.n, config.k);
    edges.iter().for_each(|&e| spec.insert(e));
    victims.iter().for_each(|&e| spec.delete(e));
    Ok(spec)
}

pub(crate) fn ceil_sqrt(k: usize) -> usize {
    let mut r = (k as f64).sqrt() as usize;
    while r * r < k {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= k {
        r -= 1;
    }
    r
}
