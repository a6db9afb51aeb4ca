//! Post-stream repair of a damaged hierarchical level.
//!
//! During the stream every vertex keeps a bank of ℓ0-samplers over its
//! incident edges. Vertex level `i` is a random subset `V_i` of size about
//! `C·n/ln^i n` (with `V_0 = V`), and a level-`i` bank holds
//! `2⌈√K⌉` slots of about `ln^{i+3} n` samplers each. After the stream the
//! least damaged level is chosen and each vertex it lost a partner for runs
//! a repair chain: sample the neighborhood, match to a free neighbor if one
//! shows up, otherwise steal a neighbor whose mate sits one vertex level
//! higher and continue from that mate with its larger bank.

use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::hierarchy::{extend_downward, HierarchicalMatching};
use crate::matching::Matching;
use crate::rng::{derive_seed, rng_from, tag};
use crate::sketch::bank::{CELL_BITS, HASH_BITS};
use crate::sketch::{rows_for_delta, NeighborhoodSample, SamplerBank};
use crate::stream::generate::ceil_sqrt;
use crate::stream::{Edge, EdgeEvent, VertexId};

/// Parameters of the randomized algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub n: usize,
    pub k: usize,
    /// Vertex-level size constant.
    pub c: f64,
    /// Level-count constant; must stay below `c`.
    pub c_prime: f64,
    /// Per-sampler failure probability. When set, every sampler gets
    /// enough rows to reach it; otherwise `sampler_rows` rows are used.
    pub delta: Option<f64>,
    pub sampler_rows: usize,
    /// Multiplier on the per-slot sampler count.
    pub slot_scale: f64,
    pub seed: u64,
    #[serde(default)]
    pub exec: Exec,
}

impl AlgorithmConfig {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        AlgorithmConfig {
            n,
            k,
            c: 4.0,
            c_prime: 2.0,
            delta: None,
            sampler_rows: 1,
            slot_scale: 1.0,
            seed,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.c_prime >= 1.0 && self.c > self.c_prime) {
            return bad("constants must satisfy c > c_prime >= 1");
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad("delta must lie in (0, 1)");
            }
        }
        if self.sampler_rows == 0 {
            return bad("sampler_rows must be positive");
        }
        if !(self.slot_scale > 0.0 && self.slot_scale.is_finite()) {
            return bad("slot_scale must be positive");
        }
        if self.n == 0 {
            return bad("n must be positive");
        }
        Ok(())
    }

    /// Failure probability the samplers are sized for: `delta` or `1/n^4`.
    pub fn nominal_delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| (self.n.max(2) as f64).powi(-4))
    }

    pub fn rows_per_sampler(&self) -> usize {
        self.delta.map_or(self.sampler_rows, rows_for_delta)
    }

    /// Hierarchy depth: `⌈√K⌉`, or `K + 1` when `K ≤ 1`.
    pub fn hierarchy_levels(&self) -> usize {
        if self.k <= 1 {
            self.k + 1
        } else {
            ceil_sqrt(self.k)
        }
    }
}

/// Number of vertex levels above `V_0`:
/// `⌊(ln n + ln C′)/ln ln n⌋ − 2`, at least 1, and 1 for `n < 16`.
pub fn repair_depth(n: usize, c_prime: f64) -> usize {
    if n < 16 {
        return 1;
    }
    let ln = (n as f64).ln();
    let r = ((ln + c_prime.ln()) / ln.ln()).floor() - 2.0;
    r.max(1.0) as usize
}

/// `|V_i| = ⌈C·n/ln^i n⌉` clamped to `[1, n]`.
pub fn level_size(n: usize, c: f64, i: usize) -> usize {
    if i == 0 {
        return n;
    }
    let size = (c * n as f64 / (n as f64).ln().powi(i as i32)).ceil();
    if size.is_finite() {
        (size as usize).clamp(1, n)
    } else {
        n
    }
}

/// Samplers per slot at level `i`: `⌈scale·ln^{i+3} n⌉` clamped to
/// `[1, ⌈4·n·ln n⌉]`.
pub fn samplers_per_slot(n: usize, i: usize, scale: f64) -> usize {
    let ln = (n as f64).ln().max(0.0);
    let cap = (4.0 * n as f64 * ln).ceil().max(1.0) as usize;
    ((scale * ln.powi(i as i32 + 3)).ceil() as usize).clamp(1, cap)
}

/// Sizes of the repair structure, computable without building it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairLayout {
    pub n: usize,
    /// Highest vertex level.
    pub depth: usize,
    /// `|V_i|` for `i = 0..=depth`.
    pub level_sizes: Vec<usize>,
    pub slots: usize,
    pub samplers_per_slot: Vec<usize>,
    pub rows_per_sampler: usize,
}

impl RepairLayout {
    pub fn new(cfg: &AlgorithmConfig) -> Self {
        let depth = repair_depth(cfg.n, cfg.c_prime);
        RepairLayout {
            n: cfg.n,
            depth,
            level_sizes: (0..=depth).map(|i| level_size(cfg.n, cfg.c, i)).collect(),
            slots: if cfg.k == 0 { 0 } else { 2 * ceil_sqrt(cfg.k) },
            samplers_per_slot: (0..=depth)
                .map(|i| samplers_per_slot(cfg.n, i, cfg.slot_scale))
                .collect(),
            rows_per_sampler: cfg.rows_per_sampler(),
        }
    }

    /// `Σ_i |V_i| · slots · samplers_per_slot(i)`.
    pub fn sampler_count(&self) -> u64 {
        self.level_sizes
            .iter()
            .zip(&self.samplers_per_slot)
            .map(|(&v, &s)| (v * self.slots * s) as u64)
            .sum()
    }

    /// Upper bound on sketch bits if every row filled all of its levels.
    pub fn worst_case_bits(&self) -> u64 {
        let depth = crate::sketch::sampler::default_depth((self.n as u64).pow(2)) as u64;
        let banks: u64 = self.level_sizes.iter().map(|&v| v as u64).sum();
        self.sampler_count() * self.rows_per_sampler as u64 * (HASH_BITS + depth * CELL_BITS)
            + banks * CELL_BITS
    }
}

/// Membership of vertices in the random levels `V_1..V_R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexLevels {
    depth: usize,
    // bit i set when the vertex is in V_i; bit 0 always set
    mask: Vec<u32>,
}

impl VertexLevels {
    pub fn sample(layout: &RepairLayout, seed: u64) -> Self {
        let n = layout.n;
        let mut mask = vec![1u32; n];
        for i in 1..=layout.depth {
            let mut rng = rng_from(derive_seed(seed, &[tag::VERTEX_LEVELS, i as u64]));
            for v in index::sample(&mut rng, n, layout.level_sizes[i]) {
                mask[v] |= 1 << i;
            }
        }
        VertexLevels {
            depth: layout.depth,
            mask,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn contains(&self, i: usize, v: VertexId) -> bool {
        i <= self.depth && self.mask[v as usize] >> i & 1 == 1
    }

    /// Sorted members of `V_i`.
    pub fn members(&self, i: usize) -> Vec<VertexId> {
        (0..self.mask.len() as VertexId)
            .filter(|&v| self.contains(i, v))
            .collect()
    }
}

const NO_BANK: u32 = u32::MAX;

/// Sampler banks for every `(level i, v ∈ V_i)`.
#[derive(Clone, Debug)]
pub struct RepairStructure {
    layout: RepairLayout,
    levels: VertexLevels,
    banks: Vec<SamplerBank>,
    // index[i][v] is the position of v's level-i bank
    index: Vec<Vec<u32>>,
}

impl RepairStructure {
    pub fn new(cfg: &AlgorithmConfig) -> Self {
        let layout = RepairLayout::new(cfg);
        let levels = VertexLevels::sample(&layout, cfg.seed);
        let mut owners = Vec::new();
        let mut index = vec![vec![NO_BANK; cfg.n]; layout.depth + 1];
        for (i, slot) in index.iter_mut().enumerate() {
            for v in levels.members(i) {
                slot[v as usize] = owners.len() as u32;
                owners.push((i, v));
            }
        }
        let banks = if layout.slots == 0 {
            Vec::new()
        } else {
            exec::map_indexed(owners.len(), cfg.exec, |b| {
                let (i, v) = owners[b];
                SamplerBank::new(
                    v,
                    cfg.n,
                    layout.slots,
                    layout.samplers_per_slot[i],
                    layout.rows_per_sampler,
                    derive_seed(cfg.seed, &[tag::BANK, i as u64, v as u64]),
                )
            })
        };
        if banks.is_empty() {
            index.iter_mut().for_each(|l| l.fill(NO_BANK));
        }
        RepairStructure {
            layout,
            levels,
            banks,
            index,
        }
    }

    pub fn layout(&self) -> &RepairLayout {
        &self.layout
    }

    pub fn vertex_levels(&self) -> &VertexLevels {
        &self.levels
    }

    pub fn bank(&self, i: usize, v: VertexId) -> Option<&SamplerBank> {
        let pos = *self.index.get(i)?.get(v as usize)?;
        (pos != NO_BANK).then(|| &self.banks[pos as usize])
    }

    /// Feeds one event to the banks of both endpoints at every level they
    /// belong to.
    pub fn ingest(&mut self, ev: &EdgeEvent) {
        if self.banks.is_empty() {
            return;
        }
        let coord = ev.edge.coordinate(self.layout.n);
        let delta = ev.kind.delta();
        for w in ev.edge.endpoints() {
            for level in &self.index {
                let pos = level[w as usize];
                if pos != NO_BANK {
                    self.banks[pos as usize].apply_batch([(coord, delta)]);
                }
            }
        }
    }

    /// Same effect as calling [`RepairStructure::ingest`] on each event;
    /// banks are updated independently under `exec`.
    pub fn ingest_batch(&mut self, events: &[EdgeEvent], exec: Exec) {
        if self.banks.is_empty() || events.is_empty() {
            return;
        }
        let n = self.layout.n;
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (idx, ev) in events.iter().enumerate() {
            for w in ev.edge.endpoints() {
                incident[w as usize].push(idx as u32);
            }
        }
        exec::for_each_mut(&mut self.banks, exec, |bank| {
            let mine = &incident[bank.owner() as usize];
            bank.apply_batch(mine.iter().map(|&idx| {
                let ev = &events[idx as usize];
                (ev.edge.coordinate(n), ev.kind.delta())
            }));
        });
    }

    pub fn sampler_count(&self) -> u64 {
        self.banks.iter().map(|b| b.sampler_count() as u64).sum()
    }

    pub fn space(&self) -> SpaceReport {
        SpaceReport {
            sampler_count: self.sampler_count(),
            stored_cells: self.banks.iter().map(|b| b.stored_cells() as u64).sum(),
            estimated_bits: self.banks.iter().map(|b| b.estimated_bits()).sum(),
        }
    }
}

/// Measured size of the sampler banks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub sampler_count: u64,
    pub stored_cells: u64,
    pub estimated_bits: u64,
}

pub fn estimate_space(rs: &RepairStructure) -> SpaceReport {
    rs.space()
}

/// Smallest 0-based level that lost at most `√K` edges.
pub fn select_level(h: &HierarchicalMatching, primed: &HierarchicalMatching, k: usize) -> usize {
    (0..h.level_count())
        .find(|&i| {
            let lost = h.lost_edges(primed, i).len();
            lost * lost <= k
        })
        .expect("some level loses at most sqrt(K) edges when at most K are deleted")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainCase {
    /// The slot recovered the whole neighborhood; the vertex is left to
    /// the final greedy pass.
    FullNeighborhood,
    /// Matched to an unmatched recovered neighbor.
    MatchedFree,
    /// Took over a neighbor whose mate is in the next vertex level; the
    /// chain continues from that mate.
    Swapped,
    /// None of the above applied.
    Exhausted,
}

/// One step of a repair chain, exported as a JSON line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub chain: usize,
    pub level: usize,
    pub vertex: VertexId,
    pub case: ChainCase,
    /// Free neighbor taken, or neighbor taken over.
    pub neighbor: Option<VertexId>,
    /// Vertex the chain continues from after a swap.
    pub handoff: Option<VertexId>,
    pub recovered: usize,
    pub degree: i64,
    pub failed_samplers: usize,
}

#[derive(Clone, Debug)]
pub struct RepairOutcome {
    pub matching: Matching,
    pub selected_level: usize,
    /// Endpoints of the edges the selected level lost, ascending.
    pub affected: Vec<VertexId>,
    /// Every edge returned by a sampler during the repair.
    pub recovered: Vec<Edge>,
    pub trace: Vec<TraceStep>,
    pub exhausted: usize,
}

/// Repairs level `level` of `primed` (the hierarchy after deletions) and
/// extends the result greedily with the surviving lower levels and the
/// recovered edges.
pub fn repair(
    rs: &RepairStructure,
    h: &HierarchicalMatching,
    primed: &HierarchicalMatching,
    level: usize,
) -> RepairOutcome {
    let mut m = primed.level(level).clone();
    let affected: Vec<VertexId> = h
        .lost_edges(primed, level)
        .into_iter()
        .flat_map(Edge::endpoints)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(
        affected.len() <= rs.layout.slots,
        "{} affected vertices for {} slots",
        affected.len(),
        rs.layout.slots
    );
    let mut recovered = BTreeSet::new();
    let mut trace = Vec::new();
    let mut exhausted = 0;
    for (chain, &start) in affected.iter().enumerate() {
        if m.is_matched(start) {
            continue;
        }
        let mut u = start;
        let mut i = 0;
        loop {
            let bank = rs
                .bank(i, u)
                .expect("a chain at level i only visits members of V_i");
            let sample = bank.recover_neighborhood(chain);
            recovered.extend(sample.neighbors.iter().map(|&w| Edge::of(u, w)));
            let (case, neighbor, handoff) = step(rs, &mut m, u, i, &sample);
            debug_assert!(m.is_consistent());
            trace.push(TraceStep {
                chain,
                level: i,
                vertex: u,
                case,
                neighbor,
                handoff,
                recovered: sample.neighbors.len(),
                degree: bank.degree(),
                failed_samplers: sample.failures,
            });
            match (case, handoff) {
                (ChainCase::Swapped, Some(next)) => {
                    u = next;
                    i += 1;
                }
                (ChainCase::Exhausted, _) => {
                    exhausted += 1;
                    break;
                }
                _ => break,
            }
        }
    }
    let recovered: Vec<Edge> = recovered.into_iter().collect();
    let lower = (0..level).map(|j| primed.level(j).edges().collect::<Vec<_>>());
    let matching = extend_downward(&m, lower.chain(std::iter::once(recovered.clone())));
    RepairOutcome {
        matching,
        selected_level: level,
        affected,
        recovered,
        trace,
        exhausted,
    }
}

fn step(
    rs: &RepairStructure,
    m: &mut Matching,
    u: VertexId,
    i: usize,
    sample: &NeighborhoodSample,
) -> (ChainCase, Option<VertexId>, Option<VertexId>) {
    if sample.complete {
        return (ChainCase::FullNeighborhood, None, None);
    }
    if let Some(&w) = sample.neighbors.iter().find(|&&w| !m.is_matched(w)) {
        m.add(Edge::of(u, w));
        return (ChainCase::MatchedFree, Some(w), None);
    }
    if i < rs.levels.depth() {
        let steal = sample.neighbors.iter().find_map(|&v| {
            let mate = m.mate(v)?;
            rs.levels.contains(i + 1, mate).then_some((v, mate))
        });
        if let Some((v, mate)) = steal {
            m.remove(Edge::of(v, mate));
            m.add(Edge::of(u, v));
            return (ChainCase::Swapped, Some(v), Some(mate));
        }
    }
    (ChainCase::Exhausted, None, None)
}
