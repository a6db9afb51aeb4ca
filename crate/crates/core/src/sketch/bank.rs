use rand::Rng;

use super::field::Fp127;
use super::hash::LevelHash;
use super::sampler::{default_depth, term, Cell, PowerCache, Update};
use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::stream::{Edge, EdgeEvent, VertexId};

/// Bits charged per stored cell: two 64-bit counters and a 127-bit fingerprint.
pub const CELL_BITS: u64 = 64 + 64 + 127;
/// Bits charged per row hash.
pub const HASH_BITS: u64 = 3 * 64;

/// All samplers attached to one vertex at one repair level.
///
/// Every sampler watches the owner's incident-edge vector. The samplers
/// are split into `slots` groups of equal size; a repair chain reads only
/// its own slot. Samplers in a bank share the level-0 cell (which admits
/// every coordinate) and the fingerprint base, and each sampler owns
/// `rows_per_sampler` independently hashed rows.
///
/// The cells of all rows live in one arena: row `r` holds levels
/// `1..=len(r)` at `cells[offsets[r]..offsets[r + 1]]`, and a row only
/// grows when an update reaches a level it has not stored yet.
#[derive(Clone, Debug)]
pub struct SamplerBank {
    owner: VertexId,
    n: usize,
    universe: u64,
    depth: u8,
    z: u128,
    base: Cell,
    rows_per_sampler: usize,
    samplers_per_slot: usize,
    slots: usize,
    hashes: Vec<LevelHash>,
    offsets: Vec<usize>,
    cells: Vec<Cell>,
}

/// Outcome of querying one slot of a bank.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NeighborhoodSample {
    /// Distinct neighbors recovered, ascending.
    pub neighbors: Vec<VertexId>,
    /// Whether every current neighbor was recovered.
    pub complete: bool,
    /// Samplers in the slot that returned nothing.
    pub failures: usize,
}

impl SamplerBank {
    pub fn new(
        owner: VertexId,
        n: usize,
        slots: usize,
        samplers_per_slot: usize,
        rows_per_sampler: usize,
        seed: u64,
    ) -> Self {
        let universe = (n as u64 * n as u64).max(1);
        let mut rng = rng_from(seed);
        let z = rng.gen_range(2..Fp127::P);
        let rows_per_sampler = rows_per_sampler.max(1);
        let total = slots * samplers_per_slot * rows_per_sampler;
        let hashes = (0..total).map(|_| LevelHash::random(&mut rng)).collect();
        SamplerBank {
            owner,
            n,
            universe,
            depth: default_depth(universe),
            z,
            base: Cell::default(),
            rows_per_sampler,
            samplers_per_slot,
            slots,
            hashes,
            offsets: vec![0; total + 1],
            cells: Vec::new(),
        }
    }

    pub fn owner(&self) -> VertexId {
        self.owner
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn samplers_per_slot(&self) -> usize {
        self.samplers_per_slot
    }

    pub fn sampler_count(&self) -> usize {
        self.slots * self.samplers_per_slot
    }

    /// Net number of incident edges seen so far.
    pub fn degree(&self) -> i64 {
        self.base.count
    }

    /// Applies one stream event incident to the owner.
    pub fn update(&mut self, event: &EdgeEvent) -> Result<()> {
        if !event.edge.touches(self.owner) {
            return Err(Error::NotIncident {
                edge: event.edge,
                owner: self.owner,
            });
        }
        event.edge.check_range(self.n)?;
        self.apply_batch([(event.edge.coordinate(self.n), event.kind.delta())]);
        Ok(())
    }

    /// Applies `(coord, delta)` pairs; the result does not depend on how
    /// updates are grouped into calls.
    pub(crate) fn apply_batch(&mut self, updates: impl IntoIterator<Item = (u64, i64)>) {
        let updates: Vec<Update> = updates
            .into_iter()
            .filter(|&(_, d)| d != 0)
            .map(|(coord, delta)| Update {
                coord,
                delta,
                term: term(delta, Fp127::pow(self.z, coord)),
            })
            .collect();
        if updates.is_empty() {
            return;
        }
        for u in &updates {
            self.base.apply(u.coord, u.delta, u.term);
        }
        let depth = self.depth;
        let mut buckets = vec![Cell::default(); depth as usize + 1];
        // levels a row did not store yet, as (row, first new level, cells)
        let mut spill: Vec<(usize, usize, Vec<Cell>)> = Vec::new();
        for (r, h) in self.hashes.iter().enumerate() {
            let mut top = 0;
            for u in &updates {
                let l = h.level(u.coord, depth) as usize;
                buckets[l].apply(u.coord, u.delta, u.term);
                top = top.max(l);
            }
            buckets[0] = Cell::default();
            if top == 0 {
                continue;
            }
            let (start, len) = (self.offsets[r], self.offsets[r + 1] - self.offsets[r]);
            let mut extra = vec![Cell::default(); top.saturating_sub(len)];
            // level g receives every update whose deepest level is >= g
            let mut acc = Cell::default();
            for g in (1..=top).rev() {
                acc.merge(&buckets[g]);
                buckets[g] = Cell::default();
                if g <= len {
                    self.cells[start + g - 1].merge(&acc);
                } else {
                    extra[g - 1 - len] = acc;
                }
            }
            if !extra.is_empty() {
                spill.push((r, len, extra));
            }
        }
        if !spill.is_empty() {
            self.absorb(spill);
        }
    }

    /// Rebuilds the arena with the spilled levels appended to their rows.
    fn absorb(&mut self, spill: Vec<(usize, usize, Vec<Cell>)>) {
        let rows = self.hashes.len();
        let added: usize = spill.iter().map(|(_, _, c)| c.len()).sum();
        let mut cells = Vec::with_capacity(self.cells.len() + added);
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        let mut pending = spill.into_iter().peekable();
        for r in 0..rows {
            cells.extend_from_slice(&self.cells[self.offsets[r]..self.offsets[r + 1]]);
            if let Some((_, _, extra)) = pending.next_if(|(row, _, _)| *row == r) {
                cells.extend(extra);
            }
            offsets.push(cells.len());
        }
        self.cells = cells;
        self.offsets = offsets;
    }

    fn sample(&self, sampler: usize, powers: &mut PowerCache) -> Option<u64> {
        let r = self.rows_per_sampler;
        (sampler * r..(sampler + 1) * r).find_map(|row| {
            self.cells[self.offsets[row]..self.offsets[row + 1]]
                .iter()
                .find_map(|c| c.decode(self.z, self.universe, powers))
        })
    }

    /// Queries every sampler in `slot` and collects the distinct neighbors.
    pub fn recover_neighborhood(&self, slot: usize) -> NeighborhoodSample {
        assert!(slot < self.slots, "slot {slot} out of range");
        let degree = self.degree();
        if degree <= 0 {
            return NeighborhoodSample {
                neighbors: Vec::new(),
                complete: true,
                failures: 0,
            };
        }
        let mut powers = PowerCache::default();
        let mut neighbors = Vec::new();
        let mut failures = 0;
        if let Some(c) = self.base.decode(self.z, self.universe, &mut powers) {
            // degree one: level 0 answers every sampler the same way
            neighbors.extend(self.neighbor_of(c));
        } else {
            let first = slot * self.samplers_per_slot;
            for s in first..first + self.samplers_per_slot {
                match self.sample(s, &mut powers) {
                    Some(c) => neighbors.extend(self.neighbor_of(c)),
                    None => failures += 1,
                }
            }
        }
        neighbors.sort_unstable();
        neighbors.dedup();
        NeighborhoodSample {
            complete: neighbors.len() as i64 == degree,
            neighbors,
            failures,
        }
    }

    fn neighbor_of(&self, coord: u64) -> Option<VertexId> {
        Edge::from_coordinate(coord, self.n)?.other(self.owner)
    }

    /// Cells currently held in memory, including the shared level 0.
    pub fn stored_cells(&self) -> usize {
        1 + self.cells.len()
    }

    /// Bits used by the stored cells and hash parameters.
    pub fn estimated_bits(&self) -> u64 {
        self.stored_cells() as u64 * CELL_BITS + self.hashes.len() as u64 * HASH_BITS + 127
    }
}
