use std::collections::HashMap;

use rand::Rng;

use super::field::Fp127;
use super::hash::LevelHash;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Upper bound used for the failure probability of one sampler row.
///
/// With an ideal hash a row fails exactly when the deepest occupied level
/// is shared by two or more coordinates; that probability peaks at 1/3 for
/// a support of size two and stays below it otherwise.
pub const ROW_FAILURE_BOUND: f64 = 0.35;

/// Independent rows needed for failure probability at most `delta`.
pub fn rows_for_delta(delta: f64) -> usize {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    ((1.0 / delta).ln() / (1.0 / ROW_FAILURE_BOUND).ln()).ceil().max(1.0) as usize
}

/// Sketch depth for a vector of dimension `universe`: `2·⌈log2(universe)⌉`,
/// capped at the deepest level a hash value can certify.
pub(crate) fn default_depth(universe: u64) -> u8 {
    let bits = 64 - universe.max(2).saturating_sub(1).leading_zeros();
    (2 * bits).clamp(1, LevelHash::MAX_LEVEL as u32) as u8
}

/// One 1-sparse recovery cell: `Σ f_i`, `Σ f_i·i` and `Σ f_i·z^i`.
///
/// `count` and `id_sum` use wrapping arithmetic; a 1-sparse cell's true
/// values always fit, and anything else is rejected by the fingerprint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cell {
    pub count: i64,
    pub id_sum: i64,
    pub fingerprint: u128,
}

impl Cell {
    #[inline]
    pub(crate) fn apply(&mut self, coord: u64, delta: i64, term: u128) {
        self.count = self.count.wrapping_add(delta);
        self.id_sum = self.id_sum.wrapping_add(delta.wrapping_mul(coord as i64));
        self.fingerprint = Fp127::add(self.fingerprint, term);
    }

    pub(crate) fn merge(&mut self, other: &Cell) {
        self.count = self.count.wrapping_add(other.count);
        self.id_sum = self.id_sum.wrapping_add(other.id_sum);
        self.fingerprint = Fp127::add(self.fingerprint, other.fingerprint);
    }

    pub fn is_zero(&self) -> bool {
        *self == Cell::default()
    }

    /// The single coordinate of a verified 1-sparse cell.
    pub(crate) fn decode(&self, z: u128, universe: u64, powers: &mut PowerCache) -> Option<u64> {
        if self.count <= 0 || self.id_sum < 0 || self.id_sum % self.count != 0 {
            return None;
        }
        let coord = (self.id_sum / self.count) as u64;
        if coord >= universe {
            return None;
        }
        let expect = Fp127::mul(self.count as u128, powers.get(z, coord));
        (expect == self.fingerprint).then_some(coord)
    }
}

/// `z^c` memo for one query pass.
#[derive(Default)]
pub(crate) struct PowerCache {
    memo: HashMap<u64, u128>,
}

impl PowerCache {
    pub(crate) fn get(&mut self, z: u128, c: u64) -> u128 {
        *self.memo.entry(c).or_insert_with(|| Fp127::pow(z, c))
    }
}

/// Signed fingerprint term `delta·z^c`.
#[inline]
pub(crate) fn term(delta: i64, zpow: u128) -> u128 {
    match delta {
        1 => zpow,
        -1 => Fp127::neg(zpow),
        d => Fp127::mul(Fp127::from_i64(d), zpow),
    }
}

/// A pending update with its precomputed fingerprint term.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Update {
    pub(crate) coord: u64,
    pub(crate) delta: i64,
    pub(crate) term: u128,
}

/// One subsampling row: a level hash and the cells of levels `1..=depth`.
/// Level 0 admits every coordinate and is kept by the owner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct SketchRow {
    pub(crate) hash: LevelHash,
    // cells[g - 1] is level g; trailing all-zero levels are not stored
    pub(crate) cells: Vec<Cell>,
}

impl SketchRow {
    pub(crate) fn new(hash: LevelHash) -> Self {
        SketchRow {
            hash,
            cells: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn update(&mut self, coord: u64, delta: i64, term: u128, depth: u8) {
        let top = self.hash.level(coord, depth) as usize;
        if top == 0 {
            return;
        }
        if self.cells.len() < top {
            self.cells.resize(top, Cell::default());
        }
        for cell in &mut self.cells[..top] {
            cell.apply(coord, delta, term);
        }
        self.trim();
    }

    fn trim(&mut self) {
        while self.cells.last().is_some_and(Cell::is_zero) {
            self.cells.pop();
        }
    }

    pub(crate) fn query(&self, z: u128, universe: u64, powers: &mut PowerCache) -> Option<u64> {
        self.cells.iter().find_map(|c| c.decode(z, universe, powers))
    }

    fn merge(&mut self, other: &SketchRow) {
        if self.cells.len() < other.cells.len() {
            self.cells.resize(other.cells.len(), Cell::default());
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
        self.trim();
    }
}

/// ℓ0-sampler over a turnstile vector of dimension `n²`.
///
/// The sampler holds `rows` independent subsampling rows that share the
/// fingerprint base `z` and the level-0 cell. A query scans level 0 and
/// then each row from its densest level upward, returning the first cell
/// that verifies as 1-sparse. Conditioned on success the answer is uniform
/// over the support; each row fails with probability at most
/// [`ROW_FAILURE_BOUND`], so [`L0Sampler::new`] sizes the row count from
/// the target failure probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L0Sampler {
    universe: u64,
    depth: u8,
    z: u128,
    base: Cell,
    rows: Vec<SketchRow>,
}

impl L0Sampler {
    /// Sampler for `n`-vertex edge vectors with failure probability `delta`.
    pub fn new(n: usize, delta: f64, seed: u64) -> Self {
        Self::with_rows(n, rows_for_delta(delta), seed)
    }

    pub fn with_rows(n: usize, rows: usize, seed: u64) -> Self {
        let universe = (n as u64).saturating_mul(n as u64).max(1);
        let mut rng = rng_from(seed);
        let z = rng.gen_range(2..Fp127::P);
        let rows = (0..rows.max(1))
            .map(|_| SketchRow::new(LevelHash::random(&mut rng)))
            .collect();
        L0Sampler {
            universe,
            depth: default_depth(universe),
            z,
            base: Cell::default(),
            rows,
        }
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `delta` to coordinate `coord`. Panics if `coord` is outside the
    /// sampler's universe.
    pub fn update(&mut self, coord: u64, delta: i64) {
        assert!(coord < self.universe, "coordinate {coord} outside [0, {})", self.universe);
        if delta == 0 {
            return;
        }
        let t = term(delta, Fp127::pow(self.z, coord));
        self.base.apply(coord, delta, t);
        for row in &mut self.rows {
            row.update(coord, delta, t, self.depth);
        }
    }

    pub fn query(&self) -> Option<u64> {
        let mut powers = PowerCache::default();
        if let Some(c) = self.base.decode(self.z, self.universe, &mut powers) {
            return Some(c);
        }
        self.rows
            .iter()
            .find_map(|r| r.query(self.z, self.universe, &mut powers))
    }

    /// Cell of `row` at level `g` (level 0 is shared by all rows).
    pub fn level_cell(&self, row: usize, g: usize) -> Cell {
        if g == 0 {
            return self.base;
        }
        self.rows[row].cells.get(g - 1).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.rows.iter().all(|r| r.cells.is_empty())
    }

    /// Adds another sketch built with the same seed; the result is the
    /// sketch of the summed vectors.
    pub fn merge(&mut self, other: &L0Sampler) -> Result<()> {
        if self.universe != other.universe
            || self.depth != other.depth
            || self.z != other.z
            || self.rows.len() != other.rows.len()
            || self.rows.iter().zip(&other.rows).any(|(a, b)| a.hash != b.hash)
        {
            return Err(Error::SketchMismatch("different seeds or dimensions"));
        }
        self.base.merge(&other.base);
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            a.merge(b);
        }
        Ok(())
    }

    /// Binary dump, little-endian:
    ///
    /// ```text
    /// "L0SK" | version: u16 = 1 | universe: u64 | depth: u8 | z: u128
    /// | base cell | rows: u32 | per row: a_lo, a_hi, b: u64, cells: u32, cell*
    /// cell = count: i64 | id_sum: i64 | fingerprint: u128
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"L0SK");
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&self.universe.to_le_bytes());
        out.push(self.depth);
        out.extend_from_slice(&self.z.to_le_bytes());
        put_cell(&mut out, &self.base);
        out.extend_from_slice(&(self.rows.len() as u32).to_le_bytes());
        for row in &self.rows {
            let (a_lo, a_hi, b) = row.hash.parts();
            for word in [a_lo, a_hi, b] {
                out.extend_from_slice(&word.to_le_bytes());
            }
            out.extend_from_slice(&(row.cells.len() as u32).to_le_bytes());
            for c in &row.cells {
                put_cell(&mut out, c);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader(bytes);
        if r.take(4)? != b"L0SK" {
            return Err(Error::Decode("bad magic"));
        }
        if u16::from_le_bytes(r.array()?) != 1 {
            return Err(Error::Decode("unsupported version"));
        }
        let universe = u64::from_le_bytes(r.array()?);
        let depth = r.take(1)?[0];
        if depth == 0 || depth > LevelHash::MAX_LEVEL {
            return Err(Error::Decode("bad depth"));
        }
        let z = u128::from_le_bytes(r.array()?);
        let base = r.cell()?;
        let nrows = u32::from_le_bytes(r.array()?) as usize;
        let mut rows = Vec::with_capacity(nrows.min(1 << 16));
        for _ in 0..nrows {
            let a_lo = u64::from_le_bytes(r.array()?);
            let a_hi = u64::from_le_bytes(r.array()?);
            let b = u64::from_le_bytes(r.array()?);
            let ncells = u32::from_le_bytes(r.array()?) as usize;
            if ncells > depth as usize {
                return Err(Error::Decode("row deeper than sketch"));
            }
            let cells = (0..ncells).map(|_| r.cell()).collect::<Result<Vec<_>>>()?;
            rows.push(SketchRow {
                hash: LevelHash::from_parts(a_lo, a_hi, b),
                cells,
            });
        }
        if !r.0.is_empty() {
            return Err(Error::Decode("trailing bytes"));
        }
        Ok(L0Sampler {
            universe,
            depth,
            z,
            base,
            rows,
        })
    }
}

fn put_cell(out: &mut Vec<u8>, c: &Cell) {
    out.extend_from_slice(&c.count.to_le_bytes());
    out.extend_from_slice(&c.id_sum.to_le_bytes());
    out.extend_from_slice(&c.fingerprint.to_le_bytes());
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.0.len() < k {
            return Err(Error::Decode("truncated"));
        }
        let (head, rest) = self.0.split_at(k);
        self.0 = rest;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn cell(&mut self) -> Result<Cell> {
        Ok(Cell {
            count: i64::from_le_bytes(self.array()?),
            id_sum: i64::from_le_bytes(self.array()?),
            fingerprint: u128::from_le_bytes(self.array()?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_seed, rng_from};
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::BTreeMap;

    #[test]
    fn empty_sketch_returns_nothing() {
        assert_eq!(L0Sampler::new(16, 1e-3, 1).query(), None);
    }

    #[test]
    fn insert_then_delete_returns_to_zero() {
        let mut s = L0Sampler::new(16, 1e-3, 2);
        s.update(37, 1);
        s.update(37, -1);
        assert!(s.is_zero());
        assert_eq!(s.query(), None);
    }

    #[test]
    fn single_insert_fills_level_zero() {
        let mut s = L0Sampler::new(16, 1e-3, 3);
        s.update(100, 1);
        let cell = s.level_cell(0, 0);
        assert_eq!((cell.count, cell.id_sum), (1, 100));
        assert_eq!(s.query(), Some(100));
    }

    #[test]
    fn rows_follow_delta() {
        assert_eq!(rows_for_delta(0.5), 1);
        assert_eq!(rows_for_delta(0.35), 1);
        assert_eq!(rows_for_delta(0.1), 3);
        let r = rows_for_delta(1.0 / 256f64.powi(4));
        assert!(0.35f64.powi(r as i32) <= 1.0 / 256f64.powi(4));
        assert!(0.35f64.powi(r as i32 - 1) > 1.0 / 256f64.powi(4));
    }

    #[test]
    fn random_updates_recover_a_support_coordinate() {
        // dense replay oracle: the net vector is tracked independently
        let n = 12;
        let universe = (n * n) as u64;
        for trial in 0..50u64 {
            let mut rng = rng_from(derive_seed(99, &[trial]));
            let mut s = L0Sampler::new(n, 1e-4, trial);
            let mut dense = vec![0i64; universe as usize];
            for _ in 0..100 {
                let c = rng.gen_range(0..universe);
                // keep entries in {0, 1}: toggle
                let d = if dense[c as usize] == 1 { -1 } else { 1 };
                dense[c as usize] += d;
                s.update(c, d);
            }
            let support: Vec<u64> = (0..universe).filter(|&c| dense[c as usize] != 0).collect();
            match s.query() {
                Some(c) => assert!(support.contains(&c)),
                None => assert!(support.is_empty(), "trial {trial}: sampler failed"),
            }
        }
    }

    #[test]
    fn support_of_eight_is_roughly_uniform() {
        // Exact expectation 1/8 per coordinate; loose band here, the
        // acceptance suite runs the chi-square test at scale.
        let support = [3u64, 17, 40, 41, 99, 150, 200, 255];
        let trials = 8000;
        let mut hits: BTreeMap<u64, usize> = BTreeMap::new();
        for t in 0..trials {
            let mut s = L0Sampler::new(16, 1e-6, derive_seed(5, &[t]));
            support.iter().for_each(|&c| s.update(c, 1));
            *hits.entry(s.query().expect("sampler failed")).or_default() += 1;
        }
        assert_eq!(hits.len(), 8);
        for (&c, &h) in &hits {
            assert!(support.contains(&c));
            assert!((h as f64 - 1000.0).abs() < 150.0, "coordinate {c}: {h}");
        }
    }

    #[test]
    fn merge_requires_matching_seeds() {
        let mut a = L0Sampler::new(8, 0.01, 1);
        let b = L0Sampler::new(8, 0.01, 2);
        assert!(a.merge(&b).is_err());
        let c = L0Sampler::new(9, 0.01, 1);
        assert!(a.merge(&c).is_err());
    }

    #[test]
    fn binary_dump_round_trips_and_rejects_garbage() {
        let mut s = L0Sampler::new(32, 1e-3, 77);
        for c in [5u64, 70, 900, 1000] {
            s.update(c, 1);
        }
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..4], b"L0SK");
        let back = L0Sampler::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert!(L0Sampler::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(L0Sampler::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(L0Sampler::from_bytes(&long).is_err());
    }

    proptest! {
        #[test]
        fn sketch_is_linear(
            updates in proptest::collection::vec((0u64..400, prop_oneof![Just(1i64), Just(-1i64)]), 0..120),
            split in 0usize..120,
            seed in any::<u64>(),
        ) {
            let split = split.min(updates.len());
            let mut whole = L0Sampler::new(20, 1e-3, seed);
            let mut left = whole.clone();
            let mut right = whole.clone();
            for &(c, d) in &updates {
                whole.update(c, d);
            }
            for &(c, d) in &updates[..split] {
                left.update(c, d);
            }
            for &(c, d) in &updates[split..] {
                right.update(c, d);
            }
            left.merge(&right).unwrap();
            prop_assert_eq!(left, whole);
        }
    }
}
