use rand::Rng;

/// Strongly universal hash of a 64-bit key to 32 bits, by vector
/// multiply-shift over the key's two 32-bit halves:
/// `((a_lo·x_lo + a_hi·x_hi + b) mod 2^64) >> 32`.
///
/// A coordinate belongs to subsampling level `g` when the hash value has
/// at least `g` trailing zero bits, so level `g` keeps each coordinate with
/// probability `2^-g`, pairwise independently, and the levels are nested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelHash {
    a_lo: u64,
    a_hi: u64,
    b: u64,
}

impl LevelHash {
    /// Deepest level a hash value can certify.
    pub const MAX_LEVEL: u8 = 32;

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        LevelHash {
            a_lo: rng.gen(),
            a_hi: rng.gen(),
            b: rng.gen(),
        }
    }

    pub fn from_parts(a_lo: u64, a_hi: u64, b: u64) -> Self {
        LevelHash { a_lo, a_hi, b }
    }

    pub fn parts(&self) -> (u64, u64, u64) {
        (self.a_lo, self.a_hi, self.b)
    }

    #[inline]
    pub fn value(&self, x: u64) -> u32 {
        let s = self
            .a_lo
            .wrapping_mul(x & 0xffff_ffff)
            .wrapping_add(self.a_hi.wrapping_mul(x >> 32))
            .wrapping_add(self.b);
        (s >> 32) as u32
    }

    /// Deepest level (at most `depth`) that admits `x`.
    #[inline]
    pub fn level(&self, x: u64, depth: u8) -> u8 {
        (self.value(x).trailing_zeros() as u8).min(depth)
    }
}
