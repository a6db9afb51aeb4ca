//! Arithmetic modulo the Mersenne prime `2^127 - 1`.

/// `2^127 - 1`, the fingerprint field. Elements are `u128 < P`.
pub struct Fp127;

impl Fp127 {
    pub const P: u128 = (1 << 127) - 1;

    #[inline]
    pub fn add(a: u128, b: u128) -> u128 {
        let s = a + b; // both < 2^127, no overflow
        // branch-free: the comparison is a coin flip on random inputs
        s - (Self::P & ((s >= Self::P) as u128).wrapping_neg())
    }

    #[inline]
    pub fn sub(a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a + (Self::P - b)
        }
    }

    #[inline]
    pub fn neg(a: u128) -> u128 {
        if a == 0 {
            0
        } else {
            Self::P - a
        }
    }

    /// Reduces an arbitrary `u128`.
    #[inline]
    pub fn reduce(x: u128) -> u128 {
        let s = (x & Self::P) + (x >> 127);
        if s >= Self::P {
            s - Self::P
        } else {
            s
        }
    }

    pub fn mul(a: u128, b: u128) -> u128 {
        const LO: u128 = u64::MAX as u128;
        let (a1, a0) = (a >> 64, a & LO);
        let (b1, b0) = (b >> 64, b & LO);
        let p00 = a0 * b0;
        let p11 = a1 * b1;
        // a1, b1 < 2^63, so each cross term is < 2^127 and the sum fits.
        let mid = a0 * b1 + a1 * b0;
        let (lo, carry) = p00.overflowing_add(mid << 64);
        let hi = p11 + (mid >> 64) + carry as u128;
        // x = hi·2^128 + lo and 2^128 ≡ 2 (mod P); hi < 2^126.
        let t = (lo & Self::P) + (lo >> 127) + (hi << 1);
        Self::reduce(t)
    }

    pub fn pow(mut base: u128, mut exp: u64) -> u128 {
        let mut acc = 1u128;
        base = Self::reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = Self::mul(acc, base);
            }
            base = Self::mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `k mod P` for a signed integer.
    pub fn from_i64(k: i64) -> u128 {
        if k >= 0 {
            k as u128
        } else {
            Self::neg(k.unsigned_abs() as u128)
        }
    }
}
