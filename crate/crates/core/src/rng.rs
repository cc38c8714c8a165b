//! `ctr-chacha8/v1`: the seeded generator behind every random draw.
//!
//! A stream is addressed by three 64-bit words `(seed, stream, counter)`.
//! Its ChaCha8 key is the 32 bytes `seed_le ‖ stream_le ‖ counter_le ‖ 0^8`
//! and the keystream is read as little-endian `u64` words starting at
//! block 0. Derived quantities use only those words:
//!
//! * `below(n)`: draw `v`, accept if `v < n * floor(2^64 / n)`, return `v % n`.
//! * `bit()`: lowest bit of one word.
//! * `below_big(n)`: draw `ceil(bits(n) / 64)` words, assemble little-endian,
//!   mask to `bits(n)` bits, retry until the value is below `n`.
//!
//! Any implementation following these rules reproduces the fixtures.

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const GENERATOR_NAME: &str = "ctr-chacha8/v1";

/// Stream tags used inside the crate. Callers may use any other value.
pub mod stream {
    pub const SAMPLES: u64 = 1;
    pub const SAMPLER: u64 = 2;
    pub const TRIAL: u64 = 3;
    pub const ESTIMATE: u64 = 4;
    pub const FRESH: u64 = 5;
    pub const TARGET: u64 = 6;
    pub const COINS: u64 = 7;
    pub const CHECK: u64 = 8;
    pub const CORPUS: u64 = 9;
}

pub struct Coins {
    inner: ChaCha8Rng,
}

impl Coins {
    pub fn new(seed: u64, stream: u64, counter: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&stream.to_le_bytes());
        key[16..24].copy_from_slice(&counter.to_le_bytes());
        Coins { inner: ChaCha8Rng::from_seed(key) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn bit(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = (u64::MAX / n) * n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn below_big(&mut self, n: &BigUint) -> BigUint {
        assert!(n.bits() > 0, "below_big(0)");
        let bits = n.bits();
        let words = bits.div_ceil(64) as usize;
        let top_mask = if bits % 64 == 0 { u64::MAX } else { (1u64 << (bits % 64)) - 1 };
        loop {
            let mut digits: Vec<u64> = (0..words).map(|_| self.next_u64()).collect();
            digits[words - 1] &= top_mask;
            let v = BigUint::from_slice(
                &digits.iter().flat_map(|d| [*d as u32, (*d >> 32) as u32]).collect::<Vec<_>>(),
            );
            if &v < n {
                return v;
            }
        }
    }
}

/// A child seed for sub-experiment `index` under `tag`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    Coins::new(seed, tag, index).next_u64()
}
