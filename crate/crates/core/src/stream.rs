//! Seeds and deterministic field-element streams.
//!
//! The PRG is ChaCha20 in counter mode (`rand_chacha`), read as a sequence of
//! little-endian 32-bit words. Each word is accepted only if it lies below
//! `floor(2^32 / q) * q`, then reduced mod `q`, so outputs carry no modulo
//! bias. The stream position is the ChaCha word counter, which makes
//! expansion platform independent and resumable.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::field::{FieldElement, FieldVector, Meter, PrimeField};

/// A 256-bit PRG seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Seed(pub [u8; 32]);

impl core::fmt::Debug for Seed {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Seed(")?;
        for b in &self.0[..4] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

impl Seed {
    /// Domain-separated child seed: `SHA-256(parent || len(label) || label || index)`.
    pub fn derive(&self, label: &str, index: u64) -> Seed {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update((label.len() as u32).to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        Seed(h.finalize().into())
    }

    /// Seed from an integer, for configs and tests.
    pub fn from_u64(v: u64) -> Seed {
        let mut h = Sha256::new();
        h.update(b"master");
        h.update(v.to_le_bytes());
        Seed(h.finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

/// A seed plus a position in its keystream, measured in 32-bit words.
#[derive(Clone)]
pub struct SeedStream {
    seed: Seed,
    rng: ChaCha20Rng,
}

impl core::fmt::Debug for SeedStream {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SeedStream")
            .field("seed", &self.seed)
            .field("counter", &self.counter())
            .finish()
    }
}

impl SeedStream {
    pub fn new(seed: Seed) -> Self {
        Self { seed, rng: ChaCha20Rng::from_seed(seed.0) }
    }

    /// Resumes a stream at an explicit word counter.
    pub fn at(seed: Seed, counter: u64) -> Self {
        let mut s = Self::new(seed);
        s.rng.set_word_pos(counter as u128);
        s
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.rng.get_word_pos() as u64
    }

    /// Next `len` field elements. Successive calls read disjoint windows.
    pub fn expand(&mut self, field: &PrimeField, len: usize, meter: &mut Meter) -> FieldVector {
        meter.prg_streams += 1;
        meter.prg_elems += len as u64;
        (0..len).map(|_| self.next_elem(field)).collect()
    }

    pub fn next_elem(&mut self, field: &PrimeField) -> FieldElement {
        let q = field.modulus() as u64;
        let bound = ((1u64 << 32) / q) * q;
        loop {
            let raw = self.rng.next_u32() as u64;
            if raw < bound {
                return field.elem(raw % q);
            }
        }
    }

    /// Uniform integer in `[0, n)`, `n > 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.rng.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        self.rng.fill_bytes(out)
    }
}

/// One-shot `PRG(seed)` of length `len` from counter zero.
pub fn expand_seed(seed: Seed, field: &PrimeField, len: usize, meter: &mut Meter) -> FieldVector {
    SeedStream::new(seed).expand(field, len, meter)
}
