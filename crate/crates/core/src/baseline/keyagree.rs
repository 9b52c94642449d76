//! Finite-field Diffie-Hellman over a 61-bit safe prime.
//!
//! The group only needs to give the protocol its shape: keys are derived
//! from seeded randomness and none of the information-theoretic tests rely
//! on its hardness.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stream::{Seed, SeedStream};

/// `p = 2q + 1` with `q` prime.
pub const SAFE_PRIME_61: u64 = 0x1fff_ffff_ffff_f6bb;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DhGroup {
    p: u64,
    g: u64,
}

impl Default for DhGroup {
    /// `g = 4` generates the prime-order subgroup of quadratic residues.
    fn default() -> Self {
        Self { p: SAFE_PRIME_61, g: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPair {
    pub sk: u64,
    pub pk: u64,
}

impl DhGroup {
    pub fn new(p: u64, g: u64) -> Result<Self> {
        if p < 5 || g < 2 || g >= p {
            return Err(Error::InvalidParams(alloc::format!("bad group p = {p}, g = {g}")));
        }
        Ok(Self { p, g })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let p = self.p as u128;
        let mut acc = 1u128;
        let mut b = base as u128 % p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % p;
            }
            b = b * b % p;
            exp >>= 1;
        }
        acc as u64
    }

    pub fn public(&self, sk: u64) -> u64 {
        self.pow(self.g, sk)
    }

    /// Secret key uniform in `[1, p - 2]`.
    pub fn keypair(&self, rng: &mut SeedStream) -> KeyPair {
        let sk = 1 + rng.next_below(self.p - 2);
        KeyPair { sk, pk: self.public(sk) }
    }

    /// `pk^sk mod p`.
    pub fn agree(&self, sk: u64, pk: u64) -> u64 {
        self.pow(pk, sk)
    }
}

/// `a_{i,j}`: SHA-256 of the shared secret bound to the unordered pair.
pub fn pairwise_seed(shared: u64, i: u32, j: u32) -> Seed {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let mut h = Sha256::new();
    h.update(b"pairwise");
    h.update(shared.to_le_bytes());
    h.update(lo.to_le_bytes());
    h.update(hi.to_le_bytes());
    Seed(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_group_example() {
        let g = DhGroup::new(23, 3).unwrap();
        let (a, b) = (g.public(6), g.public(5));
        assert_eq!(g.agree(6, b), g.agree(5, a));
        assert_eq!(g.agree(6, b), 6);
    }

    #[test]
    fn equal_secrets_agree() {
        let g = DhGroup::default();
        let pk = g.public(12345);
        assert_eq!(g.agree(12345, pk), g.agree(12345, pk));
    }

    #[test]
    fn full_mesh_is_symmetric() {
        let g = DhGroup::default();
        let mut rng = SeedStream::new(Seed::from_u64(4));
        let keys: alloc::vec::Vec<KeyPair> = (0..4).map(|_| g.keypair(&mut rng)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                let a = pairwise_seed(g.agree(keys[i].sk, keys[j].pk), i as u32 + 1, j as u32 + 1);
                let b = pairwise_seed(g.agree(keys[j].sk, keys[i].pk), j as u32 + 1, i as u32 + 1);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn generator_has_prime_order() {
        let g = DhGroup::default();
        let q = (SAFE_PRIME_61 - 1) / 2;
        assert_eq!(g.pow(4, q), 1);
        assert_ne!(g.pow(4, 2), 1);
        assert_eq!(g.pow(3, SAFE_PRIME_61 - 1), 1);
    }
}
