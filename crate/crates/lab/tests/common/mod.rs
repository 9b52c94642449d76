#![allow(dead_code)]

use lightsecagg_core::ProtocolConfig;
use lightsecagg_lab::seeds::RoundSeeds;

pub const Q: u64 = 2_147_483_647;

pub fn cfg(n: usize, t: usize, d: usize, u: usize, len: usize) -> ProtocolConfig {
    ProtocolConfig { users: n, privacy: t, dropout: d, target: u, model_len: len, modulus: Q, weights: None }
}

/// Survivor sum computed with plain integer arithmetic, independent of the
/// field code under test.
pub fn oracle_sum(c: &ProtocolConfig, seeds: &RoundSeeds, survivors: &[u32]) -> Vec<u32> {
    let field = c.field().unwrap();
    let mut acc = vec![0u64; c.model_len];
    for &u in survivors {
        let x = seeds.model(&field, u, c.model_len).unwrap();
        let w = c.weight(u) % c.modulus;
        for (a, v) in acc.iter_mut().zip(x.values()) {
            *a = (*a + w * v as u64 % c.modulus) % c.modulus;
        }
    }
    acc.into_iter().map(|v| v as u32).collect()
}
