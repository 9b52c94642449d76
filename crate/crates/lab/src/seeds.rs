//! Derivation of every random quantity in a round from one master seed.
//!
//! Models depend on the master seed alone, so repeats of a cell aggregate
//! the same vectors. Protocol randomness additionally depends on the round
//! number, so repeats produce distinct transcripts.

use lightsecagg_core::baseline::UserSeeds;
use lightsecagg_core::quant::QuantizationScheme;
use lightsecagg_core::stream::{Seed, SeedStream};
use lightsecagg_core::{FieldVector, Meter, PrimeField, Result};

/// Fixed-point scheme used for the synthetic models.
pub const MODEL_SCHEME: QuantizationScheme = QuantizationScheme { fractional_bits: 16, clip_range: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundSeeds {
    pub master: u64,
    pub round: u64,
}

impl RoundSeeds {
    pub fn new(master: u64, round: u64) -> Self {
        Self { master, round }
    }

    fn master_seed(&self) -> Seed {
        Seed::from_u64(self.master)
    }

    fn protocol(&self) -> Seed {
        self.master_seed().derive("round", self.round)
    }

    pub fn lsa_mask(&self, user: u32) -> Seed {
        self.protocol().derive("lsa-mask", user as u64)
    }

    pub fn lsa_noise(&self, user: u32) -> Seed {
        self.protocol().derive("lsa-noise", user as u64)
    }

    pub fn secagg(&self, user: u32) -> UserSeeds {
        let p = self.protocol();
        UserSeeds {
            private: p.derive("secagg-b", user as u64),
            key: p.derive("keys", user as u64),
            sharing: p.derive("shamir", user as u64),
        }
    }

    /// Victim selection stream; round independent so repeats drop the same users.
    pub fn dropout(&self) -> SeedStream {
        SeedStream::new(self.master_seed().derive("dropout", 0))
    }

    /// Synthetic real-valued model of `user`, uniform in `[-1, 1)`.
    pub fn model_real(&self, user: u32, d: usize) -> Vec<f64> {
        let mut s = SeedStream::new(self.master_seed().derive("model", user as u64));
        (0..d).map(|_| (s.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0).collect()
    }

    /// The quantized model `x_i`.
    pub fn model(&self, field: &PrimeField, user: u32, d: usize) -> Result<FieldVector> {
        MODEL_SCHEME.quantize(&self.model_real(user, d), field)
    }

    /// Exact field sum of the given users' models.
    pub fn model_sum(&self, field: &PrimeField, users: &[u32], d: usize) -> Result<FieldVector> {
        let mut acc = field.zeros(d);
        for &u in users {
            field.add_assign(&mut acc, &self.model(field, u, d)?, &mut Meter::new())?;
        }
        Ok(acc)
    }
}
