//! LightSecAgg user and server state machines.
//!
//! Offline, each user draws a mask `z_i`, splits it into `U - T` segments,
//! appends `T` noise segments and sends the MDS encoding `[z~_i]_j` to every
//! peer `j`. Each user then uploads `x_i + z_i`. After the server announces
//! the surviving set `U1`, every user returns `sum_{i in U1} [z~_i]_j`, and
//! the server decodes `sum_{i in U1} z_i` from any `U` of these in one shot.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::coding::{EncodedMaskShare, MaskSegments, TPrivateMdsMatrix};
use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::field::{FieldVector, Meter, PrimeField};
use crate::quant::QuantizationScheme;
use crate::stream::{Seed, SeedStream};
use crate::wire::Message;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserPhase {
    OfflineSharing,
    Masking,
    Recovery,
    Done,
}

impl UserPhase {
    fn name(self) -> &'static str {
        match self {
            UserPhase::OfflineSharing => "offline-sharing",
            UserPhase::Masking => "masking",
            UserPhase::Recovery => "recovery",
            UserPhase::Done => "done",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsaUser {
    id: u32,
    round: u64,
    cfg: ProtocolConfig,
    field: PrimeField,
    matrix: TPrivateMdsMatrix,
    mask: FieldVector,
    segments: MaskSegments,
    held: BTreeMap<u32, FieldVector>,
    sent_offline: bool,
    phase: UserPhase,
    pub meter: Meter,
}

impl LsaUser {
    /// Draws `z_i` from `mask_seed` and the noise segments from `noise_seed`.
    pub fn new(
        cfg: &ProtocolConfig,
        id: u32,
        matrix: TPrivateMdsMatrix,
        round: u64,
        mask_seed: Seed,
        noise_seed: Seed,
    ) -> Result<Self> {
        let field = cfg.field()?;
        let mut meter = Meter::new();
        let mask = SeedStream::new(mask_seed).expand(&field, cfg.model_len, &mut meter);
        let mut ns = SeedStream::new(noise_seed);
        let noise = (0..cfg.privacy).map(|_| ns.expand(&field, cfg.segment_len(), &mut meter)).collect();
        let mut user = Self::with_mask_and_noise(cfg, id, matrix, round, mask, noise)?;
        user.meter = meter;
        Ok(user)
    }

    pub fn with_mask_and_noise(
        cfg: &ProtocolConfig,
        id: u32,
        matrix: TPrivateMdsMatrix,
        round: u64,
        mask: FieldVector,
        noise: Vec<FieldVector>,
    ) -> Result<Self> {
        cfg.validate()?;
        if id == 0 || id as usize > cfg.users {
            return Err(Error::UnknownUser(id));
        }
        if matrix.users() != cfg.users || matrix.target() != cfg.target || matrix.privacy() != cfg.privacy {
            return Err(Error::InvalidParams("matrix does not match (N, U, T)".into()));
        }
        if mask.len() != cfg.model_len {
            return Err(Error::ShapeMismatch { expected: cfg.model_len, got: mask.len() });
        }
        if noise.len() != cfg.privacy {
            return Err(Error::ShapeMismatch { expected: cfg.privacy, got: noise.len() });
        }
        let field = cfg.field()?;
        let segments = MaskSegments::from_mask(&mask, noise, cfg.segments())?;
        Ok(Self {
            id,
            round,
            cfg: cfg.clone(),
            field,
            matrix,
            mask,
            segments,
            held: BTreeMap::new(),
            sent_offline: false,
            phase: UserPhase::OfflineSharing,
            meter: Meter::new(),
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn phase(&self) -> UserPhase {
        self.phase
    }

    pub fn mask(&self) -> &FieldVector {
        &self.mask
    }

    pub fn segments(&self) -> &MaskSegments {
        &self.segments
    }

    /// Shares held by this user, keyed by origin.
    pub fn held_shares(&self) -> &BTreeMap<u32, FieldVector> {
        &self.held
    }

    fn expect(&self, phase: UserPhase) -> Result<()> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(Error::WrongPhase { phase: self.phase.name() })
        }
    }

    /// Encodes the segments and returns one `EncodedShare` per peer, in id
    /// order; the self-share is retained.
    pub fn offline_round(&mut self) -> Result<Vec<(u32, Message)>> {
        self.expect(UserPhase::OfflineSharing)?;
        if self.sent_offline {
            return Err(Error::WrongPhase { phase: "offline-sharing (already sent)" });
        }
        let encoded = self.matrix.encode(&self.segments, &mut self.meter)?;
        self.sent_offline = true;
        let mut out = Vec::with_capacity(self.cfg.users - 1);
        for (j, payload) in encoded.into_iter().enumerate() {
            let holder = j as u32 + 1;
            if holder == self.id {
                self.held.insert(self.id, payload);
            } else {
                let share = EncodedMaskShare { origin: self.id, holder, round: self.round, payload };
                out.push((holder, Message::EncodedShare(share)));
            }
        }
        self.maybe_finish_offline();
        Ok(out)
    }

    pub fn receive_share(&mut self, share: EncodedMaskShare) -> Result<()> {
        self.expect(UserPhase::OfflineSharing)?;
        if share.holder != self.id || share.round != self.round {
            return Err(Error::Malformed("share addressed to another holder or round"));
        }
        if share.origin == 0 || share.origin as usize > self.cfg.users {
            return Err(Error::UnknownUser(share.origin));
        }
        if self.held.contains_key(&share.origin) {
            return Err(Error::DuplicateShare { from: share.origin });
        }
        if share.payload.len() != self.cfg.segment_len() {
            return Err(Error::ShapeMismatch { expected: self.cfg.segment_len(), got: share.payload.len() });
        }
        self.held.insert(share.origin, share.payload);
        self.maybe_finish_offline();
        Ok(())
    }

    fn maybe_finish_offline(&mut self) {
        if self.sent_offline && self.held.len() == self.cfg.users {
            self.phase = UserPhase::Masking;
        }
    }

    /// Peers whose share has not arrived yet.
    pub fn missing_shares(&self) -> Vec<u32> {
        (1..=self.cfg.users as u32).filter(|j| !self.held.contains_key(j)).collect()
    }

    /// `x_i + z_i`.
    pub fn mask_model(&mut self, x: &FieldVector) -> Result<Message> {
        self.mask_weighted_model(x, 1)
    }

    /// `s_i * x_i + z_i`.
    pub fn mask_weighted_model(&mut self, x: &FieldVector, weight: u64) -> Result<Message> {
        self.expect(UserPhase::Masking)?;
        if x.len() != self.cfg.model_len {
            return Err(Error::ShapeMismatch { expected: self.cfg.model_len, got: x.len() });
        }
        let mut out = if weight == 1 {
            x.clone()
        } else {
            self.field.scale(x, self.field.elem(weight), &mut self.meter)
        };
        self.field.add_assign(&mut out, &self.mask, &mut self.meter)?;
        self.phase = UserPhase::Recovery;
        Ok(Message::MaskedModel(out))
    }

    /// Quantizes `x`, checks that the weighted sum over all users cannot wrap
    /// around, then masks `s_i * x_i`.
    pub fn mask_weighted_real(&mut self, x: &[f64], scheme: &QuantizationScheme, weight: u64) -> Result<Message> {
        let total: u64 = (1..=self.cfg.users as u32).map(|u| self.cfg.weight(u)).sum::<u64>().max(weight);
        scheme.check_headroom(&self.field, total)?;
        let q = scheme.quantize(x, &self.field)?;
        self.mask_weighted_model(&q, weight)
    }

    /// `sum_{j in U1} [z~_j]_i`.
    pub fn aggregate_shares(&mut self, survivors: &[u32]) -> Result<Message> {
        self.expect(UserPhase::Recovery)?;
        let mut acc = self.field.zeros(self.cfg.segment_len());
        for &j in survivors {
            let share = self.held.get(&j).ok_or(Error::MissingShare { from: j })?;
            self.field.add_assign(&mut acc, share, &mut self.meter)?;
        }
        self.phase = UserPhase::Done;
        Ok(Message::AggregatedShare(acc))
    }

    /// Field elements stored after the offline phase: the mask plus every held share.
    pub fn storage_elements(&self) -> usize {
        self.mask.len() + self.held.values().map(|v| v.len()).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServerPhase {
    Upload,
    Recovery,
    Done,
}

#[derive(Debug, Clone)]
pub struct LsaServer {
    cfg: ProtocolConfig,
    field: PrimeField,
    matrix: TPrivateMdsMatrix,
    masked: BTreeMap<u32, FieldVector>,
    survivors: Vec<u32>,
    masked_sum: Option<FieldVector>,
    responses: Vec<(u32, FieldVector)>,
    phase: ServerPhase,
    pub meter: Meter,
}

impl LsaServer {
    pub fn new(cfg: &ProtocolConfig, matrix: TPrivateMdsMatrix) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            field: cfg.field()?,
            matrix,
            masked: BTreeMap::new(),
            survivors: Vec::new(),
            masked_sum: None,
            responses: Vec::new(),
            phase: ServerPhase::Upload,
            meter: Meter::new(),
        })
    }

    pub fn phase(&self) -> ServerPhase {
        self.phase
    }

    fn expect(&self, phase: ServerPhase, name: &'static str) -> Result<()> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(Error::WrongPhase { phase: name })
        }
    }

    pub fn receive_masked_model(&mut self, from: u32, model: FieldVector) -> Result<()> {
        self.expect(ServerPhase::Upload, "recovery")?;
        if from == 0 || from as usize > self.cfg.users {
            return Err(Error::UnknownUser(from));
        }
        if model.len() != self.cfg.model_len {
            return Err(Error::ShapeMismatch { expected: self.cfg.model_len, got: model.len() });
        }
        if self.masked.insert(from, model).is_some() {
            return Err(Error::DuplicateShare { from });
        }
        Ok(())
    }

    pub fn uploaded(&self) -> Vec<u32> {
        self.masked.keys().copied().collect()
    }

    /// Fixes `U1`, sums its masked models and returns the announcement.
    pub fn close_upload(&mut self, survivors: &[u32]) -> Result<Message> {
        self.expect(ServerPhase::Upload, "recovery")?;
        let mut u1: Vec<u32> = survivors.to_vec();
        u1.sort_unstable();
        u1.dedup();
        let mut sum = self.field.zeros(self.cfg.model_len);
        for id in &u1 {
            let m = self.masked.get(id).ok_or(Error::MissingShare { from: *id })?;
            self.field.add_assign(&mut sum, m, &mut self.meter)?;
        }
        self.masked_sum = Some(sum);
        self.survivors = u1.clone();
        self.phase = ServerPhase::Recovery;
        Ok(Message::SurvivorSet(u1))
    }

    pub fn survivors(&self) -> &[u32] {
        &self.survivors
    }

    /// Accepts an aggregated share from any user, including one already
    /// counted as dropped.
    pub fn receive_aggregated_share(&mut self, from: u32, share: FieldVector) -> Result<()> {
        self.expect(ServerPhase::Recovery, "upload")?;
        if from == 0 || from as usize > self.cfg.users {
            return Err(Error::UnknownUser(from));
        }
        if share.len() != self.cfg.segment_len() {
            return Err(Error::ShapeMismatch { expected: self.cfg.segment_len(), got: share.len() });
        }
        if self.responses.iter().any(|(id, _)| *id == from) {
            return Err(Error::DuplicateShare { from });
        }
        self.responses.push((from, share));
        Ok(())
    }

    pub fn responses(&self) -> usize {
        self.responses.len()
    }

    pub fn ready(&self) -> bool {
        self.responses.len() >= self.cfg.target
    }

    /// `U2`: the first `U` responders in arrival order.
    pub fn decode_set(&self) -> Vec<u32> {
        self.responses.iter().take(self.cfg.target).map(|(id, _)| *id).collect()
    }

    /// Decodes `sum_{U1} z_i` and returns `sum_{U1} x_i`.
    pub fn recover(&mut self) -> Result<FieldVector> {
        self.expect(ServerPhase::Recovery, "upload")?;
        if self.survivors.len() < self.cfg.target {
            return Err(Error::InsufficientShares { needed: self.cfg.target, got: self.survivors.len() });
        }
        let segments = self.matrix.decode_aggregate(&self.responses, &mut self.meter)?;
        let mask_sum = MaskSegments::reassemble(&segments, self.cfg.model_len);
        let mut out = self.masked_sum.clone().ok_or(Error::WrongPhase { phase: "upload" })?;
        self.field.sub_assign(&mut out, &mask_sum, &mut self.meter)?;
        self.phase = ServerPhase::Done;
        Ok(out)
    }

    /// Recovered sum divided by `sum s_i`, after dequantization.
    pub fn weighted_mean(&self, sum: &FieldVector, scheme: &QuantizationScheme) -> Vec<f64> {
        scheme.dequantize_mean(sum, &self.field, self.cfg.total_weight(&self.survivors))
    }
}

/// The per-user mask the verifier can regenerate from the user's seed.
pub fn regenerate_mask(field: &PrimeField, seed: Seed, d: usize) -> FieldVector {
    SeedStream::new(seed).expand(field, d, &mut Meter::new())
}
