//! Pairwise-masking secure aggregation, on the complete graph (SecAgg) or a
//! sparse assortment graph (SecAgg+).
//!
//! User `i` uploads
//! `x_i + PRG(b_i) + sum_{j > i} PRG(a_{i,j}) - sum_{j < i} PRG(a_{j,i})`
//! over its neighbours `j`. Both `b_i` and the key-agreement secret `sk_i`
//! are Shamir shared among the neighbours and `i` itself. At recovery the
//! server asks the survivors for `b`-shares of survivors and `sk`-shares of
//! dropped users, never both for the same owner.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::graph::AssortmentGraph;
use super::keyagree::{pairwise_seed, DhGroup, KeyPair};
use crate::coding::shamir::{self, bytes_to_limbs, limbs_to_bytes};
use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldVector, Meter, PrimeField};
use crate::stream::{Seed, SeedStream};
use crate::wire::Message;

/// Graph and sharing degree shared by every party of one round.
#[derive(Debug, Clone)]
pub struct PairwiseParams {
    pub graph: Arc<AssortmentGraph>,
    /// Degree of the sharing polynomials; reconstruction needs one more share.
    pub share_degree: usize,
    pub group: DhGroup,
}

impl PairwiseParams {
    /// SecAgg: the complete graph with degree-`T` sharing.
    pub fn secagg(cfg: &ProtocolConfig) -> Self {
        Self { graph: Arc::new(AssortmentGraph::complete(cfg.users)), share_degree: cfg.privacy, group: DhGroup::default() }
    }

    /// SecAgg+: a Harary graph of the given degree with local threshold `ceil(k/2)`.
    pub fn secagg_plus(cfg: &ProtocolConfig, degree: usize) -> Result<Self> {
        let graph = AssortmentGraph::harary(cfg.users, degree)?;
        let share_degree = super::graph::local_threshold(graph.degree());
        Ok(Self { graph: Arc::new(graph), share_degree, group: DhGroup::default() })
    }

    /// Holders of user `i`'s shares: its neighbours and itself, ascending.
    pub fn holders(&self, user: u32) -> Vec<u32> {
        let mut h: Vec<u32> = self.graph.neighbours(user).to_vec();
        h.push(user);
        h.sort_unstable();
        h
    }

    pub fn threshold(&self) -> usize {
        self.share_degree + 1
    }
}

/// Per-user randomness.
#[derive(Debug, Clone, Copy)]
pub struct UserSeeds {
    /// The private seed `b_i`.
    pub private: Seed,
    pub key: Seed,
    pub sharing: Seed,
}

const SEED_BYTES: usize = 32;
const KEY_BYTES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairwisePhase {
    KeyExchange,
    Sharing,
    Masking,
    Recovery,
    Done,
}

#[derive(Debug, Clone)]
pub struct SecAggUser {
    id: u32,
    cfg: ProtocolConfig,
    field: PrimeField,
    params: PairwiseParams,
    seeds: UserSeeds,
    keys: KeyPair,
    pairwise: BTreeMap<u32, Seed>,
    held: BTreeMap<u32, (FieldVector, FieldVector)>,
    phase: PairwisePhase,
    pub meter: Meter,
}

impl SecAggUser {
    pub fn new(cfg: &ProtocolConfig, id: u32, params: PairwiseParams, seeds: UserSeeds) -> Result<Self> {
        if id == 0 || id as usize > cfg.users {
            return Err(Error::UnknownUser(id));
        }
        let field = cfg.field()?;
        let keys = params.group.keypair(&mut SeedStream::new(seeds.key));
        Ok(Self {
            id,
            cfg: cfg.clone(),
            field,
            params,
            seeds,
            keys,
            pairwise: BTreeMap::new(),
            held: BTreeMap::new(),
            phase: PairwisePhase::KeyExchange,
            meter: Meter::new(),
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn phase(&self) -> PairwisePhase {
        self.phase
    }

    pub fn private_seed(&self) -> Seed {
        self.seeds.private
    }

    pub fn public_key(&self) -> Message {
        Message::PublicKey(self.keys.pk)
    }

    /// The pairwise seed map, keyed by neighbour.
    pub fn pairwise_seeds(&self) -> &BTreeMap<u32, Seed> {
        &self.pairwise
    }

    fn expect(&self, phase: PairwisePhase) -> Result<()> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(Error::WrongPhase { phase: phase_name(self.phase) })
        }
    }

    /// Agrees on `a_{i,j}` with every neighbour and returns one
    /// `SeedShares` message per neighbour.
    pub fn receive_public_keys(&mut self, keys: &[(u32, u64)]) -> Result<Vec<(u32, Message)>> {
        self.expect(PairwisePhase::KeyExchange)?;
        for &j in self.params.graph.neighbours(self.id) {
            let pk = keys.iter().find(|(id, _)| *id == j).map(|(_, pk)| *pk).ok_or(Error::MissingShare { from: j })?;
            let shared = self.params.group.agree(self.keys.sk, pk);
            self.pairwise.insert(j, pairwise_seed(shared, self.id, j));
        }
        let holders = self.params.holders(self.id);
        let mut rng = SeedStream::new(self.seeds.sharing);
        let seed_secret = bytes_to_limbs(&self.field, &self.seeds.private.0);
        let key_secret = bytes_to_limbs(&self.field, &self.keys.sk.to_le_bytes());
        let d = self.params.share_degree;
        let seed_shares = shamir::shamir_share(&self.field, &seed_secret, &holders, d, &mut rng, &mut self.meter)?;
        let key_shares = shamir::shamir_share(&self.field, &key_secret, &holders, d, &mut rng, &mut self.meter)?;
        let mut out = Vec::with_capacity(holders.len() - 1);
        for ((h, s), (_, k)) in seed_shares.shares.into_iter().zip(key_shares.shares) {
            if h == self.id {
                self.held.insert(self.id, (s, k));
            } else {
                out.push((h, Message::SeedShares { owner: self.id, seed_share: s, key_share: k }));
            }
        }
        self.phase = PairwisePhase::Sharing;
        self.maybe_finish_sharing();
        Ok(out)
    }

    pub fn receive_seed_shares(&mut self, owner: u32, seed_share: FieldVector, key_share: FieldVector) -> Result<()> {
        self.expect(PairwisePhase::Sharing)?;
        if !self.params.graph.adjacent(self.id, owner) {
            return Err(Error::UnknownUser(owner));
        }
        if self.held.contains_key(&owner) {
            return Err(Error::DuplicateShare { from: owner });
        }
        self.held.insert(owner, (seed_share, key_share));
        self.maybe_finish_sharing();
        Ok(())
    }

    fn maybe_finish_sharing(&mut self) {
        if self.held.len() == self.params.graph.deg(self.id) + 1 {
            self.phase = PairwisePhase::Masking;
        }
    }

    pub fn missing_shares(&self) -> Vec<u32> {
        self.params.holders(self.id).into_iter().filter(|h| !self.held.contains_key(h)).collect()
    }

    /// The masked upload.
    pub fn mask_model(&mut self, x: &FieldVector) -> Result<Message> {
        self.expect(PairwisePhase::Masking)?;
        let d = self.cfg.model_len;
        if x.len() != d {
            return Err(Error::ShapeMismatch { expected: d, got: x.len() });
        }
        let mut out = x.clone();
        let own = SeedStream::new(self.seeds.private).expand(&self.field, d, &mut self.meter);
        self.field.add_assign(&mut out, &own, &mut self.meter)?;
        for (&j, &seed) in &self.pairwise {
            let p = SeedStream::new(seed).expand(&self.field, d, &mut self.meter);
            if j > self.id {
                self.field.add_assign(&mut out, &p, &mut self.meter)?;
            } else {
                self.field.sub_assign(&mut out, &p, &mut self.meter)?;
            }
        }
        self.phase = PairwisePhase::Recovery;
        Ok(Message::MaskedModel(out))
    }

    /// Reveals `b`-shares of listed survivors and `sk`-shares of listed
    /// dropped users, for the owners this user holds shares of.
    pub fn unmask(&mut self, survivors: &[u32], dropped: &[u32]) -> Result<Message> {
        self.expect(PairwisePhase::Recovery)?;
        if let Some(&o) = survivors.iter().find(|o| dropped.contains(o)) {
            return Err(Error::ShareConflict { owner: o });
        }
        let mut seed_shares = Vec::new();
        let mut key_shares = Vec::new();
        for (&owner, (s, k)) in &self.held {
            if survivors.contains(&owner) {
                seed_shares.push((owner, s.clone()));
            } else if dropped.contains(&owner) {
                key_shares.push((owner, k.clone()));
            }
        }
        self.phase = PairwisePhase::Done;
        Ok(Message::UnmaskResponse { seed_shares, key_shares })
    }

    /// Field elements stored after the offline phase: held shares.
    pub fn storage_elements(&self) -> usize {
        self.held.values().map(|(s, k)| s.len() + k.len()).sum()
    }
}

fn phase_name(p: PairwisePhase) -> &'static str {
    match p {
        PairwisePhase::KeyExchange => "key-exchange",
        PairwisePhase::Sharing => "sharing",
        PairwisePhase::Masking => "masking",
        PairwisePhase::Recovery => "recovery",
        PairwisePhase::Done => "done",
    }
}

#[derive(Debug, Clone)]
pub struct SecAggServer {
    cfg: ProtocolConfig,
    field: PrimeField,
    params: PairwiseParams,
    public_keys: BTreeMap<u32, u64>,
    masked: BTreeMap<u32, FieldVector>,
    survivors: Vec<u32>,
    dropped: Vec<u32>,
    masked_sum: Option<FieldVector>,
    seed_shares: BTreeMap<u32, Vec<(u32, FieldVector)>>,
    key_shares: BTreeMap<u32, Vec<(u32, FieldVector)>>,
    responders: Vec<u32>,
    pub meter: Meter,
}

impl SecAggServer {
    pub fn new(cfg: &ProtocolConfig, params: PairwiseParams) -> Result<Self> {
        Ok(Self {
            cfg: cfg.clone(),
            field: cfg.field()?,
            params,
            public_keys: BTreeMap::new(),
            masked: BTreeMap::new(),
            survivors: Vec::new(),
            dropped: Vec::new(),
            masked_sum: None,
            seed_shares: BTreeMap::new(),
            key_shares: BTreeMap::new(),
            responders: Vec::new(),
            meter: Meter::new(),
        })
    }

    pub fn params(&self) -> &PairwiseParams {
        &self.params
    }

    pub fn receive_public_key(&mut self, from: u32, pk: u64) -> Result<()> {
        if from == 0 || from as usize > self.cfg.users {
            return Err(Error::UnknownUser(from));
        }
        if self.public_keys.insert(from, pk).is_some() {
            return Err(Error::DuplicateShare { from });
        }
        Ok(())
    }

    pub fn keys_complete(&self) -> bool {
        self.public_keys.len() == self.cfg.users
    }

    /// The neighbour keys of `user`.
    pub fn public_key_list(&self, user: u32) -> Message {
        Message::PublicKeyList(
            self.params
                .graph
                .neighbours(user)
                .iter()
                .filter_map(|j| self.public_keys.get(j).map(|pk| (*j, *pk)))
                .collect(),
        )
    }

    pub fn receive_masked_model(&mut self, from: u32, model: FieldVector) -> Result<()> {
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

    /// Fixes the surviving set, sums its uploads and returns the unmask request.
    pub fn close_upload(&mut self, survivors: &[u32]) -> Result<Message> {
        let mut u1 = survivors.to_vec();
        u1.sort_unstable();
        u1.dedup();
        let mut sum = self.field.zeros(self.cfg.model_len);
        for id in &u1 {
            let m = self.masked.get(id).ok_or(Error::MissingShare { from: *id })?;
            self.field.add_assign(&mut sum, m, &mut self.meter)?;
        }
        self.dropped = (1..=self.cfg.users as u32).filter(|i| !u1.contains(i)).collect();
        self.survivors = u1;
        self.masked_sum = Some(sum);
        Ok(Message::UnmaskRequest { survivors: self.survivors.clone(), dropped: self.dropped.clone() })
    }

    pub fn survivors(&self) -> &[u32] {
        &self.survivors
    }

    pub fn dropped(&self) -> &[u32] {
        &self.dropped
    }

    pub fn receive_unmask_response(
        &mut self,
        from: u32,
        seed_shares: Vec<(u32, FieldVector)>,
        key_shares: Vec<(u32, FieldVector)>,
    ) -> Result<()> {
        if self.responders.contains(&from) {
            return Err(Error::DuplicateShare { from });
        }
        for (owner, _) in &seed_shares {
            if self.key_shares.contains_key(owner) || key_shares.iter().any(|(o, _)| o == owner) {
                return Err(Error::ShareConflict { owner: *owner });
            }
        }
        for (owner, _) in &key_shares {
            if self.seed_shares.contains_key(owner) {
                return Err(Error::ShareConflict { owner: *owner });
            }
        }
        self.responders.push(from);
        for (owner, s) in seed_shares {
            self.seed_shares.entry(owner).or_default().push((from, s));
        }
        for (owner, k) in key_shares {
            self.key_shares.entry(owner).or_default().push((from, k));
        }
        Ok(())
    }

    pub fn responders(&self) -> &[u32] {
        &self.responders
    }

    /// Applies the recovery equation: strips every surviving `PRG(b_i)` and,
    /// for every dropped user `j`, every pairwise stream `PRG(a_{i,j})` with
    /// its neighbours. Streams between two dropped users appear twice with
    /// opposite signs and cancel.
    pub fn recover(&mut self) -> Result<FieldVector> {
        let f = self.field;
        let d = self.cfg.model_len;
        let threshold = self.params.threshold();
        let mut out = self.masked_sum.clone().ok_or(Error::WrongPhase { phase: "upload" })?;
        let mut weights: BTreeMap<Vec<u32>, Vec<FieldElement>> = BTreeMap::new();

        for &i in &self.survivors.clone() {
            let limbs = self.reconstruct(i, false, threshold, &mut weights)?;
            let bytes = limbs_to_bytes(&f, &limbs, SEED_BYTES)?;
            let mut b = [0u8; SEED_BYTES];
            b.copy_from_slice(&bytes);
            let mask = SeedStream::new(Seed(b)).expand(&f, d, &mut self.meter);
            f.sub_assign(&mut out, &mask, &mut self.meter)?;
        }

        for &j in &self.dropped.clone() {
            let nbrs = self.params.graph.neighbours(j).to_vec();
            if !nbrs.iter().any(|i| self.survivors.contains(i)) {
                continue;
            }
            let limbs = self.reconstruct(j, true, threshold, &mut weights)?;
            let bytes = limbs_to_bytes(&f, &limbs, KEY_BYTES)?;
            let mut k = [0u8; KEY_BYTES];
            k.copy_from_slice(&bytes);
            let sk = u64::from_le_bytes(k);
            for i in nbrs {
                let pk = *self.public_keys.get(&i).ok_or(Error::MissingShare { from: i })?;
                let seed = pairwise_seed(self.params.group.agree(sk, pk), i, j);
                let p = SeedStream::new(seed).expand(&f, d, &mut self.meter);
                // user i added PRG(a_ij) when j > i, subtracted it otherwise
                if j > i {
                    f.sub_assign(&mut out, &p, &mut self.meter)?;
                } else {
                    f.add_assign(&mut out, &p, &mut self.meter)?;
                }
            }
        }
        Ok(out)
    }

    fn reconstruct(
        &mut self,
        owner: u32,
        key: bool,
        threshold: usize,
        cache: &mut BTreeMap<Vec<u32>, Vec<FieldElement>>,
    ) -> Result<FieldVector> {
        let pool = if key { &self.key_shares } else { &self.seed_shares };
        let shares = pool.get(&owner).map(|v| v.as_slice()).unwrap_or(&[]);
        if shares.len() < threshold {
            return Err(Error::InsufficientShares { needed: threshold, got: shares.len() });
        }
        let used = &shares[..threshold];
        let holders: Vec<u32> = used.iter().map(|(h, _)| *h).collect();
        if !cache.contains_key(&holders) {
            let w = shamir::zero_weights(&self.field, &holders, &mut self.meter)?;
            cache.insert(holders.clone(), w);
        }
        let refs: Vec<&FieldVector> = used.iter().map(|(_, s)| s).collect();
        shamir::combine(&self.field, &cache[&holders], &refs, &mut self.meter)
    }
}
