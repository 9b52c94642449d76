//! The message envelope shared by every protocol.
//!
//! An envelope is a 17-byte header `round (u64) | phase (u8) | sender (u32)
//! | receiver (u32)`, little-endian, followed by the payload. Party `0` is
//! the server; users are `1..=N`.

use alloc::vec::Vec;

use crate::coding::EncodedMaskShare;
use crate::error::{Error, Result};
use crate::field::{FieldVector, PrimeField};

pub const SERVER: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Offline = 0,
    Upload = 1,
    Recovery = 2,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Offline, Phase::Upload, Phase::Recovery];

    pub fn from_u8(v: u8) -> Result<Phase> {
        match v {
            0 => Ok(Phase::Offline),
            1 => Ok(Phase::Upload),
            2 => Ok(Phase::Recovery),
            _ => Err(Error::Malformed("unknown phase tag")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Offline => "offline",
            Phase::Upload => "upload",
            Phase::Recovery => "recovery",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub round: u64,
    pub phase: Phase,
    pub sender: u32,
    pub receiver: u32,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub const HEADER_LEN: usize = 17;

    pub fn new(round: u64, phase: Phase, sender: u32, receiver: u32, msg: &Message) -> Self {
        Self { round, phase, sender, receiver, payload: msg.encode() }
    }

    /// Header plus payload length in bytes.
    pub fn wire_len(&self) -> usize {
        Self::HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.phase as u8);
        out.extend_from_slice(&self.sender.to_le_bytes());
        out.extend_from_slice(&self.receiver.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self> {
        if b.len() < Self::HEADER_LEN {
            return Err(Error::Malformed("envelope header truncated"));
        }
        let mut r = Reader::new(b);
        let round = r.u64()?;
        let phase = Phase::from_u8(r.u8()?)?;
        let sender = r.u32()?;
        let receiver = r.u32()?;
        Ok(Self { round, phase, sender, receiver, payload: b[Self::HEADER_LEN..].to_vec() })
    }

    pub fn message(&self, field: &PrimeField) -> Result<Message> {
        Message::decode(field, &self.payload)
    }
}

/// Protocol messages. Tags `1..=4` are LightSecAgg, `10..=14` the pairwise
/// baselines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    EncodedShare(EncodedMaskShare),
    MaskedModel(FieldVector),
    /// The server's announcement of the surviving set `U1`.
    SurvivorSet(Vec<u32>),
    AggregatedShare(FieldVector),
    PublicKey(u64),
    PublicKeyList(Vec<(u32, u64)>),
    /// Shares of the sender's private seed `b` and secret key `sk` for one holder.
    SeedShares { owner: u32, seed_share: FieldVector, key_share: FieldVector },
    UnmaskRequest { survivors: Vec<u32>, dropped: Vec<u32> },
    /// Per owner: `(owner, share)`; seed shares for survivors, key shares for dropped users.
    UnmaskResponse { seed_shares: Vec<(u32, FieldVector)>, key_shares: Vec<(u32, FieldVector)> },
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::EncodedShare(_) => 1,
            Message::MaskedModel(_) => 2,
            Message::SurvivorSet(_) => 3,
            Message::AggregatedShare(_) => 4,
            Message::PublicKey(_) => 10,
            Message::PublicKeyList(_) => 11,
            Message::SeedShares { .. } => 12,
            Message::UnmaskRequest { .. } => 13,
            Message::UnmaskResponse { .. } => 14,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::EncodedShare(_) => "encoded_share",
            Message::MaskedModel(_) => "masked_model",
            Message::SurvivorSet(_) => "survivor_set",
            Message::AggregatedShare(_) => "aggregated_share",
            Message::PublicKey(_) => "public_key",
            Message::PublicKeyList(_) => "public_key_list",
            Message::SeedShares { .. } => "seed_shares",
            Message::UnmaskRequest { .. } => "unmask_request",
            Message::UnmaskResponse { .. } => "unmask_response",
        }
    }

    /// Field elements carried by this message (ids and keys excluded).
    pub fn field_elements(&self) -> usize {
        match self {
            Message::EncodedShare(s) => s.payload.len(),
            Message::MaskedModel(v) | Message::AggregatedShare(v) => v.len(),
            Message::SeedShares { seed_share, key_share, .. } => seed_share.len() + key_share.len(),
            Message::UnmaskResponse { seed_shares, key_shares } => {
                seed_shares.iter().chain(key_shares).map(|(_, v)| v.len()).sum()
            }
            _ => 0,
        }
    }

    /// Every field vector in the payload, for transcript scanning.
    pub fn vectors(&self) -> Vec<&FieldVector> {
        match self {
            Message::EncodedShare(s) => alloc::vec![&s.payload],
            Message::MaskedModel(v) | Message::AggregatedShare(v) => alloc::vec![v],
            Message::SeedShares { seed_share, key_share, .. } => alloc::vec![seed_share, key_share],
            Message::UnmaskResponse { seed_shares, key_shares } => {
                seed_shares.iter().chain(key_shares).map(|(_, v)| v).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.push(self.tag());
        match self {
            Message::EncodedShare(s) => w.extend_from_slice(&s.to_bytes()),
            Message::MaskedModel(v) | Message::AggregatedShare(v) => put_vec(&mut w, v),
            Message::SurvivorSet(ids) => put_ids(&mut w, ids),
            Message::PublicKey(k) => w.extend_from_slice(&k.to_le_bytes()),
            Message::PublicKeyList(keys) => {
                w.extend_from_slice(&(keys.len() as u32).to_le_bytes());
                for (id, k) in keys {
                    w.extend_from_slice(&id.to_le_bytes());
                    w.extend_from_slice(&k.to_le_bytes());
                }
            }
            Message::SeedShares { owner, seed_share, key_share } => {
                w.extend_from_slice(&owner.to_le_bytes());
                put_vec(&mut w, seed_share);
                put_vec(&mut w, key_share);
            }
            Message::UnmaskRequest { survivors, dropped } => {
                put_ids(&mut w, survivors);
                put_ids(&mut w, dropped);
            }
            Message::UnmaskResponse { seed_shares, key_shares } => {
                for list in [seed_shares, key_shares] {
                    w.extend_from_slice(&(list.len() as u32).to_le_bytes());
                    for (id, v) in list {
                        w.extend_from_slice(&id.to_le_bytes());
                        put_vec(&mut w, v);
                    }
                }
            }
        }
        w
    }

    pub fn decode(field: &PrimeField, b: &[u8]) -> Result<Message> {
        let mut r = Reader::new(b);
        let tag = r.u8()?;
        let msg = match tag {
            1 => Message::EncodedShare(EncodedMaskShare::from_bytes(field, r.rest())?),
            2 => Message::MaskedModel(r.vec(field)?),
            3 => Message::SurvivorSet(r.ids()?),
            4 => Message::AggregatedShare(r.vec(field)?),
            10 => Message::PublicKey(r.u64()?),
            11 => {
                let n = r.u32()? as usize;
                let mut keys = Vec::with_capacity(n.min(1 << 16));
                for _ in 0..n {
                    keys.push((r.u32()?, r.u64()?));
                }
                Message::PublicKeyList(keys)
            }
            12 => Message::SeedShares { owner: r.u32()?, seed_share: r.vec(field)?, key_share: r.vec(field)? },
            13 => Message::UnmaskRequest { survivors: r.ids()?, dropped: r.ids()? },
            14 => {
                let mut lists = [Vec::new(), Vec::new()];
                for list in lists.iter_mut() {
                    let n = r.u32()? as usize;
                    for _ in 0..n {
                        list.push((r.u32()?, r.vec(field)?));
                    }
                }
                let [seed_shares, key_shares] = lists;
                Message::UnmaskResponse { seed_shares, key_shares }
            }
            _ => return Err(Error::Malformed("unknown message tag")),
        };
        if tag != 1 && !r.rest().is_empty() {
            return Err(Error::Malformed("trailing bytes"));
        }
        Ok(msg)
    }
}

fn put_vec(w: &mut Vec<u8>, v: &FieldVector) {
    w.extend_from_slice(&(v.len() as u32).to_le_bytes());
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_ids(w: &mut Vec<u8>, ids: &[u32]) {
    w.extend_from_slice(&(ids.len() as u32).to_le_bytes());
    for id in ids {
        w.extend_from_slice(&id.to_le_bytes());
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(b: &'a [u8]) -> Self {
        Self { b, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.b.len()).ok_or(Error::Malformed("truncated"))?;
        let s = &self.b[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let s = self.take(4)?;
        Ok(u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut a = [0u8; 8];
        a.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(a))
    }

    fn vec(&mut self, field: &PrimeField) -> Result<FieldVector> {
        let n = self.u32()? as usize;
        let bytes = self.take(n.checked_mul(4).ok_or(Error::Malformed("length overflow"))?)?;
        FieldVector::from_le_bytes(field, bytes)
    }

    fn ids(&mut self) -> Result<Vec<u32>> {
        let n = self.u32()? as usize;
        let bytes = self.take(n.checked_mul(4).ok_or(Error::Malformed("length overflow"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }

    fn rest(&mut self) -> &'a [u8] {
        let s = &self.b[self.pos..];
        self.pos = self.b.len();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples(f: &PrimeField) -> Vec<Message> {
        alloc::vec![
            Message::EncodedShare(EncodedMaskShare { origin: 1, holder: 2, round: 3, payload: f.vector([4, 5]) }),
            Message::MaskedModel(f.vector([1, 2, 3])),
            Message::SurvivorSet(alloc::vec![2, 3]),
            Message::AggregatedShare(f.vector([])),
            Message::PublicKey(u64::MAX),
            Message::PublicKeyList(alloc::vec![(1, 5), (2, 6)]),
            Message::SeedShares { owner: 4, seed_share: f.vector([7]), key_share: f.vector([8, 9]) },
            Message::UnmaskRequest { survivors: alloc::vec![1, 2], dropped: alloc::vec![3] },
            Message::UnmaskResponse {
                seed_shares: alloc::vec![(1, f.vector([1]))],
                key_shares: alloc::vec![(3, f.vector([2, 2]))],
            },
        ]
    }

    #[test]
    fn every_message_roundtrips() {
        let f = PrimeField::mersenne31();
        for m in samples(&f) {
            let env = Envelope::new(9, Phase::Recovery, 0, 4, &m);
            let back = Envelope::decode(&env.encode()).unwrap();
            assert_eq!(back, env);
            assert_eq!(back.message(&f).unwrap(), m);
            assert_eq!(env.encode().len(), env.wire_len());
        }
    }

    #[test]
    fn rejects_garbage() {
        let f = PrimeField::mersenne31();
        assert!(Message::decode(&f, &[]).is_err());
        assert!(Message::decode(&f, &[99]).is_err());
        assert!(Message::decode(&f, &[2, 5, 0, 0, 0]).is_err());
        let mut ok = Message::MaskedModel(f.vector([1])).encode();
        ok.push(0);
        assert!(Message::decode(&f, &ok).is_err());
        assert!(Envelope::decode(&[0; 16]).is_err());
        let mut env = Envelope::new(0, Phase::Upload, 1, 0, &Message::PublicKey(1)).encode();
        env[8] = 7;
        assert!(Envelope::decode(&env).is_err());
    }

    #[test]
    fn element_counts() {
        let f = PrimeField::mersenne31();
        let counts: Vec<usize> = samples(&f).iter().map(|m| m.field_elements()).collect();
        assert_eq!(counts, [2, 3, 0, 0, 0, 0, 3, 0, 3]);
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let f = PrimeField::mersenne31();
            let _ = Message::decode(&f, &bytes);
            let _ = Envelope::decode(&bytes);
        }
    }
}
