//! Round transcripts: every envelope sent in a round, plus enough context
//! (configuration, dropout plan, seeds, outcome) to verify it offline.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! magic "LSATRN01"
//! header   protocol u8 | pipeline u8 | N T D U d u32 | q u64 | weights
//!          | rate f64 | victims | master u64 | round u64 | graph degree u32
//! records  count u32, then per record:
//!          phase u8 | sender u32 | receiver u32 | seq u64 | ts_us u64 | len u32 | envelope
//! outcome  present u8 | U1 ids | U2 ids | aggregate | failure
//! ```
//!
//! The canonical form used for determinism checks sorts records by
//! `(phase, sender, seq)` and omits timestamps and `U2`, which depend on
//! thread scheduling.

use std::path::Path;

use lightsecagg_core::wire::{Envelope, Message, Phase};
use lightsecagg_core::{FieldVector, PrimeField, ProtocolConfig};

use crate::error::{LabError, LabResult};
use crate::harness::{Pipeline, Protocol};

const MAGIC: &[u8; 8] = b"LSATRN01";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub phase: Phase,
    pub sender: u32,
    pub receiver: u32,
    pub seq: u64,
    pub ts_us: u64,
    /// The encoded envelope, header included.
    pub bytes: Vec<u8>,
}

impl Record {
    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn envelope(&self) -> LabResult<Envelope> {
        Ok(Envelope::decode(&self.bytes)?)
    }

    pub fn message(&self, field: &PrimeField) -> LabResult<Message> {
        Ok(self.envelope()?.message(field)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptHeader {
    pub protocol: Protocol,
    pub pipeline: Pipeline,
    pub config: ProtocolConfig,
    pub rate: f64,
    pub victims: Vec<u32>,
    pub master_seed: u64,
    pub round: u64,
    /// Assortment-graph degree for the sparse baseline, zero otherwise.
    pub graph_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub survivors: Vec<u32>,
    pub decode_set: Vec<u32>,
    pub aggregate: Option<FieldVector>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTranscript {
    pub header: TranscriptHeader,
    pub records: Vec<Record>,
    pub outcome: Option<Outcome>,
}

impl RoundTranscript {
    pub fn new(header: TranscriptHeader, mut records: Vec<Record>) -> Self {
        records.sort_by_key(|r| (r.ts_us, r.sender, r.seq));
        Self { header, records, outcome: None }
    }

    pub fn field(&self) -> LabResult<PrimeField> {
        Ok(PrimeField::new(self.header.config.modulus)?)
    }

    pub fn total_bytes(&self) -> u64 {
        self.records.iter().map(|r| r.size() as u64).sum()
    }

    pub fn bytes_sent_by(&self, party: u32, phase: Phase) -> u64 {
        self.records.iter().filter(|r| r.sender == party && r.phase == phase).map(|r| r.size() as u64).sum()
    }

    pub fn bytes_received_by(&self, party: u32, phase: Phase) -> u64 {
        self.records.iter().filter(|r| r.receiver == party && r.phase == phase).map(|r| r.size() as u64).sum()
    }

    fn sorted_canonical(&self) -> Vec<&Record> {
        let mut v: Vec<&Record> = self.records.iter().collect();
        v.sort_by_key(|r| (r.phase, r.sender, r.seq));
        v
    }

    /// Schedule-independent encoding; equal for two runs of the same round.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        write_header(&mut w, &self.header);
        let recs = self.sorted_canonical();
        w.u32(recs.len() as u32);
        for r in recs {
            w.u8(r.phase as u8);
            w.u32(r.sender);
            w.u32(r.receiver);
            w.u64(r.seq);
            w.u32(r.bytes.len() as u32);
            w.bytes(&r.bytes);
        }
        match &self.outcome {
            None => w.u8(0),
            Some(o) => {
                w.u8(1);
                w.ids(&o.survivors);
                write_opt_vec(&mut w, &o.aggregate);
                write_opt_str(&mut w, &o.failure);
            }
        }
        w.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        write_header(&mut w, &self.header);
        w.u32(self.records.len() as u32);
        for r in &self.records {
            w.u8(r.phase as u8);
            w.u32(r.sender);
            w.u32(r.receiver);
            w.u64(r.seq);
            w.u64(r.ts_us);
            w.u32(r.bytes.len() as u32);
            w.bytes(&r.bytes);
        }
        match &self.outcome {
            None => w.u8(0),
            Some(o) => {
                w.u8(1);
                w.ids(&o.survivors);
                w.ids(&o.decode_set);
                write_opt_vec(&mut w, &o.aggregate);
                write_opt_str(&mut w, &o.failure);
            }
        }
        w.0
    }

    pub fn from_bytes(b: &[u8]) -> LabResult<Self> {
        let mut r = Reader { b, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(LabError::Transcript("bad magic".into()));
        }
        let header = read_header(&mut r)?;
        let field = PrimeField::new(header.config.modulus)?;
        let n = r.u32()? as usize;
        let mut records = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let phase = Phase::from_u8(r.u8()?)?;
            let sender = r.u32()?;
            let receiver = r.u32()?;
            let seq = r.u64()?;
            let ts_us = r.u64()?;
            let len = r.u32()? as usize;
            let bytes = r.take(len)?.to_vec();
            records.push(Record { phase, sender, receiver, seq, ts_us, bytes });
        }
        let outcome = match r.u8()? {
            0 => None,
            1 => Some(Outcome {
                survivors: r.ids()?,
                decode_set: r.ids()?,
                aggregate: read_opt_vec(&mut r, &field)?,
                failure: read_opt_str(&mut r)?,
            }),
            _ => return Err(LabError::Transcript("bad outcome flag".into())),
        };
        if r.pos != b.len() {
            return Err(LabError::Transcript("trailing bytes".into()));
        }
        Ok(Self { header, records, outcome })
    }

    pub fn write_to(&self, path: &Path) -> LabResult<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> LabResult<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn write_header(w: &mut Writer, h: &TranscriptHeader) {
    w.u8(h.protocol.code());
    w.u8(h.pipeline.code());
    let c = &h.config;
    for v in [c.users, c.privacy, c.dropout, c.target, c.model_len] {
        w.u32(v as u32);
    }
    w.u64(c.modulus);
    match &c.weights {
        None => w.u8(0),
        Some(ws) => {
            w.u8(1);
            w.u32(ws.len() as u32);
            for &x in ws {
                w.u64(x);
            }
        }
    }
    w.u64(h.rate.to_bits());
    w.ids(&h.victims);
    w.u64(h.master_seed);
    w.u64(h.round);
    w.u32(h.graph_degree as u32);
}

fn read_header(r: &mut Reader) -> LabResult<TranscriptHeader> {
    let protocol = Protocol::from_code(r.u8()?).ok_or_else(|| LabError::Transcript("unknown protocol".into()))?;
    let pipeline = Pipeline::from_code(r.u8()?).ok_or_else(|| LabError::Transcript("unknown pipeline".into()))?;
    let mut v = [0usize; 5];
    for x in v.iter_mut() {
        *x = r.u32()? as usize;
    }
    let modulus = r.u64()?;
    let weights = match r.u8()? {
        0 => None,
        _ => {
            let n = r.u32()? as usize;
            Some((0..n).map(|_| r.u64()).collect::<LabResult<Vec<_>>>()?)
        }
    };
    let config = ProtocolConfig {
        users: v[0],
        privacy: v[1],
        dropout: v[2],
        target: v[3],
        model_len: v[4],
        modulus,
        weights,
    };
    Ok(TranscriptHeader {
        protocol,
        pipeline,
        config,
        rate: f64::from_bits(r.u64()?),
        victims: r.ids()?,
        master_seed: r.u64()?,
        round: r.u64()?,
        graph_degree: r.u32()? as usize,
    })
}

fn write_opt_vec(w: &mut Writer, v: &Option<FieldVector>) {
    match v {
        None => w.u8(0),
        Some(v) => {
            w.u8(1);
            w.u32(v.len() as u32);
            w.bytes(&v.to_le_bytes());
        }
    }
}

fn read_opt_vec(r: &mut Reader, field: &PrimeField) -> LabResult<Option<FieldVector>> {
    match r.u8()? {
        0 => Ok(None),
        _ => {
            let n = r.u32()? as usize;
            let bytes = r.take(n * 4)?;
            Ok(Some(FieldVector::from_le_bytes(field, bytes)?))
        }
    }
}

fn write_opt_str(w: &mut Writer, s: &Option<String>) {
    match s {
        None => w.u8(0),
        Some(s) => {
            w.u8(1);
            w.u32(s.len() as u32);
            w.bytes(s.as_bytes());
        }
    }
}

fn read_opt_str(r: &mut Reader) -> LabResult<Option<String>> {
    match r.u8()? {
        0 => Ok(None),
        _ => {
            let n = r.u32()? as usize;
            let s = std::str::from_utf8(r.take(n)?).map_err(|e| LabError::Transcript(e.to_string()))?;
            Ok(Some(s.to_string()))
        }
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn ids(&mut self, ids: &[u32]) {
        self.u32(ids.len() as u32);
        for &i in ids {
            self.u32(i);
        }
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> LabResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.b.len());
        let end = end.ok_or_else(|| LabError::Transcript("truncated".into()))?;
        let s = &self.b[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> LabResult<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> LabResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> LabResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn ids(&mut self) -> LabResult<Vec<u32>> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.u32()).collect()
    }
}
