//! Offline transcript checks.
//!
//! A transcript passes when the recorded aggregate is the exact weighted
//! sum over the surviving users, no regenerable raw mask appears in any
//! payload, and the LightSecAgg recovery traffic has the expected shape:
//! one message of `ceil(d / (U - T))` elements per survivor, and `U` such
//! messages consumed by the decoder.

use std::fmt;

use lightsecagg_core::lightsecagg::regenerate_mask;
use lightsecagg_core::stream::SeedStream;
use lightsecagg_core::wire::{Message, Phase, SERVER};
use lightsecagg_core::{FieldVector, Meter, ProtocolConfig};

use crate::dropout::DropoutPlan;
use crate::harness::Protocol;
use crate::local::expected_sum;
use crate::seeds::RoundSeeds;
use crate::transcript::RoundTranscript;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    HeaderMismatch(&'static str),
    MissingOutcome,
    Malformed { index: usize, reason: String },
    SurvivorMismatch { expected: Vec<u32>, got: Vec<u32> },
    Unrecovered(String),
    AggregateMismatch,
    MaskLeak { index: usize, sender: u32, receiver: u32, owner: u32 },
    RecoveryMessageCount { user: u32, expected: usize, got: usize },
    RecoveryMessageSize { user: u32, expected: usize, got: usize },
    ServerIntake { expected: usize, got: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::HeaderMismatch(what) => write!(f, "HeaderMismatch: {what} differs from the expected round"),
            Violation::MissingOutcome => write!(f, "MissingOutcome: transcript has no recorded outcome"),
            Violation::Malformed { index, reason } => write!(f, "Malformed: record {index}: {reason}"),
            Violation::SurvivorMismatch { expected, got } => {
                write!(f, "SurvivorMismatch: expected U1 {expected:?}, recorded {got:?}")
            }
            Violation::Unrecovered(e) => write!(f, "Unrecovered: {e}"),
            Violation::AggregateMismatch => write!(f, "AggregateMismatch: recorded aggregate is not the survivor sum"),
            Violation::MaskLeak { index, sender, receiver, owner } => {
                write!(f, "MaskLeak: record {index} ({sender} -> {receiver}) carries the raw mask of user {owner}")
            }
            Violation::RecoveryMessageCount { user, expected, got } => {
                write!(f, "RecoveryMessageCount: user {user} sent {got} recovery messages, expected {expected}")
            }
            Violation::RecoveryMessageSize { user, expected, got } => {
                write!(f, "RecoveryMessageSize: user {user} sent {got} elements, expected {expected}")
            }
            Violation::ServerIntake { expected, got } => {
                write!(f, "ServerIntake: decoder consumed {got} elements, expected {expected}")
            }
        }
    }
}

/// Checks `t` against an externally supplied configuration and plan.
pub fn verify_round(t: &RoundTranscript, cfg: &ProtocolConfig, plan: &DropoutPlan) -> Vec<Violation> {
    let mut v = Vec::new();
    if &t.header.config != cfg {
        v.push(Violation::HeaderMismatch("config"));
    }
    if t.header.victims != plan.victims {
        v.push(Violation::HeaderMismatch("victims"));
    }
    v.extend(verify_transcript(t));
    v
}

/// Checks `t` against its own header.
pub fn verify_transcript(t: &RoundTranscript) -> Vec<Violation> {
    let mut out = Vec::new();
    let cfg = &t.header.config;
    let field = match t.field() {
        Ok(f) => f,
        Err(e) => return vec![Violation::Malformed { index: 0, reason: e.to_string() }],
    };
    let seeds = RoundSeeds::new(t.header.master_seed, t.header.round);
    let d = cfg.model_len;

    let mut messages = Vec::with_capacity(t.records.len());
    for (i, r) in t.records.iter().enumerate() {
        match r.envelope() {
            Ok(env) if env.sender != r.sender || env.receiver != r.receiver || env.phase != r.phase => {
                out.push(Violation::Malformed { index: i, reason: "envelope disagrees with record".into() })
            }
            Ok(env) if env.round != t.header.round => {
                out.push(Violation::Malformed { index: i, reason: format!("round {} in envelope", env.round) })
            }
            Ok(env) => match env.message(&field) {
                Ok(m) => messages.push((i, m)),
                Err(e) => out.push(Violation::Malformed { index: i, reason: e.to_string() }),
            },
            Err(e) => out.push(Violation::Malformed { index: i, reason: e.to_string() }),
        }
    }

    let masks: Vec<(u32, FieldVector)> = (1..=cfg.users as u32)
        .map(|u| {
            let m = match t.header.protocol {
                Protocol::LightSecAgg => regenerate_mask(&field, seeds.lsa_mask(u), d),
                _ => SeedStream::new(seeds.secagg(u).private).expand(&field, d, &mut Meter::new()),
            };
            (u, m)
        })
        .collect();
    for (i, m) in &messages {
        let r = &t.records[*i];
        for vec in m.vectors() {
            if let Some(owner) = masks.iter().find(|(_, z)| contains_mask(vec, z)).map(|(u, _)| *u) {
                out.push(Violation::MaskLeak { index: *i, sender: r.sender, receiver: r.receiver, owner });
            }
        }
    }

    let Some(outcome) = &t.outcome else {
        out.push(Violation::MissingOutcome);
        return out;
    };
    let expected_u1: Vec<u32> = (1..=cfg.users as u32).filter(|u| !t.header.victims.contains(u)).collect();
    if outcome.survivors != expected_u1 {
        out.push(Violation::SurvivorMismatch { expected: expected_u1, got: outcome.survivors.clone() });
    }
    match (&outcome.aggregate, &outcome.failure) {
        (Some(agg), _) => match expected_sum(cfg, &seeds, &outcome.survivors) {
            Ok(e) if &e == agg => {}
            _ => out.push(Violation::AggregateMismatch),
        },
        (None, Some(e)) => out.push(Violation::Unrecovered(e.clone())),
        (None, None) => out.push(Violation::MissingOutcome),
    }

    let recovery: Vec<(u32, &Message)> = messages
        .iter()
        .filter(|(i, _)| t.records[*i].phase == Phase::Recovery && t.records[*i].receiver == SERVER)
        .map(|(i, m)| (t.records[*i].sender, m))
        .collect();
    for &u in &outcome.survivors {
        let sent: Vec<&Message> = recovery.iter().filter(|(s, _)| *s == u).map(|(_, m)| *m).collect();
        if sent.len() != 1 {
            out.push(Violation::RecoveryMessageCount { user: u, expected: 1, got: sent.len() });
        }
        if t.header.protocol == Protocol::LightSecAgg {
            let l = cfg.segment_len();
            for m in sent {
                if m.field_elements() != l {
                    out.push(Violation::RecoveryMessageSize { user: u, expected: l, got: m.field_elements() });
                }
            }
        }
    }
    if t.header.protocol == Protocol::LightSecAgg && outcome.aggregate.is_some() {
        let expected = server_intake_formula(cfg);
        let got: usize = recovery
            .iter()
            .filter(|(s, _)| outcome.decode_set.contains(s))
            .map(|(_, m)| m.field_elements())
            .sum();
        if got != expected || outcome.decode_set.len() != cfg.target {
            out.push(Violation::ServerIntake { expected, got });
        }
    }
    out
}

/// `U * ceil(d / (U - T))`, which is `U / (U - T) * d` when `U - T` divides `d`.
pub fn server_intake_formula(cfg: &ProtocolConfig) -> usize {
    cfg.target * cfg.segment_len()
}

/// `(1 + N / (U - T)) * d` with the padded segment length.
pub fn storage_formula(cfg: &ProtocolConfig) -> usize {
    cfg.model_len + cfg.users * cfg.segment_len()
}

/// Whether `v` exposes `z`: either `z` sits at an offset of `v` that is a
/// multiple of `|z|`, or `v` equals one aligned `|v|`-long piece of `z`.
fn contains_mask(v: &FieldVector, z: &FieldVector) -> bool {
    let (lv, lz) = (v.len(), z.len());
    if lv == 0 || lz == 0 {
        return false;
    }
    let vs = v.as_slice();
    let zs = z.as_slice();
    if lv >= lz {
        (0..=lv - lz).step_by(lz).any(|o| &vs[o..o + lz] == zs)
    } else {
        (0..lz).step_by(lv).any(|o| z.window(o, lv).as_slice() == vs)
    }
}

/// Formats violations one per line; `"ok"` when there are none.
pub fn render(violations: &[Violation]) -> String {
    if violations.is_empty() {
        return "ok\n".into();
    }
    violations.iter().map(|v| format!("{v}\n")).collect()
}
