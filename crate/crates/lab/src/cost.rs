//! Per-party, per-phase cost accounting and its CSV form.

use std::io::{Read, Write};

use lightsecagg_core::Meter;

use crate::error::{LabError, LabResult};
use crate::harness::{Pipeline, Protocol};

/// Note attached to every report about how the server decodes.
pub const DECODER_NOTE: &str = "direct Lagrange, O(U^2) per symbol; fast O(U log U) decoding not implemented";

pub const CSV_HEADER: [&str; 12] =
    ["protocol", "N", "p", "U", "pipeline", "party", "phase", "field_ops", "prg_elems", "bytes_out", "bytes_in", "wall_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CostPhase {
    Offline,
    Training,
    Upload,
    Recovery,
}

impl CostPhase {
    pub const ALL: [CostPhase; 4] = [CostPhase::Offline, CostPhase::Training, CostPhase::Upload, CostPhase::Recovery];

    pub fn name(self) -> &'static str {
        match self {
            CostPhase::Offline => "offline",
            CostPhase::Training => "training",
            CostPhase::Upload => "upload",
            CostPhase::Recovery => "recovery",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseCost {
    pub field_ops: u64,
    pub prg_elems: u64,
    pub prg_streams: u64,
    /// MDS decodes and the elements they produced.
    pub decodes: u64,
    pub decoded_elems: u64,
    pub bytes_out: u64,
    pub bytes_in: u64,
    /// Time from phase start until this party finished its part.
    pub wall_ms: f64,
}

impl PhaseCost {
    pub fn add_meter(&mut self, m: &Meter) {
        self.field_ops += m.field_ops;
        self.prg_elems += m.prg_elems;
        self.prg_streams += m.prg_streams;
        self.decodes += m.decodes;
        self.decoded_elems += m.decoded_elems;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartyCost {
    /// 0 is the server.
    pub party: u32,
    pub phases: [PhaseCost; 4],
}

impl PartyCost {
    pub fn new(party: u32) -> Self {
        Self { party, phases: Default::default() }
    }

    pub fn phase(&self, p: CostPhase) -> &PhaseCost {
        &self.phases[p.index()]
    }

    pub fn phase_mut(&mut self, p: CostPhase) -> &mut PhaseCost {
        &mut self.phases[p.index()]
    }
}

/// Side information that does not fit the fixed CSV columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostMeta {
    pub decoder: String,
    pub privacy: usize,
    pub model_len: usize,
    pub modulus: u64,
    /// SecAgg+ graph degree and local sharing degree.
    pub graph_degree: Option<usize>,
    pub t_local: Option<usize>,
    /// Field elements held by each user after the offline phase, by id.
    pub storage: Vec<usize>,
    /// Wall-clock of the whole round as seen by the coordinating clock.
    pub round_wall_ms: f64,
    /// (start, end) of each phase relative to round start.
    pub windows: [(f64, f64); 4],
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub protocol: Protocol,
    pub users: usize,
    pub rate: f64,
    pub target: usize,
    pub pipeline: Pipeline,
    pub master_seed: u64,
    pub round: u64,
    /// Indexed by party id.
    pub parties: Vec<PartyCost>,
    pub meta: CostMeta,
}

impl CostReport {
    pub fn server(&self) -> &PartyCost {
        &self.parties[0]
    }

    pub fn server_recovery_ops(&self) -> u64 {
        self.server().phase(CostPhase::Recovery).field_ops
    }

    pub fn total_bytes(&self) -> u64 {
        self.parties.iter().flat_map(|p| p.phases.iter()).map(|c| c.bytes_out).sum()
    }

    /// Round time rebuilt from the per-party columns; see [`total_time_ms`].
    pub fn total_time_ms(&self) -> f64 {
        let rows: Vec<(CostPhase, f64)> =
            self.parties.iter().flat_map(|p| CostPhase::ALL.into_iter().map(move |ph| (ph, p.phase(ph).wall_ms))).collect();
        total_time_ms(self.pipeline, &rows)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut out = Vec::with_capacity(self.parties.len() * 4);
        for p in &self.parties {
            for ph in CostPhase::ALL {
                let c = p.phase(ph);
                out.push(CsvRow {
                    protocol: self.protocol,
                    users: self.users,
                    rate: self.rate,
                    target: self.target,
                    pipeline: self.pipeline,
                    party: p.party,
                    phase: ph,
                    field_ops: c.field_ops,
                    prg_elems: c.prg_elems,
                    bytes_out: c.bytes_out,
                    bytes_in: c.bytes_in,
                    wall_ms: c.wall_ms,
                });
            }
        }
        out
    }

    /// One `key=value` line summarizing the metadata.
    pub fn meta_line(&self) -> String {
        let m = &self.meta;
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        let max_storage = m.storage.iter().max().copied().unwrap_or(0);
        format!(
            "protocol={} N={} p={} U={} T={} d={} q={} pipeline={} seed={} round={} degree={} t_local={} storage_max={} round_wall_ms={:.3} decoder=\"{}\" status={}",
            self.protocol.name(),
            self.users,
            fmt_rate(self.rate),
            self.target,
            m.privacy,
            m.model_len,
            m.modulus,
            self.pipeline.name(),
            self.master_seed,
            self.round,
            opt(m.graph_degree),
            opt(m.t_local),
            max_storage,
            m.round_wall_ms,
            m.decoder,
            m.failure.as_deref().map_or("ok".to_string(), |f| format!("failed({f})")),
        )
    }
}

/// Round time from per-party phase times: the slowest party bounds each
/// phase; with the overlapped pipeline offline work and training share a
/// window, so that window lasts as long as the slower of the two.
pub fn total_time_ms(pipeline: Pipeline, rows: &[(CostPhase, f64)]) -> f64 {
    let max = |ph: CostPhase| rows.iter().filter(|(p, _)| *p == ph).map(|(_, w)| *w).fold(0.0, f64::max);
    let head = match pipeline {
        Pipeline::NonOverlapped => max(CostPhase::Offline) + max(CostPhase::Training),
        Pipeline::Overlapped => max(CostPhase::Offline).max(max(CostPhase::Training)),
    };
    head + max(CostPhase::Upload) + max(CostPhase::Recovery)
}

pub fn fmt_rate(p: f64) -> String {
    let s = format!("{p:.4}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map_or(s.to_string(), |t| format!("{t}.0"));
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub protocol: Protocol,
    pub users: usize,
    pub rate: f64,
    pub target: usize,
    pub pipeline: Pipeline,
    pub party: u32,
    pub phase: CostPhase,
    pub field_ops: u64,
    pub prg_elems: u64,
    pub bytes_out: u64,
    pub bytes_in: u64,
    pub wall_ms: f64,
}

pub fn write_csv<W: Write>(out: W, reports: &[CostReport]) -> LabResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        for row in r.csv_rows() {
            w.write_record([
                row.protocol.name().to_string(),
                row.users.to_string(),
                fmt_rate(row.rate),
                row.target.to_string(),
                row.pipeline.name().to_string(),
                row.party.to_string(),
                row.phase.name().to_string(),
                row.field_ops.to_string(),
                row.prg_elems.to_string(),
                row.bytes_out.to_string(),
                row.bytes_in.to_string(),
                format!("{:.3}", row.wall_ms),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> LabResult<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(LabError::Schema(format!("unexpected header {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |col: &str| LabError::Schema(format!("line {line}: bad `{col}`"));
        let num = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(CSV_HEADER[k]));
        rows.push(CsvRow {
            protocol: Protocol::parse(&rec[0]).ok_or_else(|| bad("protocol"))?,
            users: num(1)? as usize,
            rate: rec[2].parse().map_err(|_| bad("p"))?,
            target: num(3)? as usize,
            pipeline: Pipeline::parse(&rec[4]).ok_or_else(|| bad("pipeline"))?,
            party: num(5)? as u32,
            phase: CostPhase::parse(&rec[6]).ok_or_else(|| bad("phase"))?,
            field_ops: num(7)?,
            prg_elems: num(8)?,
            bytes_out: num(9)?,
            bytes_in: num(10)?,
            wall_ms: rec[11].parse().map_err(|_| bad("wall_ms"))?,
        });
    }
    Ok(rows)
}
