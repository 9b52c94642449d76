//! Threaded round orchestration.
//!
//! `run_round` spawns one thread per user plus one for the server, all
//! connected through a recorded transport. The calling thread is the round
//! clock: every phase ends at a barrier shared by all parties and the clock.
//!
//! ```text
//! non-overlapped   | offline | training | upload | recovery |
//! overlapped       | offline + training | upload | recovery |
//! ```

use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use lightsecagg_core::baseline::{default_degree, PairwiseParams, SecAggServer};
use lightsecagg_core::coding::build_tprivate_mds;
use lightsecagg_core::lightsecagg::LsaServer;
use lightsecagg_core::{FieldVector, ProtocolConfig};

use crate::actors::{self, Actor, Ctx, Schedule};
use crate::cost::{CostMeta, CostPhase, CostReport, PartyCost, DECODER_NOTE};
use crate::dropout::DropoutPlan;
use crate::error::{LabError, LabResult};
use crate::seeds::RoundSeeds;
use crate::transcript::{Outcome, RoundTranscript, TranscriptHeader};
use crate::transport::{self, LatencyModel, Recorder, Transport, TransportKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    LightSecAgg,
    SecAgg,
    SecAggPlus,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::LightSecAgg, Protocol::SecAgg, Protocol::SecAggPlus];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::LightSecAgg => "lightsecagg",
            Protocol::SecAgg => "secagg",
            Protocol::SecAggPlus => "secagg+",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lightsecagg" | "lsa" => Some(Protocol::LightSecAgg),
            "secagg" => Some(Protocol::SecAgg),
            "secagg+" | "secaggplus" | "secagg_plus" => Some(Protocol::SecAggPlus),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pipeline {
    NonOverlapped,
    Overlapped,
}

impl Pipeline {
    pub const ALL: [Pipeline; 2] = [Pipeline::NonOverlapped, Pipeline::Overlapped];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::NonOverlapped => "non-overlapped",
            Pipeline::Overlapped => "overlapped",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "non-overlapped" | "nonoverlapped" | "sequential" => Some(Pipeline::NonOverlapped),
            "overlapped" => Some(Pipeline::Overlapped),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

#[derive(Debug, Clone)]
pub struct RoundSpec {
    pub protocol: Protocol,
    pub config: ProtocolConfig,
    pub plan: DropoutPlan,
    pub pipeline: Pipeline,
    pub training_delay_ms: u64,
    pub master_seed: u64,
    pub round: u64,
    pub transport: TransportKind,
    pub latency: Option<LatencyModel>,
    /// SecAgg+ graph degree; `default_degree(N)` when unset.
    pub graph_degree: Option<usize>,
    pub timeout: Duration,
}

impl RoundSpec {
    pub fn new(protocol: Protocol, config: ProtocolConfig, plan: DropoutPlan) -> Self {
        Self {
            protocol,
            config,
            plan,
            pipeline: Pipeline::NonOverlapped,
            training_delay_ms: 0,
            master_seed: 0,
            round: 0,
            transport: TransportKind::InProcess,
            latency: None,
            graph_degree: None,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn seeds(&self) -> RoundSeeds {
        RoundSeeds::new(self.master_seed, self.round)
    }

    pub fn pairwise_params(&self) -> LabResult<Option<PairwiseParams>> {
        Ok(match self.protocol {
            Protocol::LightSecAgg => None,
            Protocol::SecAgg => Some(PairwiseParams::secagg(&self.config)),
            Protocol::SecAggPlus => {
                let k = self.graph_degree.unwrap_or_else(|| default_degree(self.config.users));
                Some(PairwiseParams::secagg_plus(&self.config, k)?)
            }
        })
    }

    fn check(&self) -> LabResult<()> {
        self.config.validate()?;
        let n = self.config.users as u32;
        if let Some(v) = self.plan.victims.iter().find(|&&v| v == 0 || v > n) {
            return Err(LabError::Config { field: "victims".into(), reason: format!("user {v} is not in 1..={n}") });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RoundResult {
    /// `Err` carries the recovery failure, which is reported rather than raised.
    pub aggregate: Result<FieldVector, String>,
    pub cost: CostReport,
    pub transcript: RoundTranscript,
}

impl RoundResult {
    pub fn aggregate(&self) -> LabResult<&FieldVector> {
        self.aggregate.as_ref().map_err(|e| LabError::RecoveryFailed(e.clone()))
    }

    pub fn failed(&self) -> bool {
        self.aggregate.is_err()
    }
}

/// Runs one aggregation round.
///
/// Transport and protocol faults are errors; an unmet recovery threshold
/// is not, and shows up in [`RoundResult::aggregate`].
pub fn run_round(spec: &RoundSpec) -> LabResult<RoundResult> {
    spec.check()?;
    let cfg = &spec.config;
    let field = cfg.field()?;
    let n = cfg.users;
    let seeds = spec.seeds();
    let pairwise = spec.pairwise_params()?;

    let net = transport::build(spec.transport, n + 1, spec.latency)?;
    let recorder = Arc::new(Recorder::new(net, n + 1));
    let shared: Arc<dyn Transport> = recorder.clone();

    let mut actors: Vec<Box<dyn Actor>> = Vec::with_capacity(n + 1);
    match &pairwise {
        None => {
            let matrix = build_tprivate_mds(&field, n, cfg.target, cfg.privacy)?;
            let server = LsaServer::new(cfg, matrix.clone())?;
            actors.push(Box::new(actors::LsaServerActor { cfg: cfg.clone(), state: server, result: None }));
            for u in 1..=n as u32 {
                actors.push(Box::new(actors::LsaUserActor {
                    cfg: cfg.clone(),
                    matrix: matrix.clone(),
                    seeds,
                    victim: spec.plan.is_victim(u),
                    state: None,
                }));
            }
        }
        Some(params) => {
            let server = SecAggServer::new(cfg, params.clone())?;
            actors.push(Box::new(actors::PairwiseServerActor { cfg: cfg.clone(), state: server, result: None }));
            for u in 1..=n as u32 {
                actors.push(Box::new(actors::PairwiseUserActor {
                    cfg: cfg.clone(),
                    params: params.clone(),
                    seeds,
                    victim: spec.plan.is_victim(u),
                    state: None,
                }));
            }
        }
    }

    let barrier = Arc::new(Barrier::new(n + 2));
    let training = Duration::from_millis(spec.training_delay_ms);
    let handles: Vec<_> = actors
        .into_iter()
        .enumerate()
        .map(|(id, actor)| {
            let cx = Ctx::new(id as u32, spec.round, shared.clone(), spec.timeout, field);
            let barrier = barrier.clone();
            let sched = Schedule { pipeline: spec.pipeline, training, is_user: id != 0 };
            thread::Builder::new()
                .name(format!("party-{id}"))
                .spawn(move || actors::drive(actor, cx, barrier, sched))
                .map_err(LabError::Io)
        })
        .collect::<LabResult<_>>()?;

    // the clock: one barrier to start, then one per phase window
    let mut windows = [(0.0, 0.0); 4];
    barrier.wait();
    let start = Instant::now();
    let now = || start.elapsed().as_secs_f64() * 1e3;
    let phases: Vec<Vec<CostPhase>> = match spec.pipeline {
        Pipeline::NonOverlapped => CostPhase::ALL.iter().map(|p| vec![*p]).collect(),
        Pipeline::Overlapped => {
            vec![vec![CostPhase::Offline, CostPhase::Training], vec![CostPhase::Upload], vec![CostPhase::Recovery]]
        }
    };
    let mut t0 = 0.0;
    for group in phases {
        barrier.wait();
        let t1 = now();
        for p in group {
            windows[p.index()] = (t0, t1);
        }
        t0 = t1;
    }
    let round_wall_ms = now();

    let mut parties: Vec<PartyCost> = Vec::with_capacity(n + 1);
    let mut outputs = Vec::with_capacity(n + 1);
    let mut first_err = None;
    for h in handles {
        let (cost, out, err) = h.join().expect("actor thread panicked");
        parties.push(cost);
        outputs.push(out);
        if first_err.is_none() {
            first_err = err;
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let server_out = outputs.remove(0);
    let aggregate = server_out.aggregate.clone().unwrap_or_else(|| Err("server produced no result".into()));
    let graph_degree = match (spec.protocol, &pairwise) {
        (Protocol::SecAggPlus, Some(p)) => Some(p.graph.degree()),
        _ => None,
    };
    let t_local = match (spec.protocol, &pairwise) {
        (Protocol::SecAggPlus, Some(p)) => Some(p.share_degree),
        _ => None,
    };

    let cost = CostReport {
        protocol: spec.protocol,
        users: n,
        rate: spec.plan.rate,
        target: cfg.target,
        pipeline: spec.pipeline,
        master_seed: spec.master_seed,
        round: spec.round,
        parties,
        meta: CostMeta {
            decoder: DECODER_NOTE.into(),
            privacy: cfg.privacy,
            model_len: cfg.model_len,
            modulus: cfg.modulus,
            graph_degree,
            t_local,
            storage: outputs.iter().map(|o| o.storage).collect(),
            round_wall_ms,
            windows,
            failure: aggregate.as_ref().err().cloned(),
        },
    };

    let header = TranscriptHeader {
        protocol: spec.protocol,
        pipeline: spec.pipeline,
        config: cfg.clone(),
        rate: spec.plan.rate,
        victims: spec.plan.victims.clone(),
        master_seed: spec.master_seed,
        round: spec.round,
        graph_degree: graph_degree.unwrap_or(0),
    };
    let mut transcript = RoundTranscript::new(header, recorder.take());
    transcript.outcome = Some(Outcome {
        survivors: server_out.survivors,
        decode_set: server_out.decode_set,
        aggregate: aggregate.as_ref().ok().cloned(),
        failure: aggregate.as_ref().err().cloned(),
    });

    Ok(RoundResult { aggregate, cost, transcript })
}

/// One cell of a sweep grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub spec: RoundSpec,
    pub repeats: usize,
}

/// Outcome of one cell repeat.
#[derive(Debug)]
pub struct SweepEntry {
    pub cell: usize,
    pub repeat: usize,
    pub result: LabResult<RoundResult>,
}

/// Runs each cell `repeats` times. Repeat `r` uses round number `r`, so
/// models stay fixed across repeats while protocol randomness changes.
/// Errors are collected per entry; the sweep always runs to the end.
pub fn sweep(cells: &[Cell]) -> Vec<SweepEntry> {
    let mut out = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for r in 0..cell.repeats {
            let mut spec = cell.spec.clone();
            spec.round = r as u64;
            out.push(SweepEntry { cell: ci, repeat: r, result: run_round(&spec) });
        }
    }
    out
}
