//! Actor bodies: one per party, each owning its protocol state and talking
//! only through the transport.

use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use lightsecagg_core::baseline::{PairwiseParams, SecAggServer, SecAggUser};
use lightsecagg_core::coding::TPrivateMdsMatrix;
use lightsecagg_core::lightsecagg::{LsaServer, LsaUser};
use lightsecagg_core::wire::{Envelope, Message, Phase};
use lightsecagg_core::{FieldVector, Meter, PrimeField, ProtocolConfig};

use crate::cost::{CostPhase, PartyCost};
use crate::error::{LabError, LabResult};
use crate::harness::Pipeline;
use crate::seeds::RoundSeeds;
use crate::transport::Transport;

pub(crate) struct Ctx {
    pub id: u32,
    pub round: u64,
    pub net: Arc<dyn Transport>,
    pub timeout: Duration,
    pub field: PrimeField,
    pub cost: PartyCost,
    phase: CostPhase,
}

impl Ctx {
    pub fn new(id: u32, round: u64, net: Arc<dyn Transport>, timeout: Duration, field: PrimeField) -> Self {
        Self { id, round, net, timeout, field, cost: PartyCost::new(id), phase: CostPhase::Offline }
    }

    fn wire_phase(&self) -> Phase {
        match self.phase {
            CostPhase::Offline | CostPhase::Training => Phase::Offline,
            CostPhase::Upload => Phase::Upload,
            CostPhase::Recovery => Phase::Recovery,
        }
    }

    pub fn send(&mut self, to: u32, msg: &Message) -> LabResult<()> {
        let env = Envelope::new(self.round, self.wire_phase(), self.id, to, msg);
        let n = env.wire_len() as u64;
        self.net.send(env)?;
        self.cost.phase_mut(self.phase).bytes_out += n;
        Ok(())
    }

    pub fn recv(&mut self) -> LabResult<(u32, Message)> {
        let env = self.net.recv(self.id, self.timeout)?;
        self.cost.phase_mut(self.phase).bytes_in += env.wire_len() as u64;
        let msg = env.message(&self.field)?;
        Ok((env.sender, msg))
    }

    fn unexpected(&self, m: &Message) -> LabError {
        LabError::Unexpected { party: self.id, kind: m.kind() }
    }
}

/// What an actor leaves behind after the round.
#[derive(Debug, Default)]
pub(crate) struct ActorOutput {
    pub storage: usize,
    pub survivors: Vec<u32>,
    pub decode_set: Vec<u32>,
    pub aggregate: Option<Result<FieldVector, String>>,
}

pub(crate) trait Actor: Send {
    fn offline(&mut self, cx: &mut Ctx) -> LabResult<()>;
    fn upload(&mut self, cx: &mut Ctx) -> LabResult<()>;
    fn recovery(&mut self, cx: &mut Ctx) -> LabResult<()>;
    fn meter(&self) -> Meter;
    fn output(&self) -> ActorOutput;
}

pub(crate) struct Schedule {
    pub pipeline: Pipeline,
    pub training: Duration,
    pub is_user: bool,
}

/// Runs one actor through the phase barriers. The actor keeps meeting the
/// barriers after a failure so the round always terminates.
pub(crate) fn drive(
    mut actor: Box<dyn Actor>,
    mut cx: Ctx,
    barrier: Arc<Barrier>,
    sched: Schedule,
) -> (PartyCost, ActorOutput, Option<LabError>) {
    let mut err: Option<LabError> = None;
    barrier.wait();

    let training = if sched.is_user { sched.training } else { Duration::ZERO };
    match sched.pipeline {
        Pipeline::Overlapped => {
            let start = Instant::now();
            thread::scope(|s| {
                let trainer = s.spawn(move || {
                    thread::sleep(training);
                    start.elapsed()
                });
                run_phase(&mut *actor, &mut cx, CostPhase::Offline, &mut err, |a, c| a.offline(c));
                let trained = trainer.join().expect("training thread panicked");
                cx.cost.phase_mut(CostPhase::Training).wall_ms = ms(trained);
            });
            barrier.wait();
        }
        Pipeline::NonOverlapped => {
            run_phase(&mut *actor, &mut cx, CostPhase::Offline, &mut err, |a, c| a.offline(c));
            barrier.wait();
            let start = Instant::now();
            thread::sleep(training);
            cx.cost.phase_mut(CostPhase::Training).wall_ms = ms(start.elapsed());
            barrier.wait();
        }
    }
    run_phase(&mut *actor, &mut cx, CostPhase::Upload, &mut err, |a, c| a.upload(c));
    barrier.wait();
    run_phase(&mut *actor, &mut cx, CostPhase::Recovery, &mut err, |a, c| a.recovery(c));
    barrier.wait();
    let out = actor.output();
    (cx.cost, out, err)
}

fn run_phase(
    actor: &mut dyn Actor,
    cx: &mut Ctx,
    phase: CostPhase,
    err: &mut Option<LabError>,
    f: impl FnOnce(&mut dyn Actor, &mut Ctx) -> LabResult<()>,
) {
    cx.phase = phase;
    let start = Instant::now();
    let before = actor.meter();
    if err.is_none() {
        if let Err(e) = f(actor, cx) {
            *err = Some(e);
        }
    }
    let spent = actor.meter() - before;
    let c = cx.cost.phase_mut(phase);
    c.add_meter(&spent);
    c.wall_ms = ms(start.elapsed());
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Uploaders whose link is still open.
fn surviving(cx: &Ctx, uploaded: Vec<u32>) -> Vec<u32> {
    uploaded.into_iter().filter(|u| cx.net.is_open(*u)).collect()
}

pub(crate) struct LsaUserActor {
    pub cfg: ProtocolConfig,
    pub matrix: TPrivateMdsMatrix,
    pub seeds: RoundSeeds,
    pub victim: bool,
    pub state: Option<LsaUser>,
}

impl LsaUserActor {
    fn state(&mut self) -> &mut LsaUser {
        self.state.as_mut().expect("state is built in the offline phase")
    }
}

impl Actor for LsaUserActor {
    fn offline(&mut self, cx: &mut Ctx) -> LabResult<()> {
        let s = &self.seeds;
        let user = LsaUser::new(&self.cfg, cx.id, self.matrix.clone(), s.round, s.lsa_mask(cx.id), s.lsa_noise(cx.id))?;
        let user = self.state.insert(user);
        for (to, msg) in user.offline_round()? {
            cx.send(to, &msg)?;
        }
        for _ in 1..self.cfg.users {
            match cx.recv()? {
                (_, Message::EncodedShare(share)) => self.state().receive_share(share)?,
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        Ok(())
    }

    fn upload(&mut self, cx: &mut Ctx) -> LabResult<()> {
        let x = self.seeds.model(&cx.field, cx.id, self.cfg.model_len)?;
        let w = self.cfg.weight(cx.id);
        let msg = self.state().mask_weighted_model(&x, w)?;
        cx.send(0, &msg)?;
        if self.victim {
            cx.net.close(cx.id);
        }
        Ok(())
    }

    fn recovery(&mut self, cx: &mut Ctx) -> LabResult<()> {
        if self.victim {
            return Ok(());
        }
        let survivors = match cx.recv()? {
            (0, Message::SurvivorSet(u1)) => u1,
            (_, m) => return Err(cx.unexpected(&m)),
        };
        let msg = self.state().aggregate_shares(&survivors)?;
        cx.send(0, &msg)
    }

    fn meter(&self) -> Meter {
        self.state.as_ref().map(|s| s.meter).unwrap_or_default()
    }

    fn output(&self) -> ActorOutput {
        ActorOutput { storage: self.state.as_ref().map_or(0, |s| s.storage_elements()), ..Default::default() }
    }
}

pub(crate) struct LsaServerActor {
    pub cfg: ProtocolConfig,
    pub state: LsaServer,
    pub result: Option<Result<FieldVector, String>>,
}

impl Actor for LsaServerActor {
    fn offline(&mut self, _cx: &mut Ctx) -> LabResult<()> {
        Ok(())
    }

    fn upload(&mut self, cx: &mut Ctx) -> LabResult<()> {
        for _ in 0..self.cfg.users {
            match cx.recv()? {
                (from, Message::MaskedModel(m)) => self.state.receive_masked_model(from, m)?,
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        Ok(())
    }

    fn recovery(&mut self, cx: &mut Ctx) -> LabResult<()> {
        let u1 = surviving(cx, self.state.uploaded());
        let announce = self.state.close_upload(&u1)?;
        for &u in &u1 {
            cx.send(u, &announce)?;
        }
        for _ in 0..u1.len() {
            match cx.recv()? {
                (from, Message::AggregatedShare(v)) => self.state.receive_aggregated_share(from, v)?,
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        self.result = Some(self.state.recover().map_err(|e| e.to_string()));
        Ok(())
    }

    fn meter(&self) -> Meter {
        self.state.meter
    }

    fn output(&self) -> ActorOutput {
        ActorOutput {
            storage: 0,
            survivors: self.state.survivors().to_vec(),
            decode_set: self.state.decode_set(),
            aggregate: self.result.clone(),
        }
    }
}

pub(crate) struct PairwiseUserActor {
    pub cfg: ProtocolConfig,
    pub params: PairwiseParams,
    pub seeds: RoundSeeds,
    pub victim: bool,
    pub state: Option<SecAggUser>,
}

impl PairwiseUserActor {
    fn state(&mut self) -> &mut SecAggUser {
        self.state.as_mut().expect("state is built in the offline phase")
    }
}

impl Actor for PairwiseUserActor {
    fn offline(&mut self, cx: &mut Ctx) -> LabResult<()> {
        let user = SecAggUser::new(&self.cfg, cx.id, self.params.clone(), self.seeds.secagg(cx.id))?;
        let pk = self.state.insert(user).public_key();
        cx.send(0, &pk)?;
        // faster neighbours may deliver their shares before our key list
        let mut early = Vec::new();
        let keys = loop {
            match cx.recv()? {
                (0, Message::PublicKeyList(k)) => break k,
                (_, Message::SeedShares { owner, seed_share, key_share }) => early.push((owner, seed_share, key_share)),
                (_, m) => return Err(cx.unexpected(&m)),
            }
        };
        for (to, msg) in self.state().receive_public_keys(&keys)? {
            cx.send(to, &msg)?;
        }
        let expected = self.params.graph.deg(cx.id);
        for _ in early.len()..expected {
            match cx.recv()? {
                (_, Message::SeedShares { owner, seed_share, key_share }) => early.push((owner, seed_share, key_share)),
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        for (owner, s, k) in early {
            self.state().receive_seed_shares(owner, s, k)?;
        }
        Ok(())
    }

    fn upload(&mut self, cx: &mut Ctx) -> LabResult<()> {
        let f = cx.field;
        let x = self.seeds.model(&f, cx.id, self.cfg.model_len)?;
        let x = match self.cfg.weight(cx.id) {
            1 => x,
            w => f.scale(&x, f.elem(w), &mut Meter::new()),
        };
        let msg = self.state().mask_model(&x)?;
        cx.send(0, &msg)?;
        if self.victim {
            cx.net.close(cx.id);
        }
        Ok(())
    }

    fn recovery(&mut self, cx: &mut Ctx) -> LabResult<()> {
        if self.victim {
            return Ok(());
        }
        let (survivors, dropped) = match cx.recv()? {
            (0, Message::UnmaskRequest { survivors, dropped }) => (survivors, dropped),
            (_, m) => return Err(cx.unexpected(&m)),
        };
        let msg = self.state().unmask(&survivors, &dropped)?;
        cx.send(0, &msg)
    }

    fn meter(&self) -> Meter {
        self.state.as_ref().map(|s| s.meter).unwrap_or_default()
    }

    fn output(&self) -> ActorOutput {
        ActorOutput { storage: self.state.as_ref().map_or(0, |s| s.storage_elements()), ..Default::default() }
    }
}

pub(crate) struct PairwiseServerActor {
    pub cfg: ProtocolConfig,
    pub state: SecAggServer,
    pub result: Option<Result<FieldVector, String>>,
}

impl Actor for PairwiseServerActor {
    fn offline(&mut self, cx: &mut Ctx) -> LabResult<()> {
        for _ in 0..self.cfg.users {
            match cx.recv()? {
                (from, Message::PublicKey(pk)) => self.state.receive_public_key(from, pk)?,
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        for u in 1..=self.cfg.users as u32 {
            let list = self.state.public_key_list(u);
            cx.send(u, &list)?;
        }
        Ok(())
    }

    fn upload(&mut self, cx: &mut Ctx) -> LabResult<()> {
        for _ in 0..self.cfg.users {
            match cx.recv()? {
                (from, Message::MaskedModel(m)) => self.state.receive_masked_model(from, m)?,
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        Ok(())
    }

    fn recovery(&mut self, cx: &mut Ctx) -> LabResult<()> {
        let uploaded: Vec<u32> = (1..=self.cfg.users as u32).collect();
        let u1 = surviving(cx, uploaded);
        let request = self.state.close_upload(&u1)?;
        for &u in &u1 {
            cx.send(u, &request)?;
        }
        let mut responses = Vec::with_capacity(u1.len());
        for _ in 0..u1.len() {
            match cx.recv()? {
                (from, Message::UnmaskResponse { seed_shares, key_shares }) => {
                    responses.push((from, seed_shares, key_shares))
                }
                (_, m) => return Err(cx.unexpected(&m)),
            }
        }
        // arrival order varies between runs; the share subset used must not
        responses.sort_by_key(|r| r.0);
        for (from, s, k) in responses {
            self.state.receive_unmask_response(from, s, k)?;
        }
        self.result = Some(self.state.recover().map_err(|e| e.to_string()));
        Ok(())
    }

    fn meter(&self) -> Meter {
        self.state.meter
    }

    fn output(&self) -> ActorOutput {
        ActorOutput {
            storage: 0,
            survivors: self.state.survivors().to_vec(),
            decode_set: self.state.responders().to_vec(),
            aggregate: self.result.clone(),
        }
    }
}
