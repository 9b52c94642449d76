//! Point-to-point message transports between the server (party 0) and the
//! users (parties `1..=N`).
//!
//! Links are reliable and ordered. Closing a party models a dropout: the
//! party can no longer send, and messages addressed to it are discarded.

use std::io::{Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use lightsecagg_core::wire::Envelope;

use crate::error::{LabError, LabResult};
use crate::transcript::Record;

pub trait Transport: Send + Sync {
    fn send(&self, env: Envelope) -> LabResult<()>;
    fn recv(&self, me: u32, timeout: Duration) -> LabResult<Envelope>;
    fn close(&self, party: u32);
    fn is_open(&self, party: u32) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    InProcess,
    TcpLoopback,
}

impl TransportKind {
    pub fn name(self) -> &'static str {
        match self {
            TransportKind::InProcess => "inprocess",
            TransportKind::TcpLoopback => "tcp",
        }
    }
}

/// Per-message delay `base_ms + per_mb_ms * size / 10^6`, slept by the sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub base_ms: f64,
    pub per_mb_ms: f64,
}

impl LatencyModel {
    pub fn delay(&self, bytes: usize) -> Duration {
        Duration::from_secs_f64((self.base_ms + self.per_mb_ms * bytes as f64 / 1e6).max(0.0) / 1e3)
    }
}

fn apply_latency(latency: Option<LatencyModel>, bytes: usize) {
    if let Some(l) = latency {
        let d = l.delay(bytes);
        if !d.is_zero() {
            thread::sleep(d);
        }
    }
}

/// Builds a transport for `parties` parties (server plus users).
pub fn build(kind: TransportKind, parties: usize, latency: Option<LatencyModel>) -> LabResult<Arc<dyn Transport>> {
    Ok(match kind {
        TransportKind::InProcess => Arc::new(InProcess::new(parties, latency)),
        TransportKind::TcpLoopback => Arc::new(TcpLoopback::new(parties, latency)?),
    })
}

struct Links {
    open: Vec<AtomicBool>,
}

impl Links {
    fn new(parties: usize) -> Self {
        Self { open: (0..parties).map(|_| AtomicBool::new(true)).collect() }
    }

    fn is_open(&self, p: u32) -> bool {
        self.open.get(p as usize).is_some_and(|o| o.load(Ordering::SeqCst))
    }

    fn close(&self, p: u32) {
        if let Some(o) = self.open.get(p as usize) {
            o.store(false, Ordering::SeqCst);
        }
    }
}

fn recv_from(rx: &Mutex<Receiver<Envelope>>, me: u32, timeout: Duration) -> LabResult<Envelope> {
    let rx = rx.lock().expect("receiver lock poisoned");
    match rx.recv_timeout(timeout) {
        Ok(e) => Ok(e),
        Err(RecvTimeoutError::Timeout) => Err(LabError::Timeout { party: me }),
        Err(RecvTimeoutError::Disconnected) => Err(LabError::Closed { party: me }),
    }
}

/// Channels inside one process.
pub struct InProcess {
    senders: Vec<Sender<Envelope>>,
    receivers: Vec<Mutex<Receiver<Envelope>>>,
    links: Links,
    latency: Option<LatencyModel>,
}

impl InProcess {
    pub fn new(parties: usize, latency: Option<LatencyModel>) -> Self {
        let (senders, receivers) = (0..parties)
            .map(|_| {
                let (tx, rx) = mpsc::channel();
                (tx, Mutex::new(rx))
            })
            .unzip();
        Self { senders, receivers, links: Links::new(parties), latency }
    }
}

impl Transport for InProcess {
    fn send(&self, env: Envelope) -> LabResult<()> {
        if !self.links.is_open(env.sender) {
            return Err(LabError::Closed { party: env.sender });
        }
        let to = env.receiver;
        let tx = self.senders.get(to as usize).ok_or(LabError::Closed { party: to })?;
        apply_latency(self.latency, env.wire_len());
        if self.links.is_open(to) {
            // a dropped receiver simply never reads its queue
            let _ = tx.send(env);
        }
        Ok(())
    }

    fn recv(&self, me: u32, timeout: Duration) -> LabResult<Envelope> {
        let rx = self.receivers.get(me as usize).ok_or(LabError::Closed { party: me })?;
        recv_from(rx, me, timeout)
    }

    fn close(&self, party: u32) {
        self.links.close(party);
    }

    fn is_open(&self, party: u32) -> bool {
        self.links.is_open(party)
    }
}

/// Real sockets on 127.0.0.1 through a forwarding hub.
///
/// Every party holds one connection to the hub, opened with a 4-byte party
/// id. Frames are a 4-byte big-endian length followed by the encoded
/// envelope; the hub forwards each frame to the receiver's connection.
pub struct TcpLoopback {
    writers: Vec<Mutex<TcpStream>>,
    receivers: Vec<Mutex<Receiver<Envelope>>>,
    links: Arc<Links>,
    sockets: Vec<TcpStream>,
    latency: Option<LatencyModel>,
}

fn write_frame(s: &mut TcpStream, bytes: &[u8]) -> std::io::Result<()> {
    s.write_all(&(bytes.len() as u32).to_be_bytes())?;
    s.write_all(bytes)
}

fn read_frame(s: &mut TcpStream) -> std::io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    s.read_exact(&mut len)?;
    let mut buf = vec![0u8; u32::from_be_bytes(len) as usize];
    s.read_exact(&mut buf)?;
    Ok(buf)
}

impl TcpLoopback {
    pub fn new(parties: usize, latency: Option<LatencyModel>) -> LabResult<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let links = Arc::new(Links::new(parties));
        let mut clients = Vec::with_capacity(parties);
        let mut hub_side: Vec<Option<TcpStream>> = (0..parties).map(|_| None).collect();
        for p in 0..parties as u32 {
            let mut c = TcpStream::connect(addr)?;
            c.set_nodelay(true)?;
            c.write_all(&p.to_be_bytes())?;
            let (mut h, _) = listener.accept()?;
            h.set_nodelay(true)?;
            let mut id = [0u8; 4];
            h.read_exact(&mut id)?;
            let id = u32::from_be_bytes(id) as usize;
            if id >= parties || hub_side[id].is_some() {
                return Err(LabError::Transcript(format!("bad handshake id {id}")));
            }
            hub_side[id] = Some(h);
            clients.push(c);
        }
        let hub: Vec<TcpStream> = hub_side.into_iter().map(|h| h.expect("every party connected")).collect();
        let hub_writers: Arc<Vec<Mutex<TcpStream>>> =
            Arc::new(hub.iter().map(|h| h.try_clone().map(Mutex::new)).collect::<std::io::Result<_>>()?);
        let mut sockets = Vec::new();
        for h in hub {
            sockets.push(h.try_clone()?);
            let writers = Arc::clone(&hub_writers);
            let links = Arc::clone(&links);
            let mut h = h;
            thread::spawn(move || {
                while let Ok(frame) = read_frame(&mut h) {
                    if frame.len() < Envelope::HEADER_LEN {
                        continue;
                    }
                    let to = u32::from_le_bytes([frame[13], frame[14], frame[15], frame[16]]);
                    if !links.is_open(to) {
                        continue;
                    }
                    if let Some(w) = writers.get(to as usize) {
                        let mut w = w.lock().expect("hub writer poisoned");
                        let _ = write_frame(&mut w, &frame);
                    }
                }
            });
        }
        let mut writers = Vec::with_capacity(parties);
        let mut receivers = Vec::with_capacity(parties);
        for c in clients {
            sockets.push(c.try_clone()?);
            writers.push(Mutex::new(c.try_clone()?));
            let (tx, rx) = mpsc::channel();
            receivers.push(Mutex::new(rx));
            let mut c = c;
            thread::spawn(move || {
                while let Ok(frame) = read_frame(&mut c) {
                    match Envelope::decode(&frame) {
                        Ok(env) => {
                            if tx.send(env).is_err() {
                                break;
                            }
                        }
                        Err(_) => continue,
                    }
                }
            });
        }
        Ok(Self { writers, receivers, links, sockets, latency })
    }
}

impl Transport for TcpLoopback {
    fn send(&self, env: Envelope) -> LabResult<()> {
        if !self.links.is_open(env.sender) {
            return Err(LabError::Closed { party: env.sender });
        }
        let w = self.writers.get(env.sender as usize).ok_or(LabError::Closed { party: env.sender })?;
        let bytes = env.encode();
        apply_latency(self.latency, bytes.len());
        let mut w = w.lock().expect("writer poisoned");
        write_frame(&mut w, &bytes)?;
        Ok(())
    }

    fn recv(&self, me: u32, timeout: Duration) -> LabResult<Envelope> {
        let rx = self.receivers.get(me as usize).ok_or(LabError::Closed { party: me })?;
        recv_from(rx, me, timeout)
    }

    fn close(&self, party: u32) {
        self.links.close(party);
    }

    fn is_open(&self, party: u32) -> bool {
        self.links.is_open(party)
    }
}

impl Drop for TcpLoopback {
    fn drop(&mut self) {
        for s in &self.sockets {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}

/// Logs every successfully sent envelope with a per-sender sequence number
/// and a timestamp relative to construction.
pub struct Recorder {
    inner: Arc<dyn Transport>,
    log: Mutex<Vec<Record>>,
    seq: Vec<AtomicU64>,
    start: Instant,
}

impl Recorder {
    pub fn new(inner: Arc<dyn Transport>, parties: usize) -> Self {
        Self { inner, log: Mutex::new(Vec::new()), seq: (0..parties).map(|_| AtomicU64::new(0)).collect(), start: Instant::now() }
    }

    pub fn take(&self) -> Vec<Record> {
        std::mem::take(&mut *self.log.lock().expect("log poisoned"))
    }
}

impl Transport for Recorder {
    fn send(&self, env: Envelope) -> LabResult<()> {
        let bytes = env.encode();
        let (phase, sender, receiver) = (env.phase, env.sender, env.receiver);
        self.inner.send(env)?;
        let seq = self.seq.get(sender as usize).map_or(0, |s| s.fetch_add(1, Ordering::SeqCst));
        let ts_us = self.start.elapsed().as_micros() as u64;
        self.log.lock().expect("log poisoned").push(Record { phase, sender, receiver, seq, ts_us, bytes });
        Ok(())
    }

    fn recv(&self, me: u32, timeout: Duration) -> LabResult<Envelope> {
        self.inner.recv(me, timeout)
    }

    fn close(&self, party: u32) {
        self.inner.close(party)
    }

    fn is_open(&self, party: u32) -> bool {
        self.inner.is_open(party)
    }
}
