//! Experiment specs: a flat `key = value` text format describing a sweep
//! grid.
//!
//! ```text
//! # comments start with '#'
//! n         = [20, 40, 80]        # lists use brackets or bare commas
//! p         = 0.3
//! protocols = lightsecagg, secagg, secagg+
//! pipelines = [non-overlapped, overlapped]
//! d         = 10000
//! u         = auto                # or fixed:<k>
//! ```
//!
//! Keys: `n`, `p`, `protocols`, `pipelines`, `d`, `q`, `u`, `t`, `degree`,
//! `dropout`, `training_delay_ms`, `repeats`, `seed`, `transport`,
//! `transcripts`, `allow_recovery_failures`, `out`. See the README for
//! defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use lightsecagg_core::config::{dropout_count, TRule, UPolicy};
use lightsecagg_core::ProtocolConfig;

use crate::dropout::DropoutPlan;
use crate::error::{LabError, LabResult};
use crate::harness::{Cell, Pipeline, Protocol, RoundSpec};
use crate::seeds::{RoundSeeds, MODEL_SCHEME};
use crate::transport::TransportKind;

/// Largest user count a spec may ask for.
pub const MAX_USERS: usize = 200;

const KEYS: [&str; 17] = [
    "n",
    "p",
    "protocols",
    "pipelines",
    "d",
    "q",
    "u",
    "t",
    "degree",
    "dropout",
    "training_delay_ms",
    "repeats",
    "seed",
    "transport",
    "transcripts",
    "allow_recovery_failures",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VictimRule {
    Random,
    Spread,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub users: Vec<usize>,
    pub rates: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub pipelines: Vec<Pipeline>,
    pub model_len: usize,
    pub modulus: u64,
    pub u_rule: UPolicy,
    pub t_rule: TRule,
    pub degree: Option<usize>,
    pub victims: VictimRule,
    pub training_delay_ms: u64,
    pub repeats: usize,
    pub seed: u64,
    pub transport: TransportKind,
    pub transcripts: bool,
    pub allow_recovery_failures: bool,
    pub out: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            users: vec![20],
            rates: vec![0.3],
            protocols: vec![Protocol::LightSecAgg],
            pipelines: vec![Pipeline::NonOverlapped],
            model_len: 1000,
            modulus: 2_147_483_647,
            u_rule: UPolicy::Auto,
            t_rule: TRule::Half,
            degree: None,
            victims: VictimRule::Random,
            training_delay_ms: 0,
            repeats: 1,
            seed: 0,
            transport: TransportKind::InProcess,
            transcripts: false,
            allow_recovery_failures: false,
            out: PathBuf::from("results"),
        }
    }
}

fn err(field: &str, reason: impl Into<String>) -> LabError {
    LabError::Config { field: field.into(), reason: reason.into() }
}

fn split_list(v: &str) -> Vec<&str> {
    let v = v.trim();
    let v = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(v);
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> LabResult<Vec<T>> {
    split_list(v).into_iter().map(|s| f(s).ok_or_else(|| err(key, format!("cannot parse `{s}`")))).collect()
}

fn scalar<T: std::str::FromStr>(key: &str, v: &str) -> LabResult<T> {
    v.trim().parse().map_err(|_| err(key, format!("cannot parse `{}`", v.trim())))
}

fn boolean(key: &str, v: &str) -> LabResult<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        s => Err(err(key, format!("expected true or false, got `{s}`"))),
    }
}

fn fixed(key: &str, v: &str) -> LabResult<Option<usize>> {
    match v.trim() {
        "auto" | "half" => Ok(None),
        s => match s.strip_prefix("fixed:") {
            Some(k) => Ok(Some(scalar(key, k)?)),
            None => Err(err(key, format!("expected auto or fixed:<k>, got `{s}`"))),
        },
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err("spec", format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim().to_ascii_lowercase();
            if !KEYS.contains(&k.as_str()) {
                return Err(err(&k, format!("unknown key on line {}", i + 1)));
            }
            if seen.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(err(&k, format!("repeated on line {}", i + 1)));
            }
        }
        let mut s = Self::default();
        for (k, v) in &seen {
            let k = k.as_str();
            match k {
                "n" => s.users = list(k, v, |x| x.parse().ok())?,
                "p" => s.rates = list(k, v, |x| x.parse().ok())?,
                "protocols" => s.protocols = list(k, v, Protocol::parse)?,
                "pipelines" => s.pipelines = list(k, v, Pipeline::parse)?,
                "d" => s.model_len = scalar(k, v)?,
                "q" => s.modulus = scalar(k, v)?,
                "u" => s.u_rule = fixed(k, v)?.map_or(UPolicy::Auto, UPolicy::Fixed),
                "t" => s.t_rule = fixed(k, v)?.map_or(TRule::Half, TRule::Fixed),
                "degree" => s.degree = fixed(k, v)?,
                "dropout" => {
                    s.victims = match v.as_str() {
                        "random" => VictimRule::Random,
                        "spread" => VictimRule::Spread,
                        o => return Err(err(k, format!("expected random or spread, got `{o}`"))),
                    }
                }
                "training_delay_ms" => s.training_delay_ms = scalar(k, v)?,
                "repeats" => s.repeats = scalar(k, v)?,
                "seed" => s.seed = scalar(k, v)?,
                "transport" => {
                    s.transport = match v.as_str() {
                        "inprocess" | "in-process" => TransportKind::InProcess,
                        "tcp" => TransportKind::TcpLoopback,
                        o => return Err(err(k, format!("expected inprocess or tcp, got `{o}`"))),
                    }
                }
                "transcripts" => s.transcripts = boolean(k, v)?,
                "allow_recovery_failures" => s.allow_recovery_failures = boolean(k, v)?,
                "out" => s.out = PathBuf::from(v),
                _ => unreachable!("key list checked above"),
            }
        }
        s.cells()?;
        Ok(s)
    }

    /// Resolves `(N, p)` into a protocol configuration, naming the first
    /// invariant the cell breaks.
    pub fn config_for(&self, n: usize, p: f64) -> LabResult<ProtocolConfig> {
        let cell = format!("cell N={n} p={p}");
        if n == 0 || n > MAX_USERS {
            return Err(err("N", format!("{cell}: N must lie in 1..={MAX_USERS}")));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(err("p", format!("{cell}: p must lie in [0, 1)")));
        }
        if self.repeats == 0 {
            return Err(err("repeats", "must be at least 1"));
        }
        let u = self.u_rule.resolve(n, p);
        let t = self.t_rule.resolve(n);
        if u <= t {
            return Err(err("U", format!("{cell}: U = {u} must exceed T = {t}")));
        }
        if u > n {
            return Err(err("U", format!("{cell}: U = {u} exceeds N")));
        }
        let cfg = ProtocolConfig {
            users: n,
            privacy: t,
            dropout: n - u,
            target: u,
            model_len: self.model_len,
            modulus: self.modulus,
            weights: None,
        };
        cfg.validate().map_err(|e| match e {
            lightsecagg_core::Error::Config { field, reason } => err(field, format!("{cell}: {reason}")),
            other => err("spec", format!("{cell}: {other}")),
        })?;
        let dropped = dropout_count(n, p);
        if dropped > cfg.dropout && !self.allow_recovery_failures {
            return Err(err(
                "U",
                format!("{cell}: {dropped} victims leave {} survivors, fewer than U = {u}", n - dropped),
            ));
        }
        let field = cfg.field()?;
        MODEL_SCHEME.check_headroom(&field, n as u64).map_err(|_| err("q", format!("{cell}: too small to sum {n} models")))?;
        Ok(cfg)
    }

    pub fn cells(&self) -> LabResult<Vec<Cell>> {
        let mut out = Vec::new();
        for &n in &self.users {
            for &p in &self.rates {
                let cfg = self.config_for(n, p)?;
                let plan = match self.victims {
                    VictimRule::Random => DropoutPlan::random(n, p, &mut RoundSeeds::new(self.seed, 0).dropout()),
                    VictimRule::Spread => DropoutPlan::spread(n, p),
                };
                for &protocol in &self.protocols {
                    if protocol == Protocol::SecAggPlus {
                        let k = self.degree.unwrap_or_else(|| lightsecagg_core::baseline::default_degree(n));
                        if n < 2 || k == 0 || k >= n {
                            return Err(err("degree", format!("cell N={n} p={p}: degree {k} must lie in 1..N")));
                        }
                    }
                    for &pipeline in &self.pipelines {
                        let mut spec = RoundSpec::new(protocol, cfg.clone(), plan.clone());
                        spec.pipeline = pipeline;
                        spec.training_delay_ms = self.training_delay_ms;
                        spec.master_seed = self.seed;
                        spec.transport = self.transport;
                        spec.graph_degree = self.degree;
                        out.push(Cell { spec, repeats: self.repeats });
                    }
                }
            }
        }
        Ok(out)
    }
}
