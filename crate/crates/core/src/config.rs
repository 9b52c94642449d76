//! Experiment-level protocol parameters.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Parameters governing one aggregation round.
///
/// `users` is N, `privacy` is T (colluding users tolerated), `dropout` is D
/// (dropped users tolerated) and `target` is U (the number of aggregated
/// shares the server waits for).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub users: usize,
    pub privacy: usize,
    pub dropout: usize,
    pub target: usize,
    pub model_len: usize,
    pub modulus: u64,
    /// Optional per-user sample counts `s_i`, indexed by user id minus one.
    pub weights: Option<Vec<u64>>,
}

impl ProtocolConfig {
    /// Checks `N - D >= U > T >= 0`, `T + D < N` and `q > N + U`.
    pub fn validate(&self) -> Result<()> {
        let (n, t, d, u) = (self.users, self.privacy, self.dropout, self.target);
        if n == 0 {
            return Err(cfg("N", "need at least one user".into()));
        }
        if u == 0 || u > n {
            return Err(cfg("U", format!("U = {u} must lie in [1, N = {n}]")));
        }
        if u <= t {
            return Err(cfg("U", format!("U = {u} must exceed T = {t}")));
        }
        if d >= n || n - d < u {
            return Err(cfg("U", format!("U = {u} exceeds N - D = {}", n.saturating_sub(d))));
        }
        if t + d >= n {
            return Err(cfg("T", format!("T + D = {} must be below N = {n}", t + d)));
        }
        if self.model_len == 0 {
            return Err(cfg("d", "model length must be positive".into()));
        }
        PrimeField::new(self.modulus).map_err(|e| cfg("q", format!("{e}")))?;
        if self.modulus <= (n + u) as u64 {
            return Err(cfg("q", format!("q = {} must exceed N + U = {}", self.modulus, n + u)));
        }
        if let Some(w) = &self.weights {
            if w.len() != n {
                return Err(cfg("weights", format!("expected {n} weights, got {}", w.len())));
            }
        }
        Ok(())
    }

    pub fn field(&self) -> Result<PrimeField> {
        PrimeField::new(self.modulus)
    }

    /// `U - T`, the number of sub-mask segments.
    pub fn segments(&self) -> usize {
        self.target - self.privacy
    }

    /// `ceil(d / (U - T))`, the length of every segment and encoded share.
    pub fn segment_len(&self) -> usize {
        self.model_len.div_ceil(self.segments())
    }

    pub fn weight(&self, user: u32) -> u64 {
        self.weights.as_ref().map_or(1, |w| w[user as usize - 1])
    }

    pub fn total_weight(&self, users: &[u32]) -> u64 {
        users.iter().map(|&u| self.weight(u)).sum()
    }
}

fn cfg(field: &'static str, reason: alloc::string::String) -> Error {
    Error::Config { field, reason }
}

/// Rule for choosing U from (N, p).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UPolicy {
    /// `floor(0.7 N)` when `p <= 0.3`, otherwise `floor(N / 2) + 1`.
    Auto,
    Fixed(usize),
}

impl UPolicy {
    pub fn resolve(self, n: usize, p: f64) -> usize {
        match self {
            UPolicy::Fixed(k) => k,
            UPolicy::Auto if p <= 0.3 + 1e-12 => (7 * n / 10).max(1),
            UPolicy::Auto => n / 2 + 1,
        }
    }
}

/// Rule for choosing T from N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TRule {
    /// `floor(N / 2)`.
    Half,
    Fixed(usize),
}

impl TRule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            TRule::Half => n / 2,
            TRule::Fixed(k) => k,
        }
    }
}

/// `floor(p * N)`, tolerant of binary rounding in `p`.
pub fn dropout_count(n: usize, p: f64) -> usize {
    let v = p * n as f64 + 1e-9;
    if v <= 0.0 {
        0
    } else {
        v as usize
    }
}
