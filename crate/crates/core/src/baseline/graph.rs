//! Assortment graphs for the sparse pairwise-masking variant.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An undirected graph on users `1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssortmentGraph {
    n: usize,
    degree: usize,
    adj: Vec<Vec<u32>>,
}

impl AssortmentGraph {
    pub fn complete(n: usize) -> Self {
        let adj = (1..=n as u32).map(|i| (1..=n as u32).filter(|&j| j != i).collect()).collect();
        Self { n, degree: n.saturating_sub(1), adj }
    }

    /// The Harary graph `H_{k,N}` on a ring: each vertex links to the
    /// `floor(k/2)` nearest vertices on both sides, plus the diametrically
    /// opposite vertex when `k` is odd. No `k`-regular graph exists for odd
    /// `k` and odd `N`; in that case `k + 1` is used.
    pub fn harary(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams("graph needs at least two users".into()));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidParams(alloc::format!("degree {k} must lie in [1, N - 1 = {}]", n - 1)));
        }
        let k = if k % 2 == 1 && n % 2 == 1 { k + 1 } else { k };
        let mut adj: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
        let mut link = |a: usize, b: usize| {
            if a != b && !adj[a].contains(&(b as u32 + 1)) {
                adj[a].push(b as u32 + 1);
                adj[b].push(a as u32 + 1);
            }
        };
        for v in 0..n {
            for s in 1..=k / 2 {
                link(v, (v + s) % n);
            }
            if k % 2 == 1 {
                link(v, (v + n / 2) % n);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        Ok(Self { n, degree: k, adj })
    }

    pub fn users(&self) -> usize {
        self.n
    }

    /// The common vertex degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn neighbours(&self, user: u32) -> &[u32] {
        &self.adj[user as usize - 1]
    }

    pub fn deg(&self, user: u32) -> usize {
        self.adj[user as usize - 1].len()
    }

    pub fn adjacent(&self, a: u32, b: u32) -> bool {
        self.neighbours(a).binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for i in 1..=self.n as u32 {
            for &j in self.neighbours(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = alloc::vec![false; self.n];
        let mut stack = alloc::vec![1u32];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in self.neighbours(v) {
                if !seen[w as usize - 1] {
                    seen[w as usize - 1] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `max(2, ceil(2 log2 N))`, capped at `N - 1`.
pub fn default_degree(n: usize) -> usize {
    // ceil(2 log2 N) = ceil(log2 N^2) = bit length of N^2 - 1
    let sq = (n as u64).saturating_mul(n as u64);
    let log = if sq <= 1 { 0 } else { 64 - (sq - 1).leading_zeros() as usize };
    log.max(2).min(n.saturating_sub(1))
}

/// `ceil(k / 2)`.
pub fn local_threshold(degree: usize) -> usize {
    degree.div_ceil(2)
}
