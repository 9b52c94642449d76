//! Worst-case dropout plans: victims upload their masked model and then
//! disappear before recovery.

use lightsecagg_core::config::dropout_count;
use lightsecagg_core::stream::SeedStream;

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutPlan {
    pub rate: f64,
    /// Sorted victim ids.
    pub victims: Vec<u32>,
}

impl DropoutPlan {
    pub fn none() -> Self {
        Self { rate: 0.0, victims: Vec::new() }
    }

    pub fn explicit(n: usize, mut victims: Vec<u32>) -> Self {
        victims.sort_unstable();
        victims.dedup();
        let rate = if n == 0 { 0.0 } else { victims.len() as f64 / n as f64 };
        Self { rate, victims }
    }

    /// `floor(pN)` victims drawn uniformly without replacement.
    pub fn random(n: usize, p: f64, rng: &mut SeedStream) -> Self {
        let k = dropout_count(n, p);
        let mut ids: Vec<u32> = (1..=n as u32).collect();
        for i in 0..k {
            let j = i + rng.next_below((n - i) as u64) as usize;
            ids.swap(i, j);
        }
        let mut victims = ids[..k].to_vec();
        victims.sort_unstable();
        Self { rate: p, victims }
    }

    /// `floor(pN)` victims spaced evenly around the id ring.
    pub fn spread(n: usize, p: f64) -> Self {
        let k = dropout_count(n, p);
        let victims = (0..k).map(|i| (i * n / k.max(1)) as u32 + 1).collect();
        Self { rate: p, victims }
    }

    pub fn is_victim(&self, user: u32) -> bool {
        self.victims.binary_search(&user).is_ok()
    }

    pub fn survivors(&self, n: usize) -> Vec<u32> {
        (1..=n as u32).filter(|u| !self.is_victim(*u)).collect()
    }
}
