//! Stage lengths `e_1 = H`, `e_{i+1} = floor((1 + 1/H) e_i)` and the set of
//! stage-end visit counts.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSchedule {
    horizon: usize,
    lengths: Vec<u64>,
    ends: Vec<u64>,
    n_max: u64,
}

impl StageSchedule {
    /// Schedule covering every visit count up to `n_max`.
    pub fn new(horizon: usize, n_max: u64) -> Self {
        assert!(horizon >= 1 && n_max >= 1, "horizon and n_max must be positive");
        let h = horizon as u64;
        // floor((1 + 1/H) e) == e + floor(e / H) for integer e
        Self::build(horizon, n_max, |e| e + e / h)
    }

    /// Ablation schedule with `e_{i+1} = max(1, floor(factor * e_i))` and
    /// `e_1 = H`.
    pub fn with_growth(horizon: usize, n_max: u64, factor: f64) -> Self {
        assert!(horizon >= 1 && n_max >= 1, "horizon and n_max must be positive");
        assert!(factor >= 1.0, "growth factor must be at least 1");
        Self::build(horizon, n_max, |e| ((factor * e as f64).floor() as u64).max(1))
    }

    fn build(horizon: usize, n_max: u64, next: impl Fn(u64) -> u64) -> Self {
        let mut lengths = vec![horizon as u64];
        let mut ends = vec![horizon as u64];
        while *ends.last().unwrap() < n_max {
            let e = next(*lengths.last().unwrap());
            lengths.push(e);
            ends.push(ends.last().unwrap() + e);
        }
        Self { horizon, lengths, ends, n_max }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    pub fn ends(&self) -> &[u64] {
        &self.ends
    }

    /// Length of stage `j` (1-based).
    pub fn length(&self, j: usize) -> u64 {
        self.lengths[j - 1]
    }

    /// Whether visit count `n` closes a stage.
    pub fn is_stage_end(&self, n: u64) -> Result<bool> {
        if n == 0 || n > self.n_max {
            return Err(Error::OutOfRange { n, n_max: self.n_max });
        }
        Ok(self.ends.binary_search(&n).is_ok())
    }

    /// The 1-based stage `j` with `end_{j-1} < n <= end_j`.
    pub fn stage_index(&self, n: u64) -> Result<usize> {
        if n == 0 || n > *self.ends.last().unwrap() {
            return Err(Error::OutOfRange { n, n_max: self.n_max });
        }
        Ok(self.ends.partition_point(|&e| e < n) + 1)
    }

    /// Number of stages that end at or before `n`.
    pub fn completed_stages(&self, n: u64) -> usize {
        self.ends.partition_point(|&e| e <= n)
    }
}
