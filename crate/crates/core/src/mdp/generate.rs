//! Benchmark instance generators.

use super::{Dims, EpisodicMdp, InitialStateMode};
use crate::error::{Error, Result};
use crate::rng::{index_below, seeded_stream, unit_f64};

/// Which action is the good one at `s0` in each layer.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimalActions {
    Given(Vec<usize>),
    Seeded(u64),
}

/// Parameters of the layered two-state JAO chain.
///
/// Only the `S = A = 2` construction is provided.
#[derive(Debug, Clone, PartialEq)]
pub struct JaoParams {
    pub horizon: usize,
    pub epsilon: f64,
    /// Mixing probability; `16 / H` when `None`.
    pub delta: Option<f64>,
    pub optimal_actions: OptimalActions,
}

impl JaoParams {
    pub fn new(horizon: usize, epsilon: f64) -> Self {
        Self { horizon, epsilon, delta: None, optimal_actions: OptimalActions::Seeded(0) }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(16.0 / self.horizon as f64)
    }

    /// Resolves `a*_h` for every layer.
    pub fn resolve_optimal_actions(&self) -> Result<Vec<usize>> {
        match &self.optimal_actions {
            OptimalActions::Given(v) => {
                if v.len() != self.horizon || v.iter().any(|&a| a > 1) {
                    return Err(Error::Shape(format!(
                        "need {} optimal actions in {{0, 1}}, got {v:?}",
                        self.horizon
                    )));
                }
                Ok(v.clone())
            }
            OptimalActions::Seeded(seed) => {
                let mut rng = seeded_stream(*seed, 0, "jao-actions");
                Ok((0..self.horizon).map(|_| index_below(&mut rng, 2)).collect())
            }
        }
    }
}

/// Layered JAO chain: state 0 (`s0`) pays 0 and state 1 (`s1`) pays 1.
/// From `s1` every action leads to `[delta, 1 - delta]`; from `s0` the
/// layer's good action `a*_h` leads to `[1 - delta - eps, delta + eps]` and
/// the other to `[1 - delta, delta]`. Episodes start in `s0`.
pub fn make_jao_chain(params: &JaoParams) -> Result<EpisodicMdp> {
    let horizon = params.horizon;
    let delta = params.delta();
    let eps = params.epsilon;
    if !(delta > 0.0 && delta < 0.5 && delta + eps <= 1.0) {
        return Err(Error::InvalidDelta { delta, epsilon: eps });
    }
    let max_eps = (8.0 / horizon as f64).min(delta / 2.0);
    if !(eps >= 0.0 && eps <= max_eps) {
        return Err(Error::InvalidEpsilon { epsilon: eps, max: max_eps });
    }
    let good = params.resolve_optimal_actions()?;
    let dims = Dims::new(2, 2, horizon)?;
    EpisodicMdp::from_fn(
        dims,
        |h, s, a, t| {
            let to_s1 = match s {
                1 => 1.0 - delta,
                _ if a == good[h] => delta + eps,
                _ => delta,
            };
            if t == 1 { to_s1 } else { 1.0 - to_s1 }
        },
        |_, s, _| s as f64,
        InitialStateMode::Fixed(0),
    )
}

/// Random instance: rows uniform on the simplex (normalised exponentials),
/// rewards uniform on `[0, 1)` with each entry zeroed with probability
/// `sparsity`. Episodes start in state 0.
pub fn make_random_mdp(
    states: usize,
    actions: usize,
    horizon: usize,
    seed: u64,
    sparsity: f64,
) -> Result<EpisodicMdp> {
    let dims = Dims::new(states, actions, horizon)?;
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::Shape(format!("reward sparsity {sparsity} outside [0, 1]")));
    }
    let mut rng = seeded_stream(seed, 0, "random-mdp");
    let mut p = Vec::with_capacity(dims.triples() * states);
    let mut r = Vec::with_capacity(dims.triples());
    let mut row = vec![0.0; states];
    for _ in 0..dims.triples() {
        for w in row.iter_mut() {
            // 1 - u lies in (0, 1], so the log is finite
            *w = -(1.0 - unit_f64(&mut rng)).ln();
        }
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            p.extend(row.iter().map(|w| w / total));
        } else {
            p.extend((0..states).map(|i| (i == 0) as u8 as f64));
        }
        let reward = unit_f64(&mut rng);
        let keep = unit_f64(&mut rng) >= sparsity;
        r.push(if keep { reward } else { 0.0 });
    }
    EpisodicMdp::new(dims, p, r, InitialStateMode::Fixed(0))
}
