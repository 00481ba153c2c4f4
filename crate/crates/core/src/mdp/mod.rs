//! Tabular episodic MDPs with per-step transition laws and deterministic
//! rewards in `[0, 1]`.

mod generate;
mod io;
mod solve;

pub use generate::{make_jao_chain, make_random_mdp, JaoParams, OptimalActions};
pub use io::{parse_text, read_text_file, write_text};
pub use solve::{backward_induction, policy_evaluation};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{splitmix64, unit_f64};

/// Row sums must be within this distance of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Problem dimensions shared by models, learners and tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
}

impl Dims {
    pub fn new(states: usize, actions: usize, horizon: usize) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 {
            return Err(Error::Shape(format!(
                "S, A, H must be positive (got {states}, {actions}, {horizon})"
            )));
        }
        Ok(Self { states, actions, horizon })
    }

    /// Offset of `(h, s)` in a `[h][s]` table.
    #[inline]
    pub fn sh(&self, h: usize, s: usize) -> usize {
        h * self.states + s
    }

    /// Offset of `(h, s, a)` in a `[h][s][a]` table.
    #[inline]
    pub fn sah(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.states + s) * self.actions + a
    }

    /// Number of `(s, a, h)` triples.
    pub fn triples(&self) -> usize {
        self.states * self.actions * self.horizon
    }

    /// Total steps `T = K * H` after `episodes` episodes.
    pub fn steps(&self, episodes: u64) -> u64 {
        episodes * self.horizon as u64
    }
}

/// Lowest-index argmax of a row. NaN entries never win.
#[inline]
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// How the initial state of each episode is chosen. The whole sequence is
/// fixed before the run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateMode {
    Fixed(usize),
    Cyclic(Vec<usize>),
    SeededRandom(u64),
}

impl InitialStateMode {
    /// Initial state of episode `k` (0-based).
    pub fn state(&self, k: u64, num_states: usize) -> usize {
        match self {
            InitialStateMode::Fixed(s) => *s,
            InitialStateMode::Cyclic(seq) => seq[(k % seq.len() as u64) as usize],
            InitialStateMode::SeededRandom(seed) => {
                let z = splitmix64(splitmix64(*seed) ^ k);
                ((u128::from(z) * num_states as u128) >> 64) as usize
            }
        }
    }

    fn check(&self, num_states: usize) -> Result<()> {
        let bad = |s: usize| {
            Err(Error::Shape(format!("initial state {s} outside 0..{num_states}")))
        };
        match self {
            InitialStateMode::Fixed(s) if *s >= num_states => bad(*s),
            InitialStateMode::Cyclic(seq) if seq.is_empty() => {
                Err(Error::Shape("empty cyclic initial-state sequence".into()))
            }
            InitialStateMode::Cyclic(seq) => match seq.iter().find(|&&s| s >= num_states) {
                Some(&s) => bad(s),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// A validated episodic MDP. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMdp {
    dims: Dims,
    /// `[h][s][a][s']`
    transitions: Vec<f64>,
    /// Running sums of each transition row, used for inverse-CDF sampling.
    cumulative: Vec<f64>,
    /// `[h][s][a]`
    rewards: Vec<f64>,
    initial: InitialStateMode,
}

impl EpisodicMdp {
    pub fn new(
        dims: Dims,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial: InitialStateMode,
    ) -> Result<Self> {
        let n = dims.triples();
        if transitions.len() != n * dims.states {
            return Err(Error::Shape(format!(
                "transition tensor has {} entries, expected {}",
                transitions.len(),
                n * dims.states
            )));
        }
        if rewards.len() != n {
            return Err(Error::Shape(format!(
                "reward tensor has {} entries, expected {n}",
                rewards.len()
            )));
        }
        let mut cumulative = transitions.clone();
        for row in cumulative.chunks_exact_mut(dims.states) {
            let mut acc = 0.0;
            for p in row.iter_mut() {
                acc += *p;
                *p = acc;
            }
        }
        let mdp = Self { dims, transitions, cumulative, rewards, initial };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Builds a model from per-entry closures.
    pub fn from_fn(
        dims: Dims,
        mut transition: impl FnMut(usize, usize, usize, usize) -> f64,
        mut reward: impl FnMut(usize, usize, usize) -> f64,
        initial: InitialStateMode,
    ) -> Result<Self> {
        let mut p = Vec::with_capacity(dims.triples() * dims.states);
        let mut r = Vec::with_capacity(dims.triples());
        for h in 0..dims.horizon {
            for s in 0..dims.states {
                for a in 0..dims.actions {
                    r.push(reward(h, s, a));
                    p.extend((0..dims.states).map(|t| transition(h, s, a, t)));
                }
            }
        }
        Self::new(dims, p, r, initial)
    }

    /// Checks every row is a probability vector and every reward is in
    /// `[0, 1]`, reporting the first violation in `(h, s, a)` order.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        for h in 0..d.horizon {
            for s in 0..d.states {
                for a in 0..d.actions {
                    let row = self.transition_row(h, s, a);
                    let sum: f64 = row.iter().sum();
                    let negative = row.iter().any(|&p| !(p >= 0.0));
                    if negative || !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                        return Err(Error::NonStochasticRow { h, s, a, sum });
                    }
                    let r = self.reward(h, s, a);
                    if !(0.0..=1.0).contains(&r) {
                        return Err(Error::RewardOutOfRange { h, s, a, value: r });
                    }
                }
            }
        }
        self.initial.check(d.states)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_states(&self) -> usize {
        self.dims.states
    }

    pub fn num_actions(&self) -> usize {
        self.dims.actions
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    #[inline]
    pub fn transition_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = self.dims.sah(h, s, a) * self.dims.states;
        &self.transitions[start..start + self.dims.states]
    }

    #[inline]
    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[self.dims.sah(h, s, a)]
    }

    pub fn initial_mode(&self) -> &InitialStateMode {
        &self.initial
    }

    pub fn with_initial_mode(mut self, initial: InitialStateMode) -> Result<Self> {
        initial.check(self.dims.states)?;
        self.initial = initial;
        Ok(self)
    }

    /// Initial state of episode `k` (0-based).
    pub fn initial_state(&self, k: u64) -> usize {
        self.initial.state(k, self.dims.states)
    }

    /// Samples `s'` from `P_h(. | s, a)` by inverse CDF: the first index
    /// whose cumulative mass exceeds a uniform draw. Draws landing past the
    /// rounded total fall back to the last positive-mass state.
    #[inline]
    pub fn sample_next<R: RngCore + ?Sized>(&self, h: usize, s: usize, a: usize, rng: &mut R) -> usize {
        let start = self.dims.sah(h, s, a) * self.dims.states;
        let cdf = &self.cumulative[start..start + self.dims.states];
        let u = unit_f64(rng);
        match cdf.iter().position(|&c| u < c) {
            Some(i) => i,
            None => {
                let row = &self.transitions[start..start + self.dims.states];
                row.iter().rposition(|&p| p > 0.0).unwrap_or(self.dims.states - 1)
            }
        }
    }

    /// Rolls out one episode under a fixed policy.
    pub fn sample_episode<R: RngCore + ?Sized>(
        &self,
        policy: &DeterministicPolicy,
        initial_state: usize,
        rng: &mut R,
    ) -> Vec<Transition> {
        let mut s = initial_state;
        (0..self.dims.horizon)
            .map(|h| {
                let a = policy.action(h, s);
                let next = self.sample_next(h, s, a, rng);
                let t = Transition { h, state: s, action: a, reward: self.reward(h, s, a), next_state: next };
                s = next;
                t
            })
            .collect()
    }
}

/// One step `(s_h, a_h, r_h, s_{h+1})` of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub h: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Deterministic non-stationary policy, `[h][s] -> a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    dims: Dims,
    actions: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(dims: Dims, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != dims.horizon * dims.states {
            return Err(Error::Shape(format!(
                "policy has {} entries, expected {}",
                actions.len(),
                dims.horizon * dims.states
            )));
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= dims.actions) {
            return Err(Error::Shape(format!("policy action {a} outside 0..{}", dims.actions)));
        }
        Ok(Self { dims, actions })
    }

    pub fn constant(dims: Dims, action: usize) -> Result<Self> {
        Self::new(dims, vec![action; dims.horizon * dims.states])
    }

    /// Greedy policy of a `[h][s][a]` table with lowest-index tie-break.
    pub fn greedy(dims: Dims, q: &[f64]) -> Self {
        let actions = q
            .chunks_exact(dims.actions)
            .take(dims.horizon * dims.states)
            .map(argmax)
            .collect();
        Self { dims, actions }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[self.dims.sh(h, s)]
    }

    pub fn set(&mut self, h: usize, s: usize, a: usize) {
        assert!(a < self.dims.actions, "action {a} out of range");
        let i = self.dims.sh(h, s);
        self.actions[i] = a;
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.actions
    }

    /// Number of `(h, s)` cells where the two policies differ.
    pub fn differing_cells(&self, other: &Self) -> usize {
        self.actions.iter().zip(&other.actions).filter(|(a, b)| a != b).count()
    }
}

/// Value and action-value tables with the boundary layer `h = H` kept
/// explicitly (all zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    dims: Dims,
    /// `[h][s]`, `h` in `0..=H`
    v: Vec<f64>,
    /// `[h][s][a]`, `h` in `0..=H`
    q: Vec<f64>,
}

impl ValueTables {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            v: vec![0.0; (dims.horizon + 1) * dims.states],
            q: vec![0.0; (dims.horizon + 1) * dims.states * dims.actions],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[self.dims.sh(h, s)]
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[self.dims.sah(h, s, a)]
    }

    /// Value layer `h` (length S).
    pub fn v_layer(&self, h: usize) -> &[f64] {
        let start = self.dims.sh(h, 0);
        &self.v[start..start + self.dims.states]
    }

    /// Action values for steps `0..H`, laid out `[h][s][a]`.
    pub fn q_table(&self) -> &[f64] {
        &self.q[..self.dims.triples()]
    }

    pub fn v_table(&self) -> &[f64] {
        &self.v[..self.dims.horizon * self.dims.states]
    }

    pub(crate) fn v_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    pub(crate) fn q_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }
}
