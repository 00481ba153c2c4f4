//! Concurrent rounds: `M` agents run the same frozen greedy policy, their
//! trajectories are fed one by one into a single learner, and the rest of a
//! round is discarded as soon as a fed trajectory changes the greedy policy.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::learner::{check_dims, AlgoConstants, Learner, UcbAdvantage};
use crate::mdp::{DeterministicPolicy, EpisodicMdp, Transition};
use crate::rng::{index_below, seeded_stream, Stream};

pub const ROUND_CSV_HEADER: &str = "round,consumed,update_triggered,policy_version";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcurrentConfig {
    pub agents: usize,
    pub epsilon: f64,
    pub c5: f64,
    /// Total trajectory budget; replaces the formula when set.
    pub k_eps_override: Option<u64>,
}

impl ConcurrentConfig {
    pub fn new(agents: usize, epsilon: f64) -> Self {
        Self { agents, epsilon, c5: 1.0, k_eps_override: None }
    }

    /// Total number of trajectories to feed:
    /// `c5 S A H^3 ln(S A H / eps) / eps^2`, rounded up.
    pub fn budget(&self, states: usize, actions: usize, horizon: usize) -> Result<u64> {
        if self.agents == 0 {
            return Err(Error::InvalidConstant("need at least one agent".into()));
        }
        if let Some(k) = self.k_eps_override {
            return if k >= 1 { Ok(k) } else { Err(Error::BudgetTooSmall(0.0)) };
        }
        if !(self.epsilon > 0.0) || !(self.c5 > 0.0) {
            return Err(Error::InvalidConstant(format!(
                "epsilon = {} and c5 = {} must be positive",
                self.epsilon, self.c5
            )));
        }
        let sah = (states * actions * horizon) as f64;
        let sa = (states * actions) as f64;
        let raw = self.c5 * sa * (horizon as f64).powi(3) * (sah / self.epsilon).ln() / self.epsilon.powi(2);
        if !(raw >= 1.0) {
            return Err(Error::BudgetTooSmall(raw));
        }
        Ok(if raw >= u64::MAX as f64 { u64::MAX } else { raw.ceil() as u64 })
    }
}

/// One concurrent round. `round` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundLog {
    pub round: u64,
    pub generated: usize,
    pub consumed: usize,
    pub update_triggered: bool,
    /// Version of the policy all agents followed in this round.
    pub policy_version: u64,
}

impl RoundLog {
    pub fn write_csv_row(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            self.round, self.consumed, self.update_triggered as u8, self.policy_version
        );
    }
}

#[derive(Debug, Clone)]
pub struct ConcurrentOutcome {
    pub rounds: Vec<RoundLog>,
    pub output_policy: DeterministicPolicy,
    /// 0-based index of the consumed episode whose policy was returned.
    pub output_episode: u64,
    pub episodes_used: u64,
    pub budget: u64,
    /// Distinct greedy policies, indexed by version.
    pub policies: Vec<DeterministicPolicy>,
}

impl ConcurrentOutcome {
    pub fn early_break_rounds(&self) -> u64 {
        self.rounds.iter().filter(|r| r.consumed < r.generated).count() as u64
    }

    pub fn triggered_rounds(&self) -> u64 {
        self.rounds.iter().filter(|r| r.update_triggered).count() as u64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(ROUND_CSV_HEADER);
        s.push('\n');
        for r in &self.rounds {
            r.write_csv_row(&mut s);
        }
        s
    }
}

/// Runs the concurrent protocol with a fresh reference-advantage learner.
pub fn run_concurrent(
    mdp: &EpisodicMdp,
    config: &ConcurrentConfig,
    constants: AlgoConstants,
    seed: u64,
) -> Result<ConcurrentOutcome> {
    let budget = config.budget(mdp.num_states(), mdp.num_actions(), mdp.horizon())?;
    let n_max = budget.saturating_mul(mdp.horizon() as u64).saturating_add(1);
    let mut learner = UcbAdvantage::new(mdp.dims(), constants, n_max);
    run_concurrent_with(&mut learner, mdp, config, seed)
}

/// Runs the concurrent protocol on any learner.
///
/// Agent `i` draws transitions from stream `(seed, i, "env")`, so with a
/// single agent the trajectories coincide with a sequential run on stream
/// `(seed, 0, "env")`. The initial state of the `j`-th trajectory of a
/// round is the adversary's state for episode `consumed + j`.
pub fn run_concurrent_with(
    learner: &mut dyn Learner,
    mdp: &EpisodicMdp,
    config: &ConcurrentConfig,
    seed: u64,
) -> Result<ConcurrentOutcome> {
    check_dims(learner, mdp)?;
    let budget = config.budget(mdp.num_states(), mdp.num_actions(), mdp.horizon())?;
    let m = config.agents;
    let mut streams: Vec<Stream> = (0..m).map(|i| seeded_stream(seed, i as u64, "env")).collect();

    let mut policies = vec![learner.greedy_policy()];
    // (first consumed episode, policy version) per round
    let mut spans: Vec<(u64, u64)> = Vec::new();
    let mut rounds = Vec::new();
    let mut consumed_total: u64 = 0;
    let mut batch: Vec<Vec<Transition>> = Vec::with_capacity(m);

    while consumed_total < budget {
        let version = policies.len() as u64 - 1;
        let policy = policies.last().unwrap().clone();

        batch.clear();
        for (i, rng) in streams.iter_mut().enumerate() {
            let s1 = mdp.initial_state(consumed_total + i as u64);
            batch.push(mdp.sample_episode(&policy, s1, rng));
        }

        let mut consumed = 0;
        let mut triggered = false;
        for traj in &batch {
            for step in traj {
                let report = learner.observe(step)?;
                if report.q_changed && learner.select_action(step.h, step.state) != policy.action(step.h, step.state) {
                    triggered = true;
                }
            }
            consumed += 1;
            if triggered {
                break;
            }
        }

        spans.push((consumed_total, version));
        consumed_total += consumed as u64;
        rounds.push(RoundLog {
            round: rounds.len() as u64 + 1,
            generated: m,
            consumed,
            update_triggered: triggered,
            policy_version: version,
        });
        if triggered {
            let next = learner.greedy_policy();
            if next != policy {
                policies.push(next);
            }
        }
    }

    let mut pick = seeded_stream(seed, 0, "output");
    let output_episode = index_below(&mut pick, consumed_total as usize) as u64;
    let span = spans.partition_point(|&(start, _)| start <= output_episode) - 1;
    let output_policy = policies[spans[span].1 as usize].clone();

    Ok(ConcurrentOutcome { rounds, output_policy, output_episode, episodes_used: consumed_total, budget, policies })
}
