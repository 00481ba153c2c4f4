//! Ground-truth regret, local switching cost, optimism and monotonicity
//! monitors.

use std::fmt::Write as _;

use crate::learner::{EpisodeOutcome, Learner};
use crate::mdp::{policy_evaluation, DeterministicPolicy, Dims, EpisodicMdp, ValueTables};

/// Entries of `Q` below `Q* - OPTIMISM_SLACK` count as violations.
pub const OPTIMISM_SLACK: f64 = 1e-9;

pub const EPISODE_CSV_HEADER: &str =
    "k,episode_regret,cum_regret,cum_switching_cost,cum_q_updates,cum_optimism_violations,ref_states_fixed";

/// One row of the per-episode log. `k` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub k: u64,
    pub episode_regret: f64,
    pub cum_regret: f64,
    pub cum_switching_cost: u64,
    pub cum_q_updates: u64,
    pub cum_optimism_violations: u64,
    pub ref_states_fixed: u64,
}

impl EpisodeRecord {
    pub fn write_csv_row(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.k,
            self.episode_regret,
            self.cum_regret,
            self.cum_switching_cost,
            self.cum_q_updates,
            self.cum_optimism_violations,
            self.ref_states_fixed
        );
    }
}

/// `V*_1(s1) - V^pi_1(s1)` by exact evaluation of `policy`.
pub fn episode_regret(mdp: &EpisodicMdp, optimal: &ValueTables, policy: &DeterministicPolicy, s1: usize) -> f64 {
    optimal.v(0, s1) - policy_evaluation(mdp, policy).v(0, s1)
}

/// Running local switching cost: the number of `(s, h)` cells whose greedy
/// action differs between consecutive episodes, summed over episodes.
#[derive(Debug, Clone)]
pub struct SwitchTracker {
    previous: Option<DeterministicPolicy>,
    total: u64,
}

impl Default for SwitchTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl SwitchTracker {
    pub fn new() -> Self {
        Self { previous: None, total: 0 }
    }

    /// Registers the next episode's policy and returns the number of cells
    /// that changed. The first policy seen costs nothing.
    pub fn record_switches(&mut self, policy: &DeterministicPolicy) -> u64 {
        let inc = match &self.previous {
            Some(prev) => prev.differing_cells(policy) as u64,
            None => 0,
        };
        if inc > 0 || self.previous.is_none() {
            self.previous = Some(policy.clone());
        }
        self.total += inc;
        inc
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Number of entries with `Q < Q* - 1e-9`.
pub fn check_optimism(q: &[f64], optimal_q: &[f64]) -> usize {
    q.iter().zip(optimal_q).filter(|(q, qs)| **q < **qs - OPTIMISM_SLACK).count()
}

/// Number of entries where `now > before`.
pub fn count_increases(now: &[f64], before: &[f64]) -> usize {
    now.iter().zip(before).filter(|(a, b)| a > b).count()
}

/// `4 H^2 S A ln(T / (2 S A H^2) + 1)`.
pub fn switching_bound(states: usize, actions: usize, horizon: usize, steps: u64) -> f64 {
    let sa = (states * actions) as f64;
    let h2 = (horizon * horizon) as f64;
    4.0 * h2 * sa * (steps as f64 / (2.0 * sa * h2) + 1.0).ln()
}

/// Value of the current greedy policy, recomputed only when the policy
/// version moves.
#[derive(Debug, Clone)]
pub struct PolicyValueCache {
    version: Option<u64>,
    values: Option<ValueTables>,
    evaluations: u64,
}

impl Default for PolicyValueCache {
    fn default() -> Self {
        Self::new()
    }
}

impl PolicyValueCache {
    pub fn new() -> Self {
        Self { version: None, values: None, evaluations: 0 }
    }

    pub fn get(&mut self, mdp: &EpisodicMdp, policy: &DeterministicPolicy, version: u64) -> &ValueTables {
        if self.version != Some(version) {
            self.values = Some(policy_evaluation(mdp, policy));
            self.version = Some(version);
            self.evaluations += 1;
        }
        self.values.as_ref().unwrap()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Totals accumulated by a [`RunMonitor`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MonitorTotals {
    pub episodes: u64,
    pub cum_regret: f64,
    pub switching_cost: u64,
    pub q_updates: u64,
    pub optimism_violations: u64,
    /// Episodes that ended with at least one optimism violation.
    pub optimism_violating_episodes: u64,
    /// Entries of `Q` that increased between consecutive episodes.
    pub monotonicity_breaches: u64,
    /// Episodes whose regret fell below `-1e-9`.
    pub negative_regret_episodes: u64,
    pub policy_versions: u64,
}

/// Streams per-episode records for one learner on one model.
///
/// Call [`RunMonitor::begin_episode`] before acting and
/// [`RunMonitor::end_episode`] afterwards. Policies change only through
/// `Q` updates, so the greedy policy and its value are refreshed only
/// after episodes that touched `Q`.
#[derive(Debug)]
pub struct RunMonitor<'a> {
    mdp: &'a EpisodicMdp,
    optimal: &'a ValueTables,
    tracker: SwitchTracker,
    policy: DeterministicPolicy,
    version: u64,
    cache: PolicyValueCache,
    previous_q: Vec<f64>,
    dirty: bool,
    current_violations: u64,
    pending_regret: f64,
    totals: MonitorTotals,
}

impl<'a> RunMonitor<'a> {
    pub fn new(mdp: &'a EpisodicMdp, optimal: &'a ValueTables, learner: &dyn Learner) -> Self {
        let policy = learner.greedy_policy();
        let mut tracker = SwitchTracker::new();
        tracker.record_switches(&policy);
        let q = learner.q_table().to_vec();
        let current_violations = check_optimism(&q, optimal.q_table()) as u64;
        Self {
            mdp,
            optimal,
            tracker,
            policy,
            version: 0,
            cache: PolicyValueCache::new(),
            previous_q: q,
            dirty: false,
            current_violations,
            pending_regret: 0.0,
            totals: MonitorTotals::default(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.mdp.dims()
    }

    /// Greedy policy in force for the episode about to start.
    pub fn policy(&self) -> &DeterministicPolicy {
        &self.policy
    }

    pub fn policy_version(&self) -> u64 {
        self.version
    }

    pub fn cache(&self) -> &PolicyValueCache {
        &self.cache
    }

    pub fn totals(&self) -> MonitorTotals {
        self.totals
    }

    /// Snapshots `pi_k` and computes the episode's regret from `s1`.
    pub fn begin_episode(&mut self, learner: &dyn Learner, s1: usize) -> f64 {
        if self.dirty {
            let next = learner.greedy_policy();
            if self.tracker.record_switches(&next) > 0 {
                self.policy = next;
                self.version += 1;
            }
            self.dirty = false;
        }
        let v_pi = self.cache.get(self.mdp, &self.policy, self.version).v(0, s1);
        self.pending_regret = self.optimal.v(0, s1) - v_pi;
        self.pending_regret
    }

    pub fn end_episode(&mut self, learner: &dyn Learner, outcome: &EpisodeOutcome) -> EpisodeRecord {
        let t = &mut self.totals;
        if outcome.q_changed {
            let q = learner.q_table();
            t.monotonicity_breaches += count_increases(q, &self.previous_q) as u64;
            self.previous_q.copy_from_slice(q);
            self.current_violations = check_optimism(q, self.optimal.q_table()) as u64;
            self.dirty = true;
        }
        t.episodes += 1;
        t.cum_regret += self.pending_regret;
        t.switching_cost = self.tracker.total();
        t.q_updates += u64::from(outcome.q_updates);
        t.optimism_violations += self.current_violations;
        t.optimism_violating_episodes += u64::from(self.current_violations > 0);
        t.negative_regret_episodes += u64::from(self.pending_regret < -1e-9);
        t.policy_versions = self.version + 1;
        EpisodeRecord {
            k: t.episodes,
            episode_regret: self.pending_regret,
            cum_regret: t.cum_regret,
            cum_switching_cost: t.switching_cost,
            cum_q_updates: t.q_updates,
            cum_optimism_violations: t.optimism_violations,
            ref_states_fixed: learner.refs_fixed() as u64,
        }
    }
}
