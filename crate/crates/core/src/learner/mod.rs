//! Learners behind a common [`Learner`] trait, looked up by name through a
//! [`LearnerRegistry`].

mod advantage;
mod classic;
mod constants;
mod hoeffding;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;

pub use advantage::UcbAdvantage;
pub use classic::ClassicQUcb;
pub use constants::{AlgoConstants, ConstantOverrides};
pub use hoeffding::HoeffdingStage;
pub use oracle::OracleAgent;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::mdp::{argmax, DeterministicPolicy, Dims, EpisodicMdp, Transition};

/// What a single `observe` call did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub stage_end: bool,
    pub q_changed: bool,
    pub ref_fixed_now: bool,
}

/// Structural properties a learner promises on every run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guarantees {
    /// `Q` never increases entrywise.
    pub monotone_q: bool,
    /// `Q` only changes at stage ends, so the local switching cost obeys
    /// the `4 H^2 S A ln(T / (2 S A H^2) + 1)` ceiling.
    pub stage_switching: bool,
}

pub trait Learner: Send {
    fn name(&self) -> &'static str;

    fn dims(&self) -> Dims;

    fn guarantees(&self) -> Guarantees;

    /// `[h][s][a]` action values for `h` in `0..H`.
    fn q_table(&self) -> &[f64];

    /// `[h][s]` values for `h` in `0..=H` (last layer is the zero boundary).
    fn v_table(&self) -> &[f64];

    /// `[h][s]` reference values for `h` in `0..=H`, if the learner keeps them.
    fn reference_table(&self) -> Option<&[f64]> {
        None
    }

    /// `[h][s]` flags marking frozen reference values.
    fn reference_fixed(&self) -> Option<&[bool]> {
        None
    }

    /// Records one transition. Must be called for every step of every
    /// episode, in trajectory order.
    fn observe(&mut self, step: &Transition) -> Result<StepReport>;

    /// Greedy action with lowest-index tie-break.
    fn select_action(&self, h: usize, s: usize) -> usize {
        let d = self.dims();
        let start = d.sah(h, s, 0);
        argmax(&self.q_table()[start..start + d.actions])
    }

    fn greedy_policy(&self) -> DeterministicPolicy {
        DeterministicPolicy::greedy(self.dims(), self.q_table())
    }

    fn refs_fixed(&self) -> usize {
        self.reference_fixed().map_or(0, |f| f.iter().filter(|&&x| x).count())
    }
}

impl fmt::Debug for dyn Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Learner").field("name", &self.name()).field("dims", &self.dims()).finish()
    }
}

/// Everything a factory may need to build a learner.
#[derive(Debug, Clone)]
pub struct LearnerSpec {
    pub dims: Dims,
    pub constants: AlgoConstants,
    /// Largest visit count any triple can reach.
    pub n_max: u64,
    /// Bonus constant of the incremental Q-learning baseline.
    pub bonus_cb: f64,
    /// Exact `Q*` laid out `[h][s][a]`; only the oracle agent needs it.
    pub optimal_q: Option<Vec<f64>>,
}

pub type Factory = fn(&LearnerSpec) -> Result<Box<dyn Learner>>;

struct Entry {
    summary: &'static str,
    factory: Factory,
}

/// Name-indexed learner factories.
pub struct LearnerRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl LearnerRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Registry with every learner shipped in this crate.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("advantage", "stage-based UCB with reference-advantage updates", |spec| {
            Ok(Box::new(UcbAdvantage::new(spec.dims, spec.constants, spec.n_max)))
        });
        r.register("hoeffding-stage", "stage-based UCB with the Hoeffding update only", |spec| {
            Ok(Box::new(HoeffdingStage::new(spec.dims, spec.constants, spec.n_max)))
        });
        r.register("classic-qucb", "incremental Q-learning, alpha_t = (H+1)/(H+t)", |spec| {
            Ok(Box::new(ClassicQUcb::new(spec.dims, spec.constants.iota, spec.bonus_cb)))
        });
        r.register("oracle", "follows the exact optimal policy (debug)", |spec| {
            let q = spec.optimal_q.clone().ok_or_else(|| {
                Error::InvalidConstant("oracle agent needs the exact Q* table".into())
            })?;
            Ok(Box::new(OracleAgent::new(spec.dims, q)?))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, summary: &'static str, factory: Factory) {
        self.entries.insert(name, Entry { summary, factory });
    }

    pub fn create(&self, name: &str, spec: &LearnerSpec) -> Result<Box<dyn Learner>> {
        let entry = self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: "algorithm",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        (entry.factory)(spec)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, e)| (*k, e.summary))
    }
}

/// Summary of one interleaved act/observe episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeOutcome {
    pub trajectory: Vec<Transition>,
    pub q_changed: bool,
    /// Steps whose observation modified an entry of `Q`.
    pub q_updates: u32,
    pub stage_ends: u32,
    pub refs_fixed_now: u32,
}

impl EpisodeOutcome {
    fn absorb(&mut self, step: Transition, report: StepReport) {
        self.trajectory.push(step);
        self.q_changed |= report.q_changed;
        self.q_updates += u32::from(report.q_changed);
        self.stage_ends += u32::from(report.stage_end);
        self.refs_fixed_now += u32::from(report.ref_fixed_now);
    }
}

pub fn check_dims(learner: &dyn Learner, mdp: &EpisodicMdp) -> Result<()> {
    if learner.dims() != mdp.dims() {
        return Err(Error::DimensionMismatch(format!(
            "learner {:?} vs model {:?}",
            learner.dims(),
            mdp.dims()
        )));
    }
    Ok(())
}

/// Plays one episode, choosing each action greedily from the current `Q`
/// and feeding every transition back before the next step.
pub fn run_episode<R: RngCore + ?Sized>(
    learner: &mut dyn Learner,
    mdp: &EpisodicMdp,
    initial_state: usize,
    rng: &mut R,
) -> Result<EpisodeOutcome> {
    check_dims(learner, mdp)?;
    let mut out = EpisodeOutcome { trajectory: Vec::with_capacity(mdp.horizon()), ..Default::default() };
    let mut s = initial_state;
    for h in 0..mdp.horizon() {
        let a = learner.select_action(h, s);
        let next = mdp.sample_next(h, s, a, rng);
        let step = Transition { h, state: s, action: a, reward: mdp.reward(h, s, a), next_state: next };
        let report = learner.observe(&step)?;
        out.absorb(step, report);
        s = next;
    }
    Ok(out)
}

/// Optimistic `Q`/`V` tables initialised to `H - h` (0-based `h`), with a
/// zero boundary layer for `V`.
#[derive(Debug, Clone)]
pub(crate) struct GreedyTables {
    pub dims: Dims,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl GreedyTables {
    pub fn optimistic(dims: Dims) -> Self {
        let mut q = Vec::with_capacity(dims.triples());
        let mut v = Vec::with_capacity((dims.horizon + 1) * dims.states);
        for h in 0..=dims.horizon {
            let init = (dims.horizon - h) as f64;
            v.extend(std::iter::repeat_n(init, dims.states));
            if h < dims.horizon {
                q.extend(std::iter::repeat_n(init, dims.states * dims.actions));
            }
        }
        Self { dims, q, v }
    }

    #[inline]
    pub fn row_max(&self, h: usize, s: usize) -> f64 {
        let start = self.dims.sah(h, s, 0);
        self.q[start..start + self.dims.actions].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    #[inline]
    pub fn check_step(&self, step: &Transition) -> Result<()> {
        let d = self.dims;
        if step.h >= d.horizon || step.state >= d.states || step.action >= d.actions || step.next_state >= d.states {
            return Err(Error::DimensionMismatch(format!("transition {step:?} outside {d:?}")));
        }
        Ok(())
    }
}

/// `num / den` with `0 / 0 = 0`.
#[inline]
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 { 0.0 } else { num / den }
}


#[cfg(test)]
mod tests {
    use super::test_support::spec;
    use super::*;
    use crate::mdp::{backward_induction, make_random_mdp};
    use crate::rng::seeded_stream;

    #[test]
    fn registry_lists_and_rejects() {
        let reg = LearnerRegistry::builtin();
        assert_eq!(reg.names(), ["advantage", "classic-qucb", "hoeffding-stage", "oracle"]);
        let d = Dims::new(2, 2, 2).unwrap();
        let err = reg.create("sarsa", &spec(d, 0.1)).unwrap_err();
        assert!(matches!(err, Error::UnknownName { .. }));
        assert!(reg.create("oracle", &spec(d, 0.1)).is_err());
        for name in ["advantage", "hoeffding-stage", "classic-qucb"] {
            let l = reg.create(name, &spec(d, 0.1)).unwrap();
            assert_eq!(l.name(), name);
        }
    }

    #[test]
    fn fresh_learners_pick_action_zero() {
        let reg = LearnerRegistry::builtin();
        let d = Dims::new(3, 4, 5).unwrap();
        for name in ["advantage", "hoeffding-stage", "classic-qucb"] {
            let l = reg.create(name, &spec(d, 0.1)).unwrap();
            for h in 0..5 {
                for s in 0..3 {
                    assert_eq!(l.select_action(h, s), 0);
                }
            }
        }
    }

    #[test]
    fn episode_has_horizon_steps_and_rejects_mismatch() {
        let mdp = make_random_mdp(3, 2, 4, 1, 0.0).unwrap();
        let reg = LearnerRegistry::builtin();
        let mut l = reg.create("advantage", &spec(mdp.dims(), 0.1)).unwrap();
        let out = run_episode(l.as_mut(), &mdp, 0, &mut seeded_stream(0, 0, "env")).unwrap();
        assert_eq!(out.trajectory.len(), 4);
        assert_eq!(out.trajectory[0].state, 0);
        for w in out.trajectory.windows(2) {
            assert_eq!(w[0].next_state, w[1].state);
        }
        let other = make_random_mdp(3, 2, 5, 1, 0.0).unwrap();
        assert!(run_episode(l.as_mut(), &other, 0, &mut seeded_stream(0, 0, "env")).is_err());
    }

    #[test]
    fn oracle_agent_follows_optimal_policy() {
        let mdp = make_random_mdp(3, 3, 4, 8, 0.0).unwrap();
        let (vt, pi) = backward_induction(&mdp);
        let mut s = spec(mdp.dims(), 0.1);
        s.optimal_q = Some(vt.q_table().to_vec());
        let l = LearnerRegistry::builtin().create("oracle", &s).unwrap();
        assert_eq!(l.greedy_policy(), pi);
    }
}
