//! Stage-based optimistic Q-learning with the reference-advantage update.
//!
//! Every `(s, a, h)` keeps a total visit count `n`, the visit count of the
//! current stage `n_check`, three intra-stage sums over the samples of the
//! current stage and two global sums over all samples:
//!
//! | field           | accumulates                         |
//! |-----------------|-------------------------------------|
//! | `mu_check`      | `V_{h+1}(s') - Vref_{h+1}(s')`      |
//! | `upsilon_check` | `V_{h+1}(s')`                       |
//! | `sigma_check`   | `(V_{h+1}(s') - Vref_{h+1}(s'))^2`  |
//! | `mu_ref`        | `Vref_{h+1}(s')`                    |
//! | `sigma_ref`     | `Vref_{h+1}(s')^2`                  |
//!
//! When `n` reaches a stage end, `Q_h(s, a)` becomes the minimum of the
//! Hoeffding estimate, the reference-advantage estimate and its old value,
//! and the intra-stage sums restart.

use super::{ratio, AlgoConstants, GreedyTables, Guarantees, Learner, StepReport};
use crate::error::{Error, Result};
use crate::mdp::{Dims, Transition};
use crate::schedule::StageSchedule;

/// Per-triple statistics feeding a stage-end update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulators {
    pub n: u64,
    pub n_check: u64,
    pub mu_check: f64,
    pub upsilon_check: f64,
    pub sigma_check: f64,
    pub mu_ref: f64,
    pub sigma_ref: f64,
}

/// The two exploration bonuses `(b, b_bar)`.
pub fn bonuses(acc: &Accumulators, c: &AlgoConstants, horizon: usize) -> (f64, f64) {
    let h = horizon as f64;
    let n = acc.n as f64;
    let nc = acc.n_check as f64;
    let iota = c.iota;
    // clamp cancellation noise; the true variances are non-negative
    let nu_ref = (ratio(acc.sigma_ref, n) - ratio(acc.mu_ref, n).powi(2)).max(0.0);
    let nu_check = (ratio(acc.sigma_check, nc) - ratio(acc.mu_check, nc).powi(2)).max(0.0);
    let i34 = iota.powf(0.75);
    let b = c.c1 * ratio(nu_ref * iota, n).sqrt()
        + c.c2 * ratio(nu_check * iota, nc).sqrt()
        + c.c3
            * (ratio(h * iota, n)
                + ratio(h * iota, nc)
                + ratio(h * i34, n.powf(0.75))
                + ratio(h * i34, nc.powf(0.75)));
    let b_bar = 2.0 * ratio(h * h * iota, nc).sqrt();
    (b, b_bar)
}

/// The new `Q_h(s, a)` after a stage end.
pub fn stage_target(reward: f64, old_q: f64, acc: &Accumulators, c: &AlgoConstants, horizon: usize) -> f64 {
    let (b, b_bar) = bonuses(acc, c, horizon);
    let n = acc.n as f64;
    let nc = acc.n_check as f64;
    let hoeffding = reward + ratio(acc.upsilon_check, nc) + b_bar;
    let advantage = reward + ratio(acc.mu_ref, n) + ratio(acc.mu_check, nc) + b;
    hoeffding.min(advantage).min(old_q)
}

#[derive(Debug, Clone)]
pub struct UcbAdvantage {
    tables: GreedyTables,
    /// `[h][s]`, `h` in `0..=H`.
    vref: Vec<f64>,
    ref_fixed: Vec<bool>,
    refs_fixed: usize,
    /// Visits to `(s, h)` summed over actions.
    state_visits: Vec<u64>,
    acc: Vec<Accumulators>,
    /// Index into the schedule of the stage each triple is in.
    stage: Vec<usize>,
    rewards: Vec<f64>,
    schedule: StageSchedule,
    constants: AlgoConstants,
}

impl UcbAdvantage {
    pub fn new(dims: Dims, constants: AlgoConstants, n_max: u64) -> Self {
        let mut vref = vec![dims.horizon as f64; (dims.horizon + 1) * dims.states];
        vref[dims.horizon * dims.states..].fill(0.0);
        Self {
            tables: GreedyTables::optimistic(dims),
            vref,
            ref_fixed: vec![false; dims.horizon * dims.states],
            refs_fixed: 0,
            state_visits: vec![0; dims.horizon * dims.states],
            acc: vec![Accumulators::default(); dims.triples()],
            stage: vec![0; dims.triples()],
            rewards: vec![0.0; dims.triples()],
            schedule: StageSchedule::new(dims.horizon, n_max),
            constants,
        }
    }

    pub fn constants(&self) -> &AlgoConstants {
        &self.constants
    }

    pub fn schedule(&self) -> &StageSchedule {
        &self.schedule
    }

    pub fn accumulators(&self, h: usize, s: usize, a: usize) -> Accumulators {
        self.acc[self.tables.dims.sah(h, s, a)]
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.tables.q[self.tables.dims.sah(h, s, a)]
    }

    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.tables.v[self.tables.dims.sh(h, s)]
    }

    pub fn v_ref(&self, h: usize, s: usize) -> f64 {
        self.vref[self.tables.dims.sh(h, s)]
    }

    /// Runs the stage-end update for `(s, a, h)`; fails unless the triple's
    /// visit count sits on a stage end with a full intra-stage window.
    pub fn stage_update(&mut self, h: usize, s: usize, a: usize) -> Result<bool> {
        let d = self.tables.dims;
        let i = d.sah(h, s, a);
        let acc = self.acc[i];
        let at_end = acc.n > 0
            && self.schedule.is_stage_end(acc.n).unwrap_or(false)
            && acc.n_check == self.schedule.length(self.schedule.stage_index(acc.n)?);
        if !at_end {
            return Err(Error::NotAtStageEnd { h, s, a, n: acc.n, n_stage: acc.n_check });
        }
        Ok(self.apply_stage_update(h, s, a))
    }

    fn apply_stage_update(&mut self, h: usize, s: usize, a: usize) -> bool {
        let d = self.tables.dims;
        let i = d.sah(h, s, a);
        let old = self.tables.q[i];
        let new = stage_target(self.rewards[i], old, &self.acc[i], &self.constants, d.horizon);
        self.tables.q[i] = new;
        self.tables.v[d.sh(h, s)] = self.tables.row_max(h, s);
        let acc = &mut self.acc[i];
        acc.n_check = 0;
        acc.mu_check = 0.0;
        acc.upsilon_check = 0.0;
        acc.sigma_check = 0.0;
        new < old
    }
}

impl Learner for UcbAdvantage {
    fn name(&self) -> &'static str {
        "advantage"
    }

    fn dims(&self) -> Dims {
        self.tables.dims
    }

    fn guarantees(&self) -> Guarantees {
        Guarantees { monotone_q: true, stage_switching: true }
    }

    fn q_table(&self) -> &[f64] {
        &self.tables.q
    }

    fn v_table(&self) -> &[f64] {
        &self.tables.v
    }

    fn reference_table(&self) -> Option<&[f64]> {
        Some(&self.vref)
    }

    fn reference_fixed(&self) -> Option<&[bool]> {
        Some(&self.ref_fixed)
    }

    fn refs_fixed(&self) -> usize {
        self.refs_fixed
    }

    fn observe(&mut self, step: &Transition) -> Result<StepReport> {
        self.tables.check_step(step)?;
        let d = self.tables.dims;
        let &Transition { h, state: s, action: a, reward, next_state } = step;
        let i = d.sah(h, s, a);
        let next = d.sh(h + 1, next_state);
        let v_next = self.tables.v[next];
        let ref_next = self.vref[next];
        let adv = v_next - ref_next;

        let acc = &mut self.acc[i];
        if acc.n >= self.schedule.n_max() {
            return Err(Error::OutOfRange { n: acc.n + 1, n_max: self.schedule.n_max() });
        }
        acc.n += 1;
        acc.n_check += 1;
        acc.mu_check += adv;
        acc.upsilon_check += v_next;
        acc.sigma_check += adv * adv;
        acc.mu_ref += ref_next;
        acc.sigma_ref += ref_next * ref_next;
        self.rewards[i] = reward;

        let mut report = StepReport::default();
        let j = self.stage[i];
        if acc.n == self.schedule.ends()[j] {
            if acc.n_check != self.schedule.lengths()[j] {
                return Err(Error::OrderingViolation(format!(
                    "(h={h}, s={s}, a={a}) closes stage {} with {} intra-stage visits, expected {}",
                    j + 1,
                    acc.n_check,
                    self.schedule.lengths()[j]
                )));
            }
            report.stage_end = true;
            report.q_changed = self.apply_stage_update(h, s, a);
            self.stage[i] += 1;
        }

        let sh = d.sh(h, s);
        self.state_visits[sh] += 1;
        if !self.ref_fixed[sh] && self.state_visits[sh] >= self.constants.n0 {
            self.vref[sh] = self.tables.v[sh];
            self.ref_fixed[sh] = true;
            self.refs_fixed += 1;
            report.ref_fixed_now = true;
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::ConstantOverrides;
    use proptest::prelude::*;

    fn constants(dims: Dims, p: f64, n0: Option<u64>) -> AlgoConstants {
        let o = ConstantOverrides { n0, ..Default::default() };
        AlgoConstants::with_overrides(dims, p, &o).unwrap()
    }

    /// p chosen so that iota = ln(2/p) = 1 exactly enough
    fn unit_iota(dims: Dims) -> AlgoConstants {
        let mut c = constants(dims, 0.5, None);
        c.iota = 1.0;
        c
    }

    fn step(h: usize, s: usize, a: usize, r: f64, next: usize) -> Transition {
        Transition { h, state: s, action: a, reward: r, next_state: next }
    }

    #[test]
    fn initial_tables() {
        let d = Dims::new(2, 2, 3).unwrap();
        let l = UcbAdvantage::new(d, constants(d, 0.1, None), 100);
        for h in 0..3 {
            for s in 0..2 {
                assert_eq!(l.v(h, s), (3 - h) as f64);
                assert_eq!(l.v_ref(h, s), 3.0);
                for a in 0..2 {
                    assert_eq!(l.q(h, s, a), (3 - h) as f64);
                    assert_eq!(l.accumulators(h, s, a), Accumulators::default());
                }
            }
            assert_eq!(l.v(3, 0), 0.0);
            assert_eq!(l.v_ref(3, 1), 0.0);
        }
    }

    #[test]
    fn first_observation_accumulates_current_values() {
        let d = Dims::new(2, 2, 3).unwrap();
        let mut l = UcbAdvantage::new(d, constants(d, 0.1, None), 100);
        let r = l.observe(&step(0, 0, 1, 0.3, 1)).unwrap();
        assert_eq!(r, StepReport::default());
        let acc = l.accumulators(0, 0, 1);
        assert_eq!((acc.n, acc.n_check), (1, 1));
        assert_eq!(acc.mu_check, -1.0);
        assert_eq!(acc.upsilon_check, 2.0);
        assert_eq!(acc.sigma_check, 1.0);
        assert_eq!(acc.mu_ref, 3.0);
        assert_eq!(acc.sigma_ref, 9.0);
    }

    #[test]
    fn last_step_uses_zero_boundary() {
        let d = Dims::new(2, 2, 3).unwrap();
        let mut l = UcbAdvantage::new(d, constants(d, 0.1, None), 100);
        l.observe(&step(2, 1, 0, 0.5, 0)).unwrap();
        let acc = l.accumulators(2, 1, 0);
        assert_eq!((acc.mu_check, acc.upsilon_check, acc.mu_ref, acc.sigma_ref), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn stage_end_after_horizon_visits() {
        let d = Dims::new(2, 2, 3).unwrap();
        let mut l = UcbAdvantage::new(d, constants(d, 0.1, None), 100);
        for k in 1..=3 {
            let r = l.observe(&step(2, 0, 0, 0.5, 0)).unwrap();
            assert_eq!(r.stage_end, k == 3);
        }
        let acc = l.accumulators(2, 0, 0);
        assert_eq!((acc.n, acc.n_check), (3, 0));
        assert_eq!((acc.mu_check, acc.upsilon_check, acc.sigma_check), (0.0, 0.0, 0.0));
        // global sums survive the reset
        assert_eq!(acc.mu_ref, 0.0);
        // stage 2 has length 4
        for k in 1..=4 {
            assert_eq!(l.observe(&step(2, 0, 0, 0.5, 0)).unwrap().stage_end, k == 4);
        }
    }

    #[test]
    fn bonus_hoeffding_substitution() {
        let d = Dims::new(1, 1, 3).unwrap();
        let acc = Accumulators { n: 36, n_check: 36, ..Default::default() };
        let (_, b_bar) = bonuses(&acc, &unit_iota(d), 3);
        assert!((b_bar - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_bonus_is_lower_order_only() {
        let d = Dims::new(1, 1, 4).unwrap();
        let c = constants(d, 0.05, None);
        // ten samples of the same (V, Vref) = (2.5, 4)
        let acc = Accumulators {
            n: 10,
            n_check: 10,
            mu_check: -15.0,
            upsilon_check: 25.0,
            sigma_check: 22.5,
            mu_ref: 40.0,
            sigma_ref: 160.0,
        };
        let (b, _) = bonuses(&acc, &c, 4);
        let (h, i) = (4.0, c.iota);
        let expected = c.c3 * (2.0 * h * i / 10.0 + 2.0 * h * i.powf(0.75) / 10f64.powf(0.75));
        assert!((b - expected).abs() < 1e-12, "{b} vs {expected}");
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let d = Dims::new(1, 1, 2).unwrap();
        let (b, b_bar) = bonuses(&Accumulators::default(), &unit_iota(d), 2);
        assert_eq!((b, b_bar), (0.0, 0.0));
    }

    #[test]
    fn manual_stage_update_requires_stage_end() {
        let d = Dims::new(1, 1, 2).unwrap();
        let mut l = UcbAdvantage::new(d, constants(d, 0.1, None), 100);
        assert!(matches!(l.stage_update(0, 0, 0), Err(Error::NotAtStageEnd { .. })));
        l.observe(&step(0, 0, 0, 0.0, 0)).unwrap();
        assert!(matches!(l.stage_update(0, 0, 0), Err(Error::NotAtStageEnd { .. })));
        l.observe(&step(0, 0, 0, 0.0, 0)).unwrap();
        // the observe call already consumed the stage end
        assert!(l.stage_update(0, 0, 0).is_err());
    }

    #[test]
    fn reference_fixed_once_at_threshold() {
        let d = Dims::new(1, 2, 1).unwrap();
        let mut l = UcbAdvantage::new(d, constants(d, 0.1, Some(5)), 1000);
        let mut fixed_at = vec![];
        for k in 0..40 {
            let r = l.observe(&step(0, 0, k % 2, 0.2, 0)).unwrap();
            if r.ref_fixed_now {
                fixed_at.push(k);
            }
        }
        assert_eq!(fixed_at, [4]);
        assert_eq!(l.refs_fixed(), 1);
        assert!(l.v_ref(0, 0) <= 1.0);
    }

    #[test]
    fn overflowing_schedule_is_an_error() {
        let d = Dims::new(1, 1, 1).unwrap();
        let mut l = UcbAdvantage::new(d, constants(d, 0.1, None), 3);
        // the schedule covers up to its last end (3 here)
        for _ in 0..3 {
            l.observe(&step(0, 0, 0, 0.0, 0)).unwrap();
        }
        assert!(matches!(l.observe(&step(0, 0, 0, 0.0, 0)), Err(Error::OutOfRange { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn q_monotone_and_v_is_row_max(seq in prop::collection::vec((0usize..3, 0usize..2, 0usize..3, 0.0f64..1.0), 1..400)) {
            let d = Dims::new(3, 2, 3).unwrap();
            let mut l = UcbAdvantage::new(d, constants(d, 0.2, Some(30)), 1 << 20);
            let mut rewards = std::collections::HashMap::new();
            let mut ref_writes = vec![0; 9];
            for (k, &(s, a, next, r)) in seq.iter().enumerate() {
                let h = k % 3;
                let r = *rewards.entry((h, s, a)).or_insert(r);
                let before = l.q_table().to_vec();
                let vref_before = l.reference_table().unwrap().to_vec();
                l.observe(&step(h, s, a, r, next)).unwrap();
                for (x, y) in l.q_table().iter().zip(&before) {
                    prop_assert!(x <= y);
                }
                for hh in 0..3 {
                    for ss in 0..3 {
                        let m = (0..2).map(|aa| l.q(hh, ss, aa)).fold(f64::MIN, f64::max);
                        prop_assert_eq!(l.v(hh, ss), m);
                    }
                }
                for (idx, (x, y)) in l.reference_table().unwrap().iter().zip(&vref_before).enumerate() {
                    prop_assert!(x <= y);
                    if x != y { ref_writes[idx] += 1; }
                }
            }
            prop_assert!(ref_writes.iter().all(|&w| w <= 1));
        }
    }
}
