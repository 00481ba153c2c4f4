//! Stage-based learner restricted to the Hoeffding update
//! `Q <- min(r + upsilon_check / n_check + b_bar, Q)`.

use super::{ratio, AlgoConstants, GreedyTables, Guarantees, Learner, StepReport};
use crate::error::{Error, Result};
use crate::mdp::{Dims, Transition};
use crate::schedule::StageSchedule;

#[derive(Debug, Clone)]
pub struct HoeffdingStage {
    tables: GreedyTables,
    visits: Vec<u64>,
    stage_visits: Vec<u64>,
    upsilon_check: Vec<f64>,
    stage: Vec<usize>,
    rewards: Vec<f64>,
    schedule: StageSchedule,
    iota: f64,
}

impl HoeffdingStage {
    pub fn new(dims: Dims, constants: AlgoConstants, n_max: u64) -> Self {
        let n = dims.triples();
        Self {
            tables: GreedyTables::optimistic(dims),
            visits: vec![0; n],
            stage_visits: vec![0; n],
            upsilon_check: vec![0.0; n],
            stage: vec![0; n],
            rewards: vec![0.0; n],
            schedule: StageSchedule::new(dims.horizon, n_max),
            iota: constants.iota,
        }
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.tables.q[self.tables.dims.sah(h, s, a)]
    }

    /// `b_bar = 2 sqrt(H^2 iota / n_check)`.
    pub fn bonus(&self, n_check: u64) -> f64 {
        let h = self.tables.dims.horizon as f64;
        2.0 * ratio(h * h * self.iota, n_check as f64).sqrt()
    }

    /// Stage-end update for `(s, a, h)`; fails off a stage end.
    pub fn hoeffding_stage_update(&mut self, h: usize, s: usize, a: usize) -> Result<bool> {
        let i = self.tables.dims.sah(h, s, a);
        let (n, nc) = (self.visits[i], self.stage_visits[i]);
        let at_end = n > 0
            && self.schedule.is_stage_end(n).unwrap_or(false)
            && nc == self.schedule.length(self.schedule.stage_index(n)?);
        if !at_end {
            return Err(Error::NotAtStageEnd { h, s, a, n, n_stage: nc });
        }
        Ok(self.apply(h, s, a))
    }

    fn apply(&mut self, h: usize, s: usize, a: usize) -> bool {
        let d = self.tables.dims;
        let i = d.sah(h, s, a);
        let nc = self.stage_visits[i];
        let old = self.tables.q[i];
        let target = self.rewards[i] + ratio(self.upsilon_check[i], nc as f64) + self.bonus(nc);
        let new = target.min(old);
        self.tables.q[i] = new;
        self.tables.v[d.sh(h, s)] = self.tables.row_max(h, s);
        self.stage_visits[i] = 0;
        self.upsilon_check[i] = 0.0;
        new < old
    }
}

impl Learner for HoeffdingStage {
    fn name(&self) -> &'static str {
        "hoeffding-stage"
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

    fn observe(&mut self, step: &Transition) -> Result<StepReport> {
        self.tables.check_step(step)?;
        let d = self.tables.dims;
        let i = d.sah(step.h, step.state, step.action);
        if self.visits[i] >= self.schedule.n_max() {
            return Err(Error::OutOfRange { n: self.visits[i] + 1, n_max: self.schedule.n_max() });
        }
        self.visits[i] += 1;
        self.stage_visits[i] += 1;
        self.upsilon_check[i] += self.tables.v[d.sh(step.h + 1, step.next_state)];
        self.rewards[i] = step.reward;

        let mut report = StepReport::default();
        let j = self.stage[i];
        if self.visits[i] == self.schedule.ends()[j] {
            if self.stage_visits[i] != self.schedule.lengths()[j] {
                return Err(Error::OrderingViolation(format!(
                    "{step:?} closes stage {} with {} intra-stage visits",
                    j + 1,
                    self.stage_visits[i]
                )));
            }
            report.stage_end = true;
            report.q_changed = self.apply(step.h, step.state, step.action);
            self.stage[i] += 1;
        }
        Ok(report)
    }
}
