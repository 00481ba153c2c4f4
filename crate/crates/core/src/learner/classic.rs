//! Incremental optimistic Q-learning with learning rate
//! `alpha_t = (H + 1) / (H + t)` and bonus `c_b sqrt(H^3 iota / t)`.

use super::{GreedyTables, Guarantees, Learner, StepReport};
use crate::error::Result;
use crate::mdp::{Dims, Transition};

#[derive(Debug, Clone)]
pub struct ClassicQUcb {
    tables: GreedyTables,
    visits: Vec<u64>,
    iota: f64,
    bonus_cb: f64,
}

impl ClassicQUcb {
    pub fn new(dims: Dims, iota: f64, bonus_cb: f64) -> Self {
        Self { tables: GreedyTables::optimistic(dims), visits: vec![0; dims.triples()], iota, bonus_cb }
    }

    pub fn learning_rate(&self, t: u64) -> f64 {
        let h = self.tables.dims.horizon as f64;
        (h + 1.0) / (h + t as f64)
    }

    pub fn bonus(&self, t: u64) -> f64 {
        let h = self.tables.dims.horizon as f64;
        self.bonus_cb * (h.powi(3) * self.iota / t as f64).sqrt()
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.tables.q[self.tables.dims.sah(h, s, a)]
    }

    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.tables.v[self.tables.dims.sh(h, s)]
    }

    /// One incremental update; returns the new `Q_h(s, a)`.
    pub fn classic_qucb_step(&mut self, step: &Transition) -> Result<f64> {
        self.tables.check_step(step)?;
        let d = self.tables.dims;
        let i = d.sah(step.h, step.state, step.action);
        self.visits[i] += 1;
        let t = self.visits[i];
        let alpha = self.learning_rate(t);
        let target = step.reward + self.tables.v[d.sh(step.h + 1, step.next_state)] + self.bonus(t);
        let q = (1.0 - alpha) * self.tables.q[i] + alpha * target;
        self.tables.q[i] = q;
        let cap = (d.horizon - step.h) as f64;
        self.tables.v[d.sh(step.h, step.state)] = cap.min(self.tables.row_max(step.h, step.state));
        Ok(q)
    }
}

impl Learner for ClassicQUcb {
    fn name(&self) -> &'static str {
        "classic-qucb"
    }

    fn dims(&self) -> Dims {
        self.tables.dims
    }

    fn guarantees(&self) -> Guarantees {
        Guarantees { monotone_q: false, stage_switching: false }
    }

    fn q_table(&self) -> &[f64] {
        &self.tables.q
    }

    fn v_table(&self) -> &[f64] {
        &self.tables.v
    }

    fn observe(&mut self, step: &Transition) -> Result<StepReport> {
        let i = self.tables.dims.sah(step.h, step.state, step.action);
        let old = self.tables.q.get(i).copied();
        let new = self.classic_qucb_step(step)?;
        Ok(StepReport { stage_end: false, q_changed: old != Some(new), ref_fixed_now: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::run_episode;
    use crate::mdp::make_random_mdp;
    use crate::rng::seeded_stream;

    #[test]
    fn learning_rate_values() {
        let l = ClassicQUcb::new(Dims::new(1, 1, 1).unwrap(), 1.0, 2.0);
        assert_eq!(l.learning_rate(1), 1.0);
        assert_eq!(l.learning_rate(3), 0.5);
        let l = ClassicQUcb::new(Dims::new(1, 1, 7).unwrap(), 1.0, 2.0);
        assert_eq!(l.learning_rate(1), 1.0);
    }

    #[test]
    fn bonus_at_h_cubed_iota_is_cb() {
        let l = ClassicQUcb::new(Dims::new(1, 1, 2).unwrap(), 1.5, 2.0);
        // H^3 iota = 12
        assert!((l.bonus(12) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn first_visit_replaces_q_with_target() {
        let mut l = ClassicQUcb::new(Dims::new(2, 2, 2).unwrap(), 1.0, 0.5);
        let t = Transition { h: 0, state: 1, action: 1, reward: 0.25, next_state: 0 };
        let q = l.classic_qucb_step(&t).unwrap();
        // V_2(0) = 1 initially, bonus = 0.5 sqrt(8)
        assert!((q - (0.25 + 1.0 + 0.5 * 8f64.sqrt())).abs() < 1e-15);
        // value capped at H - h + 1 = 2
        assert_eq!(l.v(0, 1), 2.0);
    }

    #[test]
    fn values_stay_in_range() {
        let mdp = make_random_mdp(3, 2, 4, 5, 0.2).unwrap();
        let mut l = ClassicQUcb::new(mdp.dims(), (2.0f64 / 0.1).ln(), 2.0);
        let mut rng = seeded_stream(3, 0, "env");
        for k in 0..5_000 {
            run_episode(&mut l, &mdp, mdp.initial_state(k), &mut rng).unwrap();
            for h in 0..=4 {
                for s in 0..3 {
                    let v = l.v(h, s);
                    assert!(v >= 0.0 && v <= (4 - h) as f64);
                }
            }
            assert!(l.q_table().iter().all(|&q| q >= 0.0));
        }
    }
}
