//! Exact finite-horizon dynamic programming.

use super::{argmax, DeterministicPolicy, EpisodicMdp, ValueTables};

#[inline]
fn expected_next(row: &[f64], next_values: &[f64]) -> f64 {
    row.iter().zip(next_values).map(|(p, v)| p * v).sum()
}

/// Optimal values `V*`, `Q*` and the greedy optimal policy (lowest-index
/// tie-break), computed backwards from the zero boundary at `h = H`.
pub fn backward_induction(mdp: &EpisodicMdp) -> (ValueTables, DeterministicPolicy) {
    let d = mdp.dims();
    let mut tables = ValueTables::zeros(d);
    let mut actions = vec![0; d.horizon * d.states];
    for h in (0..d.horizon).rev() {
        let next = tables.v_layer(h + 1).to_vec();
        for s in 0..d.states {
            let row_start = d.sah(h, s, 0);
            for a in 0..d.actions {
                tables.q_mut()[row_start + a] =
                    mdp.reward(h, s, a) + expected_next(mdp.transition_row(h, s, a), &next);
            }
            let best = argmax(&tables.q_table()[row_start..row_start + d.actions]);
            actions[d.sh(h, s)] = best;
            let value = tables.q(h, s, best);
            tables.v_mut()[d.sh(h, s)] = value;
        }
    }
    let policy = DeterministicPolicy::new(d, actions).expect("argmax stays in range");
    (tables, policy)
}

/// Exact `V^pi` and `Q^pi` of a deterministic policy.
pub fn policy_evaluation(mdp: &EpisodicMdp, policy: &DeterministicPolicy) -> ValueTables {
    let d = mdp.dims();
    assert_eq!(d, policy.dims(), "policy and model dimensions differ");
    let mut tables = ValueTables::zeros(d);
    for h in (0..d.horizon).rev() {
        let next = tables.v_layer(h + 1).to_vec();
        for s in 0..d.states {
            for a in 0..d.actions {
                let q = mdp.reward(h, s, a) + expected_next(mdp.transition_row(h, s, a), &next);
                tables.q_mut()[d.sah(h, s, a)] = q;
            }
            let value = tables.q(h, s, policy.action(h, s));
            tables.v_mut()[d.sh(h, s)] = value;
        }
    }
    tables
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures::{constant_reward, two_step};
    use crate::mdp::{make_random_mdp, Dims};

    #[test]
    fn unit_rewards_give_remaining_steps() {
        let dims = Dims::new(3, 2, 5).unwrap();
        let (vt, _) = backward_induction(&constant_reward(dims, 1.0));
        for h in 0..=5 {
            for s in 0..3 {
                assert_eq!(vt.v(h, s), (5 - h) as f64);
            }
        }
    }

    #[test]
    fn two_step_optimum() {
        // enumerated by hand: (a0 at s0) -> 0.9 + 0, (a1 at s0) -> 0.1 + 1
        let (vt, pi) = backward_induction(&two_step());
        assert!((vt.v(0, 0) - 1.1).abs() < 1e-15);
        assert_eq!(pi.action(0, 0), 1);
        assert_eq!(vt.v(2, 0), 0.0);
        assert_eq!(vt.v(2, 1), 0.0);
    }

    #[test]
    fn two_step_suboptimal_policy_value() {
        let mdp = two_step();
        let pol = DeterministicPolicy::constant(mdp.dims(), 0).unwrap();
        let vt = policy_evaluation(&mdp, &pol);
        assert!((vt.v(0, 0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_rewards_zero_values() {
        let mdp = make_random_mdp(3, 2, 4, 9, 1.0).unwrap();
        let pol = DeterministicPolicy::constant(mdp.dims(), 1).unwrap();
        let vt = policy_evaluation(&mdp, &pol);
        assert!(vt.v_table().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bellman_consistency() {
        for seed in 0..20 {
            let mdp = make_random_mdp(4, 3, 6, seed, 0.3).unwrap();
            let (opt, pi) = backward_induction(&mdp);
            let eval = policy_evaluation(&mdp, &pi);
            for (a, b) in opt.v_table().iter().zip(eval.v_table()) {
                assert!((a - b).abs() <= 1e-12);
            }
            for h in 0..6 {
                for s in 0..4 {
                    let v = opt.v(h, s);
                    assert!((0.0..=(6 - h) as f64 + 1e-12).contains(&v));
                }
            }
        }
    }
}
