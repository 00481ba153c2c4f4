//! Brute-force reference solutions shared by the integration tests.
#![allow(dead_code)]

use tabular_rl::mdp::make_random_mdp;
use tabular_rl::{DeterministicPolicy, Dims, EpisodicMdp};

/// Expected return from `(h, s)` under `policy`, by expanding every
/// trajectory and weighting it by its probability.
pub fn expand_value(mdp: &EpisodicMdp, policy: &DeterministicPolicy, h: usize, s: usize) -> f64 {
    if h == mdp.horizon() {
        return 0.0;
    }
    let a = policy.action(h, s);
    let mut total = mdp.reward(h, s, a);
    for (next, &p) in mdp.transition_row(h, s, a).iter().enumerate() {
        if p > 0.0 {
            total += p * expand_value(mdp, policy, h + 1, next);
        }
    }
    total
}

/// Every deterministic policy of `dims`, in odometer order.
pub fn all_policies(dims: Dims) -> Vec<DeterministicPolicy> {
    let cells = dims.states * dims.horizon;
    let count = dims.actions.pow(cells as u32);
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; cells];
    for _ in 0..count {
        out.push(DeterministicPolicy::new(dims, digits.clone()).unwrap());
        for d in digits.iter_mut() {
            *d += 1;
            if *d < dims.actions {
                break;
            }
            *d = 0;
        }
    }
    out
}

/// Value of every policy: `values[i][h * S + s]` for `h` in `0..H`.
pub fn enumerate_values(mdp: &EpisodicMdp, policies: &[DeterministicPolicy]) -> Vec<Vec<f64>> {
    let d = mdp.dims();
    policies
        .iter()
        .map(|pi| {
            let mut v = Vec::with_capacity(d.horizon * d.states);
            for h in 0..d.horizon {
                for s in 0..d.states {
                    v.push(expand_value(mdp, pi, h, s));
                }
            }
            v
        })
        .collect()
}

/// `V*_h(s)` as the best value over all enumerated policies.
pub fn brute_optimal(values: &[Vec<f64>]) -> Vec<f64> {
    let mut best = vec![f64::NEG_INFINITY; values[0].len()];
    for v in values {
        for (b, x) in best.iter_mut().zip(v) {
            *b = b.max(*x);
        }
    }
    best
}

/// Random shapes with `S * A * H <= 24` and at least two actions.
pub fn small_instances(count: usize) -> Vec<EpisodicMdp> {
    let mut shapes = Vec::new();
    for s in 1..=12usize {
        for a in 2..=12usize {
            for h in 1..=12usize {
                if s * a * h <= 24 {
                    shapes.push((s, a, h));
                }
            }
        }
    }
    (0..count)
        .map(|i| {
            let (s, a, h) = shapes[(i * 7) % shapes.len()];
            let sparsity = if i % 3 == 0 { 0.5 } else { 0.0 };
            make_random_mdp(s, a, h, 1000 + i as u64, sparsity).unwrap()
        })
        .collect()
}
