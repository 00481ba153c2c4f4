//! Debug agent that acts greedily on the exact `Q*` and never learns.

use super::{Guarantees, Learner, StepReport};
use crate::error::{Error, Result};
use crate::mdp::{argmax, Dims, Transition};

#[derive(Debug, Clone)]
pub struct OracleAgent {
    dims: Dims,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl OracleAgent {
    pub fn new(dims: Dims, optimal_q: Vec<f64>) -> Result<Self> {
        if optimal_q.len() < dims.triples() {
            return Err(Error::DimensionMismatch(format!(
                "Q* has {} entries, expected {}",
                optimal_q.len(),
                dims.triples()
            )));
        }
        let mut q = optimal_q;
        q.truncate(dims.triples());
        let mut v: Vec<f64> = q.chunks_exact(dims.actions).map(|row| row[argmax(row)]).collect();
        v.extend(std::iter::repeat_n(0.0, dims.states));
        Ok(Self { dims, q, v })
    }
}

impl Learner for OracleAgent {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn dims(&self) -> Dims {
        self.dims
    }

    fn guarantees(&self) -> Guarantees {
        Guarantees { monotone_q: true, stage_switching: true }
    }

    fn q_table(&self) -> &[f64] {
        &self.q
    }

    fn v_table(&self) -> &[f64] {
        &self.v
    }

    fn observe(&mut self, _step: &Transition) -> Result<StepReport> {
        Ok(StepReport::default())
    }
}
