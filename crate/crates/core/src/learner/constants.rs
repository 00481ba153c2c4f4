use crate::error::{Error, Result};
use crate::mdp::Dims;

/// Algorithmic constants for the stage-based learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConstants {
    /// Failure probability.
    pub p: f64,
    /// Confidence scale `ln(2 / p)`.
    pub iota: f64,
    /// Reference accuracy target.
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Visits to `(s, h)` after which the reference value is frozen.
    pub n0: u64,
}

/// Optional overrides applied on top of the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConstantOverrides {
    pub beta: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub n0: Option<u64>,
}

impl AlgoConstants {
    /// Defaults: `beta = 1/sqrt(H)`, `[c1, c2, c3] = [2, 2, 5]`, `c4 = 1`,
    /// `N0 = c4 S A H^5 iota / beta^2`.
    pub fn new(dims: Dims, p: f64) -> Result<Self> {
        Self::with_overrides(dims, p, &ConstantOverrides::default())
    }

    pub fn with_overrides(dims: Dims, p: f64, o: &ConstantOverrides) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidConstant(format!("p = {p} must lie in (0, 1)")));
        }
        let h = dims.horizon as f64;
        let iota = (2.0 / p).ln();
        let beta = o.beta.unwrap_or(1.0 / h.sqrt());
        let c = [o.c1.unwrap_or(2.0), o.c2.unwrap_or(2.0), o.c3.unwrap_or(5.0), o.c4.unwrap_or(1.0)];
        for (name, v) in [("beta", beta), ("c1", c[0]), ("c2", c[1]), ("c3", c[2]), ("c4", c[3])] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConstant(format!("{name} = {v} must be positive")));
            }
        }
        let n0 = match o.n0 {
            Some(0) => return Err(Error::InvalidConstant("N0 override must be positive".into())),
            Some(n) => n,
            None => {
                let raw = c[3] * (dims.states * dims.actions) as f64 * h.powi(5) * iota / (beta * beta);
                if raw >= u64::MAX as f64 { u64::MAX } else { raw.ceil() as u64 }
            }
        };
        Ok(Self { p, iota, beta, c1: c[0], c2: c[1], c3: c[2], c4: c[3], n0 })
    }
}
