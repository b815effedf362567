//! Gradient-oracle contract: queries, responses, and bias/variance envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Norm};
use crate::rng::StreamRng;
use crate::testbed::Objective;

/// Relative and absolute slack when checking `‖x − Y‖ ≤ δ` in floating point.
const VICINITY_REL_TOL: f64 = 1e-12;
const VICINITY_ABS_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleType {
    /// Bias bounded on the gradient of `f` itself.
    TypeI,
    /// Unbiased for the gradient of a surrogate `f̃` close to `f` in sup-norm.
    TypeII,
}

/// Declared envelope `c1(δ) = C1·δ^p`, `c2(δ) = C2·δ^{-q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEnvelope {
    pub c1: f64,
    pub p: f64,
    pub c2: f64,
    pub q: f64,
    pub oracle_type: OracleType,
}

impl OracleEnvelope {
    pub fn new(c1: f64, p: f64, c2: f64, q: f64, oracle_type: OracleType) -> Result<Self> {
        for (name, v) in [("c1", c1), ("p", p), ("c2", c2), ("q", q)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!(
                    "envelope {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            c1,
            p,
            c2,
            q,
            oracle_type,
        })
    }

    pub fn type_i(c1: f64, p: f64, c2: f64, q: f64) -> Result<Self> {
        Self::new(c1, p, c2, q, OracleType::TypeI)
    }

    pub fn type_ii(c1: f64, p: f64, c2: f64, q: f64) -> Result<Self> {
        Self::new(c1, p, c2, q, OracleType::TypeII)
    }

    /// The envelope of an exact, noiseless gradient oracle.
    pub fn exact() -> Self {
        Self {
            c1: 0.0,
            p: 1.0,
            c2: 0.0,
            q: 0.0,
            oracle_type: OracleType::TypeI,
        }
    }

    /// `(c1(δ), c2(δ))`.
    pub fn check(&self, delta: f64) -> Result<(f64, f64)> {
        validate_delta(delta)?;
        Ok((self.c1 * delta.powf(self.p), self.c2 * delta.powf(-self.q)))
    }
}

/// Free-function form of [`OracleEnvelope::check`].
pub fn envelope_check(env: &OracleEnvelope, delta: f64) -> Result<(f64, f64)> {
    env.check(delta)
}

pub fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::DeltaOutOfRange(delta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleQuery {
    pub x: Vec<f64>,
    pub delta: f64,
}

impl OracleQuery {
    pub fn new(x: Vec<f64>, delta: f64) -> Result<Self> {
        validate_delta(delta)?;
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("query point must be a finite nonempty vector"));
        }
        Ok(Self { x, delta })
    }

    /// Checks `x ∈ K` up to a tiny absolute slack.
    pub fn validate_in(&self, body: &ConvexBody) -> Result<()> {
        if self.x.len() != body.dim() {
            return Err(Error::domain(format!(
                "query has dimension {} but the domain has dimension {}",
                self.x.len(),
                body.dim()
            )));
        }
        if !body.contains(&self.x, 1e-12) {
            return Err(Error::domain(format!("query point {:?} lies outside K", self.x)));
        }
        Ok(())
    }
}

/// An oracle's answer: the gradient estimate `g` and the point `y` it charges
/// the loss at. Two-point oracles also report the second arm in `y_minus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub g: Vec<f64>,
    pub y: Vec<f64>,
    pub y_minus: Option<Vec<f64>>,
}

impl OracleResponse {
    /// Builds a response, rejecting any `y` outside the δ-vicinity of the query.
    pub fn new(query: &OracleQuery, norm: Norm, g: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_vicinity(query, norm, &y)?;
        Ok(Self { g, y, y_minus: None })
    }

    pub fn with_second_arm(mut self, query: &OracleQuery, norm: Norm, y: Vec<f64>) -> Result<Self> {
        check_vicinity(query, norm, &y)?;
        self.y_minus = Some(y);
        Ok(self)
    }
}

fn check_vicinity(query: &OracleQuery, norm: Norm, y: &[f64]) -> Result<()> {
    let dist = norm.distance(&query.x, y);
    if dist <= query.delta * (1.0 + VICINITY_REL_TOL) + VICINITY_ABS_TOL {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "response point at distance {dist} exceeds delta = {}",
            query.delta
        )))
    }
}

/// A memoryless gradient oracle. Stateful oracles are not modelled.
pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// The primal norm; bias and variance are measured in its dual.
    fn norm(&self) -> Norm;

    fn envelope(&self) -> OracleEnvelope;

    /// The objective whose gradient is being estimated.
    fn objective(&self) -> &Objective;

    fn query(&self, q: &OracleQuery, rng: &mut StreamRng) -> Result<OracleResponse>;

    /// Whether the oracle is unbiased for `f` or for a surrogate of it.
    fn is_unbiased(&self) -> bool {
        let env = self.envelope();
        env.oracle_type == OracleType::TypeII || env.c1 == 0.0
    }
}

/// Returns `∇f(x)` with no noise; the `Y` reported is `x` itself.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    objective: Objective,
}

impl ExactOracle {
    pub fn new(objective: Objective) -> Self {
        Self { objective }
    }
}

impl GradientOracle for ExactOracle {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn norm(&self) -> Norm {
        Norm::Euclidean
    }

    fn envelope(&self) -> OracleEnvelope {
        OracleEnvelope::exact()
    }

    fn objective(&self) -> &Objective {
        &self.objective
    }

    fn query(&self, q: &OracleQuery, _rng: &mut StreamRng) -> Result<OracleResponse> {
        OracleResponse::new(q, Norm::Euclidean, self.objective.grad(&q.x), q.x.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_check_examples() {
        let e = OracleEnvelope::type_i(1.0, 2.0, 1.0, 2.0).unwrap();
        let (a, b) = e.check(0.1).unwrap();
        assert!((a - 0.01).abs() < 1e-15 && (b - 100.0).abs() < 1e-9);

        let e = OracleEnvelope::type_i(0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(e.check(0.5).unwrap(), (0.0, 1.0));

        let e = OracleEnvelope::type_i(2.0, 1.0, 3.0, 2.0).unwrap();
        assert_eq!(envelope_check(&e, 1.0).unwrap(), (2.0, 3.0));
    }

    #[test]
    fn delta_outside_unit_interval_is_rejected() {
        let e = OracleEnvelope::exact();
        for d in [0.0, -0.1, 1.0 + 1e-12, f64::NAN] {
            assert!(matches!(e.check(d), Err(Error::DeltaOutOfRange(_))));
            assert!(OracleQuery::new(vec![0.0], d).is_err());
        }
        assert!(OracleEnvelope::type_i(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn envelope_monotone_in_delta() {
        let e = OracleEnvelope::type_i(0.7, 1.5, 2.0, 2.0).unwrap();
        let mut prev = (0.0, f64::INFINITY);
        for k in 1..=100 {
            let (c1, c2) = e.check(k as f64 / 100.0).unwrap();
            assert!(c1 >= prev.0 && c2 <= prev.1);
            prev = (c1, c2);
        }
    }

    #[test]
    fn response_outside_vicinity_is_rejected() {
        let q = OracleQuery::new(vec![0.0, 0.0], 0.1).unwrap();
        assert!(OracleResponse::new(&q, Norm::Euclidean, vec![0.0; 2], vec![0.1, 0.0]).is_ok());
        assert!(OracleResponse::new(&q, Norm::Euclidean, vec![0.0; 2], vec![0.1, 0.1]).is_err());
        assert!(OracleResponse::new(&q, Norm::Max, vec![0.0; 2], vec![0.1, 0.1]).is_ok());
    }
}
