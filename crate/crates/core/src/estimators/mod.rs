//! Zeroth-order gradient estimators built from noisy function values.
//!
//! One-point `G = Z·V/δ` with `Z = f(x+δU) + ξ`, the smoothing variant with
//! surface sampling of the unit ball, and two-point `G = (Z⁺ − Z⁻)·V/(2δ)`.
//! Each oracle carries the bias/variance envelope of its (function class,
//! noise, feedback) cell.

mod noise;
mod scheme;

pub use noise::{Coupling, NoiseModel};
pub use scheme::{ball_second_moment, scheme_moments, PerturbationScheme, SchemeMoments, MOMENT_SAMPLES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Norm;
use crate::oracle::{GradientOracle, OracleEnvelope, OracleQuery, OracleResponse};
use crate::rng::{uniform_in_unit_ball, StreamRng};
use crate::testbed::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionClass {
    /// Convex with Lipschitz gradient.
    ConvexSmooth,
    /// Three times continuously differentiable.
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    OnePoint,
    TwoPoint,
}

/// Bias/variance envelope for a (class, noise, feedback, scheme) cell, with
/// constants from the target's smoothness, bounds, and the scheme's moments.
pub fn envelope_for(
    class: FunctionClass,
    noise: &NoiseModel,
    feedback: Feedback,
    scheme: PerturbationScheme,
    f: &Objective,
    norm: Norm,
) -> Result<OracleEnvelope> {
    noise.validate()?;
    let d = f.dim();
    let m = scheme_moments(scheme, d, norm);
    let l = f.smoothness_in(norm);
    let b0 = f.sup_abs();
    let noise2 = noise.second_moment_sup(f);
    let one_point_c2 = 4.0 * m.v2 * (noise2 + b0 * b0);

    let b3 = || {
        f.third_deriv_bound_in(norm)
            .ok_or_else(|| Error::domain("the C3 envelope needs a third-derivative bound; the target is not C3"))
    };
    let (c1, p) = match class {
        FunctionClass::ConvexSmooth => (0.5 * l * m.v_u2, 1.0),
        FunctionClass::C3 => (b3()? / 6.0 * m.v_u3, 2.0),
    };

    match (feedback, noise.is_controlled()) {
        (Feedback::OnePoint, true) => Err(Error::domain(
            "unsupported oracle cell: controlled noise requires two-point feedback",
        )),
        (Feedback::OnePoint, false) if scheme == PerturbationScheme::Surface => {
            // Unbiased for f̃(x) = E f(x + δW); |f̃ − f| ≤ (L/2)δ² E‖W‖².
            let c1 = 0.5 * l * ball_second_moment(d, norm);
            OracleEnvelope::type_ii(c1, 2.0, one_point_c2, 2.0)
        }
        (Feedback::OnePoint, false) => OracleEnvelope::type_i(c1, p, one_point_c2, 2.0),
        (Feedback::TwoPoint, false) => {
            // E[(ξ⁺ − ξ⁻)²] = 2σ² for independent evaluations.
            let sigma_xi2 = 2.0 * noise2;
            let span = f.span();
            OracleEnvelope::type_i(c1, p, 4.0 * m.v2 * (sigma_xi2 + span * span), 2.0)
        }
        (Feedback::TwoPoint, true) => match class {
            FunctionClass::ConvexSmooth => {
                let b1_sq = noise.grad_second_moment_sup(f, norm);
                let c2 = 2.0 * m.v2_u2 * b1_sq + 0.5 * l * l * m.v2_u4;
                OracleEnvelope::type_i(c1, 1.0, c2, 0.0)
            }
            FunctionClass::C3 => OracleEnvelope::type_i(c1, 2.0, 4.0 * one_point_c2, 2.0),
        },
    }
}

/// A noisy zeroth-order gradient oracle for a fixed target.
#[derive(Debug, Clone)]
pub struct EstimatorOracle {
    target: Objective,
    scheme: PerturbationScheme,
    noise: NoiseModel,
    feedback: Feedback,
    class: FunctionClass,
    norm: Norm,
    envelope: OracleEnvelope,
}

impl EstimatorOracle {
    pub fn new(
        target: Objective,
        scheme: PerturbationScheme,
        noise: NoiseModel,
        feedback: Feedback,
        class: FunctionClass,
    ) -> Result<Self> {
        Self::with_norm(target, scheme, noise, feedback, class, Norm::Euclidean)
    }

    pub fn with_norm(
        target: Objective,
        scheme: PerturbationScheme,
        noise: NoiseModel,
        feedback: Feedback,
        class: FunctionClass,
        norm: Norm,
    ) -> Result<Self> {
        let envelope = envelope_for(class, &noise, feedback, scheme, &target, norm)?;
        Ok(Self {
            target,
            scheme,
            noise,
            feedback,
            class,
            norm,
            envelope,
        })
    }

    /// The smoothing oracle: one-point feedback with surface sampling.
    pub fn smoothing(target: Objective, noise: NoiseModel) -> Result<Self> {
        Self::new(
            target,
            PerturbationScheme::Surface,
            noise,
            Feedback::OnePoint,
            FunctionClass::ConvexSmooth,
        )
    }

    /// Replaces the computed envelope, e.g. with tighter problem-specific constants.
    pub fn with_envelope(mut self, envelope: OracleEnvelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn scheme(&self) -> PerturbationScheme {
        self.scheme
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn feedback(&self) -> Feedback {
        self.feedback
    }

    pub fn class(&self) -> FunctionClass {
        self.class
    }

    /// Function evaluations consumed per query.
    pub fn evaluations(&self) -> usize {
        match self.feedback {
            Feedback::OnePoint => 1,
            Feedback::TwoPoint => 2,
        }
    }

    /// `x + δU/max(1, ‖U‖)`: inside the δ-vicinity for every scheme, and equal
    /// to the query point `x + δU` whenever `‖U‖ ≤ 1`.
    fn vicinity_point(&self, x: &[f64], u: &[f64], delta: f64, sign: f64) -> Vec<f64> {
        let s = sign * delta / self.norm.eval(u).max(1.0);
        x.iter().zip(u).map(|(xi, ui)| xi + s * ui).collect()
    }
}

/// One-point estimate `G = (f(x + δU) + ξ)·V/δ`.
pub fn one_point_estimate(o: &EstimatorOracle, q: &OracleQuery, rng: &mut StreamRng) -> Result<OracleResponse> {
    if o.feedback != Feedback::OnePoint {
        return Err(Error::Precondition("one-point estimate on a two-point oracle".into()));
    }
    q.validate_in(o.target.domain())?;
    let (u, v) = o.scheme.sample(o.target.dim(), rng);
    let xp: Vec<f64> = q.x.iter().zip(&u).map(|(x, ui)| x + q.delta * ui).collect();
    let psi = o.noise.draw_psi(rng);
    let z = o.noise.observe(&o.target, &xp, psi, rng);
    let scale = z / q.delta;
    let g = v.iter().map(|vi| vi * scale).collect();
    let y = o.vicinity_point(&q.x, &u, q.delta, 1.0);
    OracleResponse::new(q, o.norm, g, y)
}

/// Smoothing estimate: one-point with `U` uniform on the unit sphere and `V = d·U`.
pub fn smoothing_estimate(o: &EstimatorOracle, q: &OracleQuery, rng: &mut StreamRng) -> Result<OracleResponse> {
    if o.scheme != PerturbationScheme::Surface {
        return Err(Error::Precondition(format!(
            "smoothing estimate needs surface sampling, oracle uses {:?}",
            o.scheme
        )));
    }
    one_point_estimate(o, q, rng)
}

/// Two-point estimate `G = (Z⁺ − Z⁻)·V/(2δ)` at `X± = x ± δU`. Under controlled
/// noise both evaluations share one `ψ`.
pub fn two_point_estimate(o: &EstimatorOracle, q: &OracleQuery, rng: &mut StreamRng) -> Result<OracleResponse> {
    if o.feedback != Feedback::TwoPoint {
        return Err(Error::Precondition("two-point estimate on a one-point oracle".into()));
    }
    q.validate_in(o.target.domain())?;
    let (u, v) = o.scheme.sample(o.target.dim(), rng);
    let xp: Vec<f64> = q.x.iter().zip(&u).map(|(x, ui)| x + q.delta * ui).collect();
    let xm: Vec<f64> = q.x.iter().zip(&u).map(|(x, ui)| x - q.delta * ui).collect();
    let psi = o.noise.draw_psi(rng);
    let dz = o.noise.observe_difference(&o.target, &xp, &xm, psi, rng);
    let scale = dz / (2.0 * q.delta);
    let g = v.iter().map(|vi| vi * scale).collect();
    let y = o.vicinity_point(&q.x, &u, q.delta, 1.0);
    let y_minus = o.vicinity_point(&q.x, &u, q.delta, -1.0);
    OracleResponse::new(q, o.norm, g, y)?.with_second_arm(q, o.norm, y_minus)
}

impl GradientOracle for EstimatorOracle {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn norm(&self) -> Norm {
        self.norm
    }

    fn envelope(&self) -> OracleEnvelope {
        self.envelope
    }

    fn objective(&self) -> &Objective {
        &self.target
    }

    fn query(&self, q: &OracleQuery, rng: &mut StreamRng) -> Result<OracleResponse> {
        match self.feedback {
            Feedback::OnePoint => one_point_estimate(self, q, rng),
            Feedback::TwoPoint => two_point_estimate(self, q, rng),
        }
    }
}

/// Monte Carlo estimate of `f̃(x) = E f(x + δW)`, `W` uniform in the unit ball.
pub fn smoothed_eval(f: &Objective, x: &[f64], delta: f64, samples: usize, rng: &mut StreamRng) -> f64 {
    smoothed_eval_with_se(f, x, delta, samples, rng).0
}

/// [`smoothed_eval`] together with its standard error.
pub fn smoothed_eval_with_se(f: &Objective, x: &[f64], delta: f64, samples: usize, rng: &mut StreamRng) -> (f64, f64) {
    let n = samples.max(1);
    let (mut s, mut s2) = (0.0, 0.0);
    let mut p = vec![0.0; x.len()];
    for _ in 0..n {
        let w = uniform_in_unit_ball(x.len(), rng);
        for ((pi, xi), wi) in p.iter_mut().zip(x).zip(&w) {
            *pi = xi + delta * wi;
        }
        let v = f.eval(&p);
        s += v;
        s2 += v * v;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}
