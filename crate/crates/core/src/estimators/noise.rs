use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Norm;
use crate::rng::{standard_normal, StreamRng};
use crate::testbed::{Objective, DOMAIN_MARGIN};

/// How the seed `ψ` enters the observed value `F(x, ψ)` under controlled noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `F(x, ψ) = f(x) + σψ`. Cancels exactly in a two-point difference.
    #[default]
    Additive,
    /// `F(x, ψ) = f(x) + σψ·Σ_i x_i`. Perturbs the gradient by `σψ·1`.
    Tilt,
}

/// Evaluation noise. `ψ` and `ξ` are standard Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    /// `Z = f(x) + σξ` with a fresh `ξ` per evaluation.
    Uncontrolled { sigma: f64 },
    /// `Z = F(x, ψ)` where the algorithm may reuse one `ψ` across evaluations.
    Controlled {
        sigma: f64,
        #[serde(default)]
        coupling: Coupling,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let sigma = self.sigma();
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "noise sigma must be finite and >= 0, got {sigma}"
            )))
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uncontrolled { sigma } | NoiseModel::Controlled { sigma, .. } => sigma,
        }
    }

    pub fn is_controlled(&self) -> bool {
        matches!(self, NoiseModel::Controlled { .. })
    }

    /// Draws the seed shared by the evaluations of one query (`0` if unused).
    pub fn draw_psi(&self, rng: &mut StreamRng) -> f64 {
        match self {
            NoiseModel::Controlled { .. } => standard_normal(rng),
            _ => 0.0,
        }
    }

    /// One noisy observation at `x`. `psi` is used only in controlled mode.
    pub fn observe(&self, f: &Objective, x: &[f64], psi: f64, rng: &mut StreamRng) -> f64 {
        let fx = f.eval(x);
        match *self {
            NoiseModel::None => fx,
            NoiseModel::Uncontrolled { sigma } => {
                if sigma == 0.0 {
                    fx
                } else {
                    fx + sigma * standard_normal(rng)
                }
            }
            NoiseModel::Controlled { sigma, coupling } => match coupling {
                Coupling::Additive => fx + sigma * psi,
                Coupling::Tilt => fx + sigma * psi * x.iter().sum::<f64>(),
            },
        }
    }

    /// `Z⁺ − Z⁻` for a two-point query. Controlled noise is written as
    /// `f(x⁺) − f(x⁻) + σψ(c(x⁺) − c(x⁻))`, so an additive `ψ` cancels exactly.
    pub fn observe_difference(
        &self,
        f: &Objective,
        x_plus: &[f64],
        x_minus: &[f64],
        psi: f64,
        rng: &mut StreamRng,
    ) -> f64 {
        match *self {
            NoiseModel::Controlled { sigma, coupling } => {
                let df = f.eval(x_plus) - f.eval(x_minus);
                let dc = match coupling {
                    Coupling::Additive => 0.0,
                    Coupling::Tilt => x_plus.iter().sum::<f64>() - x_minus.iter().sum::<f64>(),
                };
                df + sigma * psi * dc
            }
            _ => self.observe(f, x_plus, psi, rng) - self.observe(f, x_minus, psi, rng),
        }
    }

    /// `sup E[ξ²]` over the dilated domain, where `ξ = Z − f(x)`.
    pub fn second_moment_sup(&self, f: &Objective) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uncontrolled { sigma } => sigma * sigma,
            NoiseModel::Controlled { sigma, coupling } => match coupling {
                Coupling::Additive => sigma * sigma,
                Coupling::Tilt => {
                    let s: f64 = f
                        .domain()
                        .bounding_box(DOMAIN_MARGIN)
                        .iter()
                        .map(|(lo, hi)| lo.abs().max(hi.abs()))
                        .sum();
                    sigma * sigma * s * s
                }
            },
        }
    }

    /// `B1² = sup_K E_ψ‖∇_x F(x, ψ)‖_*²` for controlled noise.
    pub fn grad_second_moment_sup(&self, f: &Objective, norm: Norm) -> f64 {
        let m = f.sup_grad_dual(norm);
        match *self {
            NoiseModel::Controlled {
                sigma,
                coupling: Coupling::Tilt,
            } => {
                let ones = vec![1.0; f.dim()];
                let t = norm.dual_norm(&ones);
                if norm.dual() == Norm::Euclidean {
                    // Cross term vanishes since E[ψ] = 0.
                    m * m + sigma * sigma * t * t
                } else {
                    2.0 * (m * m + sigma * sigma * t * t)
                }
            }
            _ => m * m,
        }
    }
}
