//! Norms and convex bodies (boxes and Euclidean balls).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use rand::Rng;

/// A norm on `R^d`. The dual of the Euclidean norm is itself; `Max` and `One`
/// are dual to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Euclidean,
    Max,
    One,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::Euclidean => Norm::Euclidean,
            Norm::Max => Norm::One,
            Norm::One => Norm::Max,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Max => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            Norm::One => x.iter().map(|v| v.abs()).sum(),
        }
    }

    /// `‖g‖_*`, the dual norm of `g`.
    pub fn dual_norm(self, g: &[f64]) -> f64 {
        self.dual().eval(g)
    }

    /// `‖x - y‖`.
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self {
            Norm::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Norm::Max => x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs())),
            Norm::One => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        }
    }
}

/// Free-function form of [`Norm::dual_norm`].
pub fn dual_norm(norm: Norm, g: &[f64]) -> f64 {
    norm.dual_norm(g)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A convex body with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexBody {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConvexBody {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let body = ConvexBody::Box { lower, upper };
        body.validate()?;
        Ok(body)
    }

    /// `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let body = ConvexBody::Ball { center, radius };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexBody::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::domain(format!(
                        "box bounds must be nonempty and equal length (got {} and {})",
                        lower.len(),
                        upper.len()
                    )));
                }
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::domain(format!(
                            "box coordinate {i} has empty interior: [{lo}, {hi}]"
                        )));
                    }
                }
            }
            ConvexBody::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::domain("ball center must be a finite nonempty vector"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::domain(format!("ball radius must be > 0, got {radius}")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Box { lower, .. } => lower.len(),
            ConvexBody::Ball { center, .. } => center.len(),
        }
    }

    /// Euclidean projection onto the body.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            ConvexBody::Box { lower, upper } => {
                for ((xi, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
                    *xi = xi.clamp(*lo, *hi);
                }
            }
            ConvexBody::Ball { center, radius } => {
                let dist = Norm::Euclidean.distance(x, center);
                if dist > *radius {
                    let scale = radius / dist;
                    for (xi, c) in x.iter_mut().zip(center) {
                        *xi = c + (*xi - c) * scale;
                    }
                }
            }
        }
    }

    /// Membership with an absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexBody::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (lo, hi))| *xi >= lo - tol && *xi <= hi + tol),
            ConvexBody::Ball { center, radius } => Norm::Euclidean.distance(x, center) <= radius + tol,
        }
    }

    /// Box midpoint or ball center.
    pub fn center(&self) -> Vec<f64> {
        match self {
            ConvexBody::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect(),
            ConvexBody::Ball { center, .. } => center.clone(),
        }
    }

    /// `R = sup_{x ∈ K} ‖x‖`.
    pub fn radius_sup(&self, norm: Norm) -> f64 {
        match self {
            ConvexBody::Box { lower, upper } => {
                // The supremum of a convex function over a box is attained at a vertex;
                // for these norms the farthest vertex is coordinatewise.
                let far: Vec<f64> = lower
                    .iter()
                    .zip(upper)
                    .map(|(a, b)| if a.abs() > b.abs() { *a } else { *b })
                    .collect();
                norm.eval(&far)
            }
            ConvexBody::Ball { center, radius } => match norm {
                Norm::Euclidean => Norm::Euclidean.eval(center) + radius,
                Norm::Max => center.iter().fold(0.0, |m, c| m.max(c.abs() + radius)),
                Norm::One => Norm::One.eval(center) + radius * (center.len() as f64).sqrt(),
            },
        }
    }

    /// Coordinatewise bounding intervals of the body dilated by `margin`.
    pub fn bounding_box(&self, margin: f64) -> Vec<(f64, f64)> {
        match self {
            ConvexBody::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(a, b)| (a - margin, b + margin)).collect()
            }
            ConvexBody::Ball { center, radius } => center
                .iter()
                .map(|c| (c - radius - margin, c + radius + margin))
                .collect(),
        }
    }

    /// Uniform sample from the interior (shrunk by `shrink ∈ [0,1)` toward the center).
    pub fn sample_interior(&self, rng: &mut StreamRng, shrink: f64) -> Vec<f64> {
        let keep = 1.0 - shrink;
        match self {
            ConvexBody::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| {
                    let mid = 0.5 * (a + b);
                    let half = 0.5 * (b - a) * keep;
                    mid + half * (2.0 * rng.random::<f64>() - 1.0)
                })
                .collect(),
            ConvexBody::Ball { center, radius } => {
                let w = crate::rng::uniform_in_unit_ball(center.len(), rng);
                center.iter().zip(w).map(|(c, wi)| c + radius * keep * wi).collect()
            }
        }
    }
}

/// Free-function form of [`ConvexBody::project`].
pub fn project(body: &ConvexBody, x: &[f64]) -> Vec<f64> {
    body.project(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn box_projection_clamps() {
        let k = ConvexBody::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(k.project(&[0.5, 2.0]), vec![0.5, 1.0]);
        assert_eq!(k.project(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let k = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = k.project(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn dual_norms() {
        assert_eq!(dual_norm(Norm::Euclidean, &[3.0, 4.0]), 5.0);
        assert_eq!(dual_norm(Norm::Max, &[1.0, -2.0, 3.0]), 6.0);
        for n in [Norm::Euclidean, Norm::Max, Norm::One] {
            assert_eq!(dual_norm(n, &[0.0, 0.0]), 0.0);
            assert_eq!(n.dual().dual(), n);
        }
    }

    #[test]
    fn empty_interior_rejected() {
        assert!(ConvexBody::boxed(vec![1.0], vec![1.0]).is_err());
        assert!(ConvexBody::boxed(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(ConvexBody::ball(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn radius_sup_of_box_and_ball() {
        let k = ConvexBody::cube(4, -1.0, 1.0).unwrap();
        assert!((k.radius_sup(Norm::Euclidean) - 2.0).abs() < 1e-15);
        assert_eq!(k.radius_sup(Norm::Max), 1.0);
        let b = ConvexBody::ball(vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(b.radius_sup(Norm::Euclidean), 3.0);
    }

    #[test]
    fn projection_nonexpansive_and_idempotent() {
        let mut rng = RngStream::new(7, 0).rng();
        let bodies = [
            ConvexBody::boxed(vec![-1.0, 0.0, -2.0], vec![1.0, 0.5, 3.0]).unwrap(),
            ConvexBody::ball(vec![0.5, -0.5, 1.0], 1.5).unwrap(),
        ];
        for body in &bodies {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..3).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
                let y: Vec<f64> = (0..3).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
                let (px, py) = (body.project(&x), body.project(&y));
                assert!(Norm::Euclidean.distance(&px, &py) <= Norm::Euclidean.distance(&x, &y) + 1e-12);
                assert!(body.contains(&px, 1e-12));
                let ppx = body.project(&px);
                assert!(Norm::Euclidean.distance(&px, &ppx) <= 1e-12);
            }
        }
    }

    #[test]
    fn holder_inequality_on_samples() {
        let mut rng = RngStream::new(11, 3).rng();
        for norm in [Norm::Euclidean, Norm::Max, Norm::One] {
            for _ in 0..500 {
                let g: Vec<f64> = (0..5).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
                let x: Vec<f64> = (0..5).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
                assert!(dot(&g, &x).abs() <= norm.dual_norm(&g) * norm.eval(&x) + 1e-12);
            }
        }
    }
}
