//! Objective functions with exact gradients and known optima.
//!
//! Every objective is a sum of one-dimensional components plus a constant,
//! `f(x) = Σ_i f_i(x_i) + c`, which covers every family used by the lower-bound
//! constructions and keeps metadata (smoothness, optimum, sup/span) exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Norm};
use crate::rng::StreamRng;
use rand::Rng;

/// Width of the dilation around `K` on which the objective must be evaluable.
pub const DOMAIN_MARGIN: f64 = 1.0;

const GRID_POINTS: usize = 10_000;

/// A one-dimensional convex building block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    /// `ε(x−v) + 2ε² ln(1 + e^{−(x−v)/ε})`, a smoothed `ε|x − v|`.
    SoftAbs { v: f64, eps: f64 },
    /// `½x² − vεx`.
    ScPair { v: f64, eps: f64 },
    /// `½a x² + b x`.
    Quadratic { a: f64, b: f64 },
    /// `½a_neg x²` for `x < 0`, `½a_pos x²` otherwise. Smooth but not C².
    KinkedQuadratic { a_neg: f64, a_pos: f64 },
    /// `scale · e^x`.
    Exp { scale: f64 },
}

/// `ln(1 + e^{-u})` without overflow.
fn log1p_exp_neg(u: f64) -> f64 {
    -u.min(0.0) + (-u.abs()).exp().ln_1p()
}

impl Component {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Component::SoftAbs { v, eps } | Component::ScPair { v, eps } => {
                v.is_finite() && eps.is_finite() && eps > 0.0
            }
            Component::Quadratic { a, b } => a.is_finite() && b.is_finite() && a >= 0.0,
            Component::KinkedQuadratic { a_neg, a_pos } => {
                a_neg.is_finite() && a_pos.is_finite() && a_neg >= 0.0 && a_pos >= 0.0
            }
            Component::Exp { scale } => scale.is_finite() && scale >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid component parameters: {self:?}")))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Component::SoftAbs { v, eps } => {
                let u = (x - v) / eps;
                eps * (x - v) + 2.0 * eps * eps * log1p_exp_neg(u)
            }
            Component::ScPair { v, eps } => 0.5 * x * x - v * eps * x,
            Component::Quadratic { a, b } => 0.5 * a * x * x + b * x,
            Component::KinkedQuadratic { a_neg, a_pos } => {
                let a = if x < 0.0 { a_neg } else { a_pos };
                0.5 * a * x * x
            }
            Component::Exp { scale } => scale * x.exp(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Component::SoftAbs { v, eps } => {
                // ε(1 − e^{−u})/(1 + e^{−u}) = ε·tanh(u/2)
                eps * (0.5 * (x - v) / eps).tanh()
            }
            Component::ScPair { v, eps } => x - v * eps,
            Component::Quadratic { a, b } => a * x + b,
            Component::KinkedQuadratic { a_neg, a_pos } => {
                if x < 0.0 {
                    a_neg * x
                } else {
                    a_pos * x
                }
            }
            Component::Exp { scale } => scale * x.exp(),
        }
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        match *self {
            Component::SoftAbs { v, eps } => {
                let c = (0.5 * (x - v) / eps).cosh();
                0.5 / (c * c)
            }
            Component::ScPair { .. } => 1.0,
            Component::Quadratic { a, .. } => a,
            Component::KinkedQuadratic { a_neg, a_pos } => {
                if x < 0.0 {
                    a_neg
                } else {
                    a_pos
                }
            }
            Component::Exp { scale } => scale * x.exp(),
        }
    }

    /// `sup |f'''|` on `[lo, hi]`, or `None` if the component is not C³.
    pub fn third_deriv_bound(&self, _lo: f64, hi: f64) -> Option<f64> {
        match *self {
            // |f'''| = sech²(u/2)·|tanh(u/2)|/(2ε), maximized at tanh² = 1/3.
            Component::SoftAbs { eps, .. } => Some(1.0 / (3.0 * 3f64.sqrt() * eps)),
            Component::ScPair { .. } | Component::Quadratic { .. } => Some(0.0),
            Component::KinkedQuadratic { a_neg, a_pos } => (a_neg == a_pos).then_some(0.0),
            Component::Exp { scale } => Some(scale * hi.exp()),
        }
    }

    /// `sup f''` on `[lo, hi]`.
    pub fn smoothness(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Component::SoftAbs { .. } => 0.5,
            Component::ScPair { .. } => 1.0,
            Component::Quadratic { a, .. } => a,
            Component::KinkedQuadratic { a_neg, a_pos } => {
                let mut l: f64 = 0.0;
                if lo < 0.0 {
                    l = l.max(a_neg);
                }
                if hi >= 0.0 {
                    l = l.max(a_pos);
                }
                l
            }
            Component::Exp { scale } => scale * hi.exp(),
        }
    }

    /// `inf f''` on `[lo, hi]`.
    pub fn strong_convexity(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Component::SoftAbs { .. } => 0.0,
            Component::ScPair { .. } => 1.0,
            Component::Quadratic { a, .. } => a,
            Component::KinkedQuadratic { a_neg, a_pos } => {
                let mut m = f64::INFINITY;
                if lo < 0.0 {
                    m = m.min(a_neg);
                }
                if hi >= 0.0 {
                    m = m.min(a_pos);
                }
                m
            }
            Component::Exp { scale } => scale * lo.exp(),
        }
    }

    /// Minimizer on `[lo, hi]`. Each component is convex, so this is the clamp
    /// of its unconstrained minimizer (with ±∞ for monotone components).
    pub fn argmin_on(&self, lo: f64, hi: f64) -> f64 {
        let free = match *self {
            Component::SoftAbs { v, .. } => v,
            Component::ScPair { v, eps } => v * eps,
            Component::Quadratic { a, b } => {
                if a > 0.0 {
                    -b / a
                } else if b > 0.0 {
                    f64::NEG_INFINITY
                } else if b < 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Component::KinkedQuadratic { .. } => 0.0,
            Component::Exp { scale } => {
                if scale > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
        };
        free.clamp(lo, hi)
    }
}

/// A separable objective `Σ_i f_i(x_i) + offset` on a convex body `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectiveSpec", into = "ObjectiveSpec")]
pub struct Objective {
    components: Vec<Component>,
    offset: f64,
    domain: ConvexBody,
    meta: Metadata,
}

/// Serialized form of an [`Objective`]; metadata is recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub components: Vec<Component>,
    #[serde(default)]
    pub offset: f64,
    pub domain: ConvexBody,
}

impl TryFrom<ObjectiveSpec> for Objective {
    type Error = Error;

    fn try_from(spec: ObjectiveSpec) -> Result<Self> {
        Objective::new(spec.components, spec.offset, spec.domain)
    }
}

impl From<Objective> for ObjectiveSpec {
    fn from(o: Objective) -> Self {
        ObjectiveSpec {
            components: o.components,
            offset: o.offset,
            domain: o.domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Metadata {
    axis_smoothness: Vec<f64>,
    axis_b3: Option<Vec<f64>>,
    smoothness: f64,
    strong_convexity: f64,
    f_star: f64,
    x_star: Vec<f64>,
    b3: Option<f64>,
    sup_abs: f64,
    span: f64,
    sup_grad_axes: Vec<f64>,
}

impl Objective {
    pub fn new(components: Vec<Component>, offset: f64, domain: ConvexBody) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("an objective needs at least one component"));
        }
        domain.validate()?;
        if components.len() != domain.dim() {
            return Err(Error::domain(format!(
                "{} components but the domain has dimension {}",
                components.len(),
                domain.dim()
            )));
        }
        for c in &components {
            c.validate()?;
        }
        if !offset.is_finite() {
            return Err(Error::domain("objective offset must be finite"));
        }
        let meta = Metadata::compute(&components, offset, &domain);
        Ok(Self {
            components,
            offset,
            domain,
            meta,
        })
    }

    /// One-dimensional objective on `[-1, 1]`.
    pub fn scalar(component: Component) -> Result<Self> {
        Self::new(vec![component], 0.0, ConvexBody::cube(1, -1.0, 1.0)?)
    }

    pub fn softabs(v: f64, eps: f64) -> Result<Self> {
        check_sign(v)?;
        Self::scalar(Component::SoftAbs { v, eps })
    }

    pub fn sc_pair(v: f64, eps: f64) -> Result<Self> {
        check_sign(v)?;
        Self::scalar(Component::ScPair { v, eps })
    }

    /// `½Σ a_i x_i² + b·x` on `[-1, 1]^d`.
    pub fn quadratic(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::domain("quadratic needs equal-length a and b"));
        }
        let comps = a
            .iter()
            .zip(b)
            .map(|(&a, &b)| Component::Quadratic { a, b })
            .collect::<Vec<_>>();
        let d = comps.len().max(1);
        Self::new(comps, 0.0, ConvexBody::cube(d, -1.0, 1.0)?)
    }

    /// Coordinatewise sum of one-dimensional objectives on the product of their domains.
    pub fn separable(parts: &[Objective]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::domain("separable composition of an empty list"));
        }
        let mut comps = Vec::new();
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        let mut offset = 0.0;
        for p in parts {
            if p.dim() != 1 {
                return Err(Error::domain("separable composition takes 1-d components"));
            }
            let ConvexBody::Box { lower: l, upper: u } = &p.domain else {
                return Err(Error::domain("separable components must live on intervals"));
            };
            comps.push(p.components[0]);
            lower.push(l[0]);
            upper.push(u[0]);
            offset += p.offset;
        }
        Self::new(comps, offset, ConvexBody::boxed(lower, upper)?)
    }

    /// Same function on a different domain.
    pub fn on(&self, domain: ConvexBody) -> Result<Self> {
        Self::new(self.components.clone(), self.offset, domain)
    }

    /// Same function plus a constant.
    pub fn with_offset(&self, offset: f64) -> Result<Self> {
        Self::new(self.components.clone(), offset, self.domain.clone())
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn domain(&self) -> &ConvexBody {
        &self.domain
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.components.iter().zip(x).map(|(c, xi)| c.eval(*xi)).sum::<f64>() + self.offset
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().zip(x).map(|(c, xi)| c.deriv(*xi)).collect()
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, c), xi) in out.iter_mut().zip(&self.components).zip(x) {
            *o = c.deriv(*xi);
        }
    }

    /// Smoothness `L` over the margin-dilated domain.
    pub fn smoothness(&self) -> f64 {
        self.meta.smoothness
    }

    /// Smoothness constant with respect to `norm`: for a diagonal Hessian the
    /// max-norm constant is the sum of the per-axis constants.
    pub fn smoothness_in(&self, norm: Norm) -> f64 {
        match norm {
            Norm::Max => self.meta.axis_smoothness.iter().sum(),
            Norm::Euclidean | Norm::One => self.meta.smoothness,
        }
    }

    /// Third-derivative bound with respect to `norm`, if C³.
    pub fn third_deriv_bound_in(&self, norm: Norm) -> Option<f64> {
        let axes = self.meta.axis_b3.as_ref()?;
        Some(match norm {
            Norm::Max => axes.iter().sum(),
            Norm::Euclidean | Norm::One => axes.iter().copied().fold(0.0, f64::max),
        })
    }

    /// Strong convexity `μ` over `K` w.r.t. the squared Euclidean norm.
    pub fn strong_convexity(&self) -> f64 {
        self.meta.strong_convexity
    }

    pub fn f_star(&self) -> f64 {
        self.meta.f_star
    }

    pub fn x_star(&self) -> &[f64] {
        &self.meta.x_star
    }

    /// `max |f'''|` across coordinates over the dilated domain, if C³.
    pub fn third_deriv_bound(&self) -> Option<f64> {
        self.meta.b3
    }

    /// `B0 = sup_D |f|` over the dilated domain.
    pub fn sup_abs(&self) -> f64 {
        self.meta.sup_abs
    }

    /// `sup_D f − inf_D f` over the dilated domain.
    pub fn span(&self) -> f64 {
        self.meta.span
    }

    /// `sup_K ‖∇f‖_*`.
    pub fn sup_grad_dual(&self, norm: Norm) -> f64 {
        let m = &self.meta.sup_grad_axes;
        match norm.dual() {
            Norm::Euclidean => m.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::One => m.iter().sum(),
            Norm::Max => m.iter().fold(0.0, |a, v| a.max(*v)),
        }
    }

    /// Optimization error `f(x) − f*`.
    pub fn error(&self, x: &[f64]) -> f64 {
        self.eval(x) - self.f_star()
    }
}

fn check_sign(v: f64) -> Result<()> {
    if v == 1.0 || v == -1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("sign parameter must be ±1, got {v}")))
    }
}

fn grid(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(move |i| lo + step * i as f64)
}

impl Metadata {
    fn compute(components: &[Component], offset: f64, domain: &ConvexBody) -> Self {
        let k_box = domain.bounding_box(0.0);
        let d_box = domain.bounding_box(DOMAIN_MARGIN);

        let axis_smoothness: Vec<f64> = components
            .iter()
            .zip(&d_box)
            .map(|(c, (lo, hi))| c.smoothness(*lo, *hi))
            .collect();
        let smoothness = axis_smoothness.iter().copied().fold(0.0, f64::max);
        let strong_convexity = components
            .iter()
            .zip(&k_box)
            .map(|(c, (lo, hi))| c.strong_convexity(*lo, *hi))
            .fold(f64::INFINITY, f64::min);
        let axis_b3: Option<Vec<f64>> = components
            .iter()
            .zip(&d_box)
            .map(|(c, (lo, hi))| c.third_deriv_bound(*lo, *hi))
            .collect();
        let b3 = axis_b3.as_ref().map(|b| b.iter().copied().fold(0.0, f64::max));

        // Per-axis extremes are exact for separable sums over a box, and bounds otherwise.
        let (mut sup_sum, mut inf_sum) = (offset, offset);
        let mut sup_grad_axes = Vec::with_capacity(components.len());
        for (i, c) in components.iter().enumerate() {
            let (lo, hi) = d_box[i];
            let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
            for x in grid(lo, hi) {
                let v = c.eval(x);
                mx = mx.max(v);
                mn = mn.min(v);
            }
            sup_sum += mx;
            inf_sum += mn;
            let (klo, khi) = k_box[i];
            // f' is monotone for convex components, so the extremes sit at the ends.
            sup_grad_axes.push(c.deriv(klo).abs().max(c.deriv(khi).abs()));
        }

        let x_star = minimize(components, domain, smoothness);
        let f_star = components.iter().zip(&x_star).map(|(c, x)| c.eval(*x)).sum::<f64>() + offset;

        Metadata {
            axis_smoothness,
            axis_b3,
            smoothness,
            strong_convexity,
            f_star,
            x_star,
            b3,
            sup_abs: sup_sum.abs().max(inf_sum.abs()),
            span: sup_sum - inf_sum,
            sup_grad_axes,
        }
    }
}

fn minimize(components: &[Component], domain: &ConvexBody, smoothness: f64) -> Vec<f64> {
    match domain {
        ConvexBody::Box { lower, upper } => components
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(c, (lo, hi))| c.argmin_on(*lo, *hi))
            .collect(),
        ConvexBody::Ball { .. } => {
            let bb = domain.bounding_box(0.0);
            let mut x: Vec<f64> = components
                .iter()
                .zip(&bb)
                .map(|(c, (lo, hi))| c.argmin_on(*lo, *hi))
                .collect();
            domain.project_in_place(&mut x);
            let step = 1.0 / smoothness.max(1.0);
            for _ in 0..100_000 {
                let prev = x.clone();
                for (xi, c) in x.iter_mut().zip(components) {
                    *xi -= step * c.deriv(*xi);
                }
                domain.project_in_place(&mut x);
                if Norm::Euclidean.distance(&x, &prev) < 1e-15 {
                    break;
                }
            }
            x
        }
    }
}

/// Worst relative error between `∇f` and central differences (step `1e-5`) at
/// `samples` random interior points. The denominator falls back to an absolute
/// scale when the gradient is tiny.
pub fn finite_diff_check(f: &Objective, samples: usize, rng: &mut StreamRng) -> f64 {
    const H: f64 = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = vec![0.0; f.dim()];
    for _ in 0..samples.max(1) {
        let x = f.domain().sample_interior(rng, 0.01);
        let g = f.grad(&x);
        let mut err2 = 0.0;
        for i in 0..f.dim() {
            probe.copy_from_slice(&x);
            probe[i] = x[i] + H;
            let fp = f.eval(&probe);
            probe[i] = x[i] - H;
            let fm = f.eval(&probe);
            let fd = (fp - fm) / (2.0 * H);
            err2 += (fd - g[i]) * (fd - g[i]);
        }
        let scale = Norm::Euclidean.eval(&g).max(1e-6);
        worst = worst.max(err2.sqrt() / scale);
    }
    worst
}

/// Random point of the margin-dilated box around `K`.
pub fn sample_dilated(f: &Objective, rng: &mut StreamRng) -> Vec<f64> {
    f.domain()
        .bounding_box(DOMAIN_MARGIN)
        .iter()
        .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}
