//! Hard instance pairs and adversarial oracles for minimax lower bounds.
//!
//! For each sign `v ∈ {±1}` the oracle returns the derivative of `f_v` shifted
//! toward the other member of the pair by `min(ε, C1·δ^p)`, plus Gaussian
//! noise of variance `C2·δ^{-q}`. Small shifts keep the oracle within its
//! type-I envelope while making the two instances hard to tell apart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Norm};
use crate::oracle::{GradientOracle, OracleEnvelope, OracleQuery, OracleResponse, OracleType};
use crate::rng::{standard_normal, StreamRng};
use crate::testbed::{Component, Objective};

/// `1/(4 ln 2)`: the soft-absolute-value pair is only separated below this ε.
pub fn convex_eps_limit() -> f64 {
    0.25 / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardClass {
    /// Soft-absolute-value pair, `f_v(x) ≈ ε|x − v|`.
    ConvexSmooth,
    /// Quadratic pair `f_v(x) = ½x² − vεx`.
    StronglyConvex,
}

fn shift(delta: f64, eps: f64, env: &OracleEnvelope) -> f64 {
    eps.min(env.c1 * delta.powf(env.p))
}

fn softabs_deriv(v: f64, eps: f64, x: f64) -> f64 {
    Component::SoftAbs { v, eps }.deriv(x)
}

/// Mean of the convex-pair oracle `γ̄_v(x, δ)`: `f'_v` shifted by
/// `m = min(ε, C1δ^p)` toward `f'_{−v}` and clipped so it never crosses it.
pub fn gamma_mean_convex(v: f64, x: f64, delta: f64, eps: f64, env: &OracleEnvelope) -> f64 {
    let m = shift(delta, eps, env);
    let up = softabs_deriv(1.0, eps, x) + m;
    let down = softabs_deriv(-1.0, eps, x) - m;
    if x == 0.0 && up > down {
        // Where the shifted curves have crossed, both branches meet at x = 0 in
        // the midpoint, keeping the pair antisymmetric and equal.
        return 0.5 * (up + down);
    }
    if v > 0.0 {
        if x < 0.0 {
            up
        } else {
            up.min(down)
        }
    } else if x > 0.0 {
        down
    } else {
        down.max(up)
    }
}

/// Mean of the strongly convex pair oracle: `x − vε + v·min(ε, C1δ^p)`.
pub fn gamma_mean_sc(v: f64, x: f64, delta: f64, eps: f64, env: &OracleEnvelope) -> f64 {
    let m = shift(delta, eps, env);
    x - v * eps + v * m
}

/// Tolerance maximizing `((ε − C1δ^p)⁺)² δ^q`. For `q = 0` the maximizer is the
/// degenerate limit `δ → 0`, reported as `0`.
pub fn delta_star(eps: f64, c1: f64, p: f64, q: f64) -> Result<f64> {
    if !(eps > 0.0 && c1 > 0.0 && p > 0.0 && q >= 0.0) {
        return Err(Error::domain(format!(
            "delta_star needs eps, C1, p > 0 and q >= 0 (got {eps}, {c1}, {p}, {q})"
        )));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok((eps * q / (c1 * (2.0 * p + q))).powf(1.0 / p))
}

/// The per-query distinguishability `((ε − C1δ^p)⁺)² δ^q`.
pub fn distinguishability(eps: f64, c1: f64, p: f64, q: f64, delta: f64) -> f64 {
    let gap = (eps - c1 * delta.powf(p)).max(0.0);
    gap * gap * delta.powf(q)
}

/// `D_KL(P₊ ‖ P₋) ≤ (2n/C2)(ε − C1δ*^p)² δ*^q`.
pub fn kl_upper_bound(n: u64, eps: f64, env: &OracleEnvelope) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    if env.c2 <= 0.0 {
        return Err(Error::domain("KL bound needs C2 > 0"));
    }
    let ds = delta_star(eps, env.c1, env.p, env.q)?;
    Ok(2.0 * n as f64 / env.c2 * distinguishability(eps, env.c1, env.p, env.q, ds))
}

/// `K1 = (2p/(√C2 (2p+q))) · (q/(C1(2p+q)))^{q/(2p)}`, so that Pinsker gives
/// `TV ≤ √n·K1·ε^{(2p+q)/(2p)}`.
pub fn k1(p: f64, q: f64, c1: f64, c2: f64) -> f64 {
    let s = 2.0 * p + q;
    2.0 * p / (c2.sqrt() * s) * (q / (c1 * s)).powf(q / (2.0 * p))
}

fn check_params(p: f64, q: f64, c1: f64, c2: f64, n: u64) -> Result<()> {
    if !(p > 0.0 && q >= 0.0 && c1 > 0.0 && c2 > 0.0 && n > 0) {
        return Err(Error::domain(format!(
            "lower bound needs p, C1, C2, n > 0 and q >= 0 (got p={p}, q={q}, C1={c1}, C2={c2}, n={n})"
        )));
    }
    Ok(())
}

/// The ε that optimizes the pair's lower bound at horizon `n`.
pub fn epsilon_star(class: HardClass, p: f64, q: f64, c1: f64, c2: f64, n: u64) -> Result<f64> {
    check_params(p, q, c1, c2, n)?;
    let k = k1(p, q, c1, c2);
    let rn = (n as f64).sqrt();
    let e = 2.0 * p / (2.0 * p + q);
    Ok(match class {
        HardClass::ConvexSmooth => (2.0 * p / (rn * k * (4.0 * p + q))).powf(e),
        HardClass::StronglyConvex => (4.0 * p / ((6.0 * p + q) * rn * k)).powf(e),
    })
}

/// Le Cam bound for a given ε: `ε/4·(1 − TV)` (convex) or `ε²/2·(1 − TV)`
/// (strongly convex), with `TV` bounded through Pinsker.
pub fn final_lower_bound(class: HardClass, eps: f64, p: f64, q: f64, c1: f64, c2: f64, n: u64) -> Result<f64> {
    check_params(p, q, c1, c2, n)?;
    let tv = (n as f64).sqrt() * k1(p, q, c1, c2) * eps.powf((2.0 * p + q) / (2.0 * p));
    Ok(match class {
        HardClass::ConvexSmooth => eps / 4.0 * (1.0 - tv),
        HardClass::StronglyConvex => eps * eps / 2.0 * (1.0 - tv),
    })
}

/// Closed-form minimax lower bound. In `d` dimensions the separable pair with
/// per-coordinate constants `C1/√d`, `C2/d` sums `d` one-dimensional bounds.
pub fn lower_bound_value(class: HardClass, p: f64, q: f64, c1: f64, c2: f64, n: u64, d: usize) -> Result<f64> {
    check_params(p, q, c1, c2, n)?;
    if d == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    let df = d as f64;
    let (c1, c2) = (c1 / df.sqrt(), c2 / df);
    let s = 2.0 * p + q;
    let nf = n as f64;
    let one_d = match class {
        HardClass::ConvexSmooth => {
            s * s / (4.0 * q.powf(q / s) * (4.0 * p + q).powf((4.0 * p + q) / s))
                * c1.powf(q / s)
                * c2.powf(p / s)
                * nf.powf(-p / s)
        }
        HardClass::StronglyConvex => {
            2f64.powf((2.0 * p - q) / s) * s.powi(3) / (q.powf(2.0 * q / s) * (6.0 * p + q).powf((6.0 * p + q) / s))
                * c1.powf(2.0 * q / s)
                * c2.powf(2.0 * p / s)
                * nf.powf(-2.0 * p / s)
        }
    };
    Ok(df * one_d)
}

/// A hard instance `(f_v, γ_v)` on `[-1, 1]^d` with sign vector `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstance {
    pub class: HardClass,
    pub v: Vec<f64>,
    pub eps: f64,
    /// Composed envelope of the d-dimensional oracle.
    pub envelope: OracleEnvelope,
}

impl HardInstance {
    pub fn new(class: HardClass, v: Vec<f64>, eps: f64, envelope: OracleEnvelope) -> Result<Self> {
        if v.is_empty() || v.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::domain("sign vector must be a nonempty vector of ±1"));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::domain(format!("eps must be positive, got {eps}")));
        }
        if class == HardClass::ConvexSmooth && eps >= convex_eps_limit() {
            return Err(Error::domain(format!(
                "convex hard pair needs eps < 1/(4 ln 2) ≈ {:.6}, got {eps}",
                convex_eps_limit()
            )));
        }
        if envelope.oracle_type != OracleType::TypeI {
            return Err(Error::domain("hard instances use type-I envelopes"));
        }
        if envelope.p <= 0.0 {
            return Err(Error::domain("degenerate bias exponent p = 0 is not supported"));
        }
        Ok(Self {
            class,
            v,
            eps,
            envelope,
        })
    }

    pub fn scalar(class: HardClass, v: f64, eps: f64, envelope: OracleEnvelope) -> Result<Self> {
        Self::new(class, vec![v], eps, envelope)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Per-coordinate envelope `(C1/√d, C2/d)` under the Euclidean norm.
    pub fn coordinate_envelope(&self) -> OracleEnvelope {
        let d = self.dim() as f64;
        OracleEnvelope {
            c1: self.envelope.c1 / d.sqrt(),
            c2: self.envelope.c2 / d,
            ..self.envelope
        }
    }

    fn component(&self, v: f64) -> Component {
        match self.class {
            HardClass::ConvexSmooth => Component::SoftAbs { v, eps: self.eps },
            HardClass::StronglyConvex => Component::ScPair { v, eps: self.eps },
        }
    }

    pub fn objective(&self) -> Result<Objective> {
        let comps = self.v.iter().map(|v| self.component(*v)).collect();
        Objective::new(comps, 0.0, ConvexBody::cube(self.dim(), -1.0, 1.0)?)
    }

    /// Mean of coordinate `i` of the oracle at `(x_i, δ)`.
    pub fn gamma_mean_coord(&self, i: usize, x: f64, delta: f64) -> f64 {
        let env = self.coordinate_envelope();
        match self.class {
            HardClass::ConvexSmooth => gamma_mean_convex(self.v[i], x, delta, self.eps, &env),
            HardClass::StronglyConvex => gamma_mean_sc(self.v[i], x, delta, self.eps, &env),
        }
    }

    /// Splits a d-dimensional instance into its one-dimensional coordinates.
    pub fn coordinates(&self) -> Vec<HardInstance> {
        let env = self.coordinate_envelope();
        self.v
            .iter()
            .map(|v| HardInstance {
                class: self.class,
                v: vec![*v],
                eps: self.eps,
                envelope: env,
            })
            .collect()
    }

    pub fn oracle(&self) -> Result<SeparableHardOracle> {
        separable_oracle(&self.coordinates())
    }
}

/// Coordinatewise composition of one-dimensional hard oracles.
#[derive(Debug, Clone)]
pub struct SeparableHardOracle {
    parts: Vec<HardInstance>,
    objective: Objective,
    envelope: OracleEnvelope,
}

/// Composes 1-d instances. The composed envelope has `C1 = (Σ C1_i²)^{1/2}` and
/// `C2 = Σ C2_i`, so per-coordinate `(C1/√d, C2/d)` recovers `(C1, C2)`.
pub fn separable_oracle(instances: &[HardInstance]) -> Result<SeparableHardOracle> {
    let first = instances
        .first()
        .ok_or_else(|| Error::domain("separable oracle needs at least one instance"))?;
    let mut c1_sq = 0.0;
    let mut c2 = 0.0;
    for inst in instances {
        if inst.dim() != 1 {
            return Err(Error::domain("separable oracle composes 1-d instances"));
        }
        if inst.class != first.class {
            return Err(Error::domain("separable oracle components must share a class"));
        }
        if inst.envelope.p != first.envelope.p || inst.envelope.q != first.envelope.q {
            return Err(Error::domain("separable oracle components must share (p, q)"));
        }
        c1_sq += inst.envelope.c1 * inst.envelope.c1;
        c2 += inst.envelope.c2;
    }
    let envelope = OracleEnvelope {
        c1: c1_sq.sqrt(),
        c2,
        ..first.envelope
    };
    let comps = instances.iter().map(|i| i.component(i.v[0])).collect();
    let objective = Objective::new(comps, 0.0, ConvexBody::cube(instances.len(), -1.0, 1.0)?)?;
    Ok(SeparableHardOracle {
        parts: instances.to_vec(),
        objective,
        envelope,
    })
}

impl SeparableHardOracle {
    /// Deterministic oracle mean at `(x, δ)`.
    pub fn mean(&self, x: &[f64], delta: f64) -> Vec<f64> {
        self.parts
            .iter()
            .zip(x)
            .map(|(p, xi)| p.gamma_mean_coord(0, *xi, delta))
            .collect()
    }

    /// Per-coordinate noise variances `C2_i δ^{-q}`.
    pub fn variances(&self, delta: f64) -> Vec<f64> {
        self.parts
            .iter()
            .map(|p| p.envelope.c2 * delta.powf(-p.envelope.q))
            .collect()
    }

    pub fn parts(&self) -> &[HardInstance] {
        &self.parts
    }
}

impl GradientOracle for SeparableHardOracle {
    fn dim(&self) -> usize {
        self.parts.len()
    }

    fn norm(&self) -> Norm {
        Norm::Euclidean
    }

    fn envelope(&self) -> OracleEnvelope {
        self.envelope
    }

    fn objective(&self) -> &Objective {
        &self.objective
    }

    fn query(&self, q: &OracleQuery, rng: &mut StreamRng) -> Result<OracleResponse> {
        q.validate_in(self.objective.domain())?;
        let mean = self.mean(&q.x, q.delta);
        let g = mean
            .into_iter()
            .zip(self.variances(q.delta))
            .map(|(m, var)| m + var.sqrt() * standard_normal(rng))
            .collect();
        OracleResponse::new(q, Norm::Euclidean, g, q.x.clone())
    }

    fn is_unbiased(&self) -> bool {
        false
    }
}

/// Number of `(x, δ)` grid points where the oracle mean deviates from `f'_v` by
/// more than `C1δ^p`, allowing a few ulps for the shift arithmetic.
pub fn envelope_violations(inst: &HardInstance, xs: &[f64], deltas: &[f64]) -> usize {
    let f = match inst.objective() {
        Ok(f) => f,
        Err(_) => return usize::MAX,
    };
    let env = inst.coordinate_envelope();
    let mut bad = 0;
    for &delta in deltas {
        let bound = env.c1 * delta.powf(env.p);
        for &x in xs {
            let g = inst.gamma_mean_coord(0, x, delta);
            let fp = f.components()[0].deriv(x);
            let slack = 4.0 * f64::EPSILON * (fp.abs() + bound + inst.eps);
            if (g - fp).abs() > bound + slack {
                bad += 1;
            }
        }
    }
    bad
}

/// `x`: 401 points on `[-2, 2]`; `δ`: 25 log-spaced points on `[10⁻³, 1]`.
pub fn validation_grid() -> (Vec<f64>, Vec<f64>) {
    let xs = (0..401).map(|i| -2.0 + 4.0 * i as f64 / 400.0).collect();
    let deltas = (0..25).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 24.0)).collect();
    (xs, deltas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env(c1: f64, p: f64, c2: f64, q: f64) -> OracleEnvelope {
        OracleEnvelope::type_i(c1, p, c2, q).unwrap()
    }

    #[test]
    fn delta_star_examples() {
        assert!((delta_star(1.0, 1.0, 2.0, 2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((delta_star(1.0, 1.0, 1.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(delta_star(1.0, 1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(delta_star(1.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn delta_star_is_grid_optimal() {
        for (eps, c1, p, q) in [(1.0, 1.0, 2.0, 2.0), (1.0, 1.0, 1.0, 2.0), (0.3, 2.0, 1.5, 1.0)] {
            let ds = delta_star(eps, c1, p, q).unwrap();
            let best = distinguishability(eps, c1, p, q, ds);
            let top = (eps / c1).powf(1.0 / p);
            for i in 1..=10_000 {
                let d = top * i as f64 / 10_000.0;
                assert!(distinguishability(eps, c1, p, q, d) <= best * (1.0 + 1e-9));
            }
            assert!(best >= distinguishability(eps, c1, p, q, 0.9 * ds));
            assert!(best >= distinguishability(eps, c1, p, q, 1.1 * ds));
        }
    }

    #[test]
    fn lower_bound_closed_forms() {
        let nf = 1e4f64;
        let v = lower_bound_value(HardClass::ConvexSmooth, 1.0, 2.0, 1.0, 1.0, 10_000, 1).unwrap();
        assert!((v - 1.0 / (3.0 * 3f64.sqrt()) * nf.powf(-0.25)).abs() < 1e-15);
        let v = lower_bound_value(HardClass::ConvexSmooth, 2.0, 2.0, 1.0, 1.0, 10_000, 1).unwrap();
        let want = 9.0 / 20.0 * (1.0f64 / 25.0).cbrt() * nf.powf(-1.0 / 3.0);
        assert!((v - want).abs() < 1e-15 * want.max(1.0) * 10.0);
        let v = lower_bound_value(HardClass::StronglyConvex, 1.0, 2.0, 1.0, 1.0, 10_000, 1).unwrap();
        assert!((v - 0.005).abs() < 1e-15);
    }

    #[test]
    fn epsilon_star_reproduces_closed_form() {
        for class in [HardClass::ConvexSmooth, HardClass::StronglyConvex] {
            for (p, q, c1, c2) in [(2.0, 2.0, 1.0, 1.0), (1.0, 2.0, 0.5, 3.0), (1.5, 1.0, 2.0, 0.7)] {
                for n in [100u64, 10_000, 1_000_000] {
                    let e = epsilon_star(class, p, q, c1, c2, n).unwrap();
                    let a = final_lower_bound(class, e, p, q, c1, c2, n).unwrap();
                    let b = lower_bound_value(class, p, q, c1, c2, n, 1).unwrap();
                    assert!((a - b).abs() <= 1e-12 * b, "{class:?} {p} {q}: {a} vs {b}");
                }
            }
        }
        // q = 0 is the continuous limit: 0^0 = 1 throughout.
        let a = lower_bound_value(HardClass::ConvexSmooth, 1.0, 0.0, 1.0, 1.0, 100, 1).unwrap();
        let b = lower_bound_value(HardClass::ConvexSmooth, 1.0, 1e-9, 1.0, 1.0, 100, 1).unwrap();
        assert!((a - b).abs() < 1e-6 * a);
        let e2 = epsilon_star(HardClass::ConvexSmooth, 2.0, 2.0, 1.0, 1.0, 100).unwrap();
        let e4 = epsilon_star(HardClass::ConvexSmooth, 2.0, 2.0, 1.0, 1.0, 10_000).unwrap();
        assert!(e4 < e2 && e4 < convex_eps_limit());
    }

    #[test]
    fn kl_bound_consistency() {
        let e = env(1.0, 2.0, 1.0, 2.0);
        let n = 100;
        let eps = epsilon_star(HardClass::ConvexSmooth, 2.0, 2.0, 1.0, 1.0, n).unwrap();
        let kl = kl_upper_bound(n, eps, &e).unwrap();
        // Pinsker: TV ≤ √(KL/2) = √n K1 ε^{(2p+q)/(2p)} = 2p/(4p+q) at ε*.
        assert!(((kl / 2.0).sqrt() - 4.0 / 10.0).abs() < 1e-12);
        assert_eq!(kl_upper_bound(0, eps, &e).unwrap(), 0.0);
        let half = kl_upper_bound(n, eps, &env(1.0, 2.0, 2.0, 2.0)).unwrap();
        assert!((half - kl / 2.0).abs() < 1e-15);
    }

    #[test]
    fn convex_oracle_limits_and_antisymmetry() {
        let e = env(1.0, 2.0, 1.0, 2.0);
        let eps = 0.1;
        // C1δ^p ≥ ε: both oracles coincide.
        for i in 0..=200 {
            let x = -2.0 + 0.02 * i as f64;
            assert_eq!(
                gamma_mean_convex(1.0, x, 0.5, eps, &e),
                gamma_mean_convex(-1.0, x, 0.5, eps, &e)
            );
        }
        let delta = 0.1;
        let m = eps.min(delta * delta);
        assert!((gamma_mean_convex(1.0, -50.0, delta, eps, &e) - (-eps + m)).abs() < 1e-12);
        let (xs, ds) = validation_grid();
        for &d in &ds {
            for &x in &xs {
                let a = gamma_mean_convex(1.0, x, d, eps, &e);
                let b = gamma_mean_convex(-1.0, -x, d, eps, &e);
                assert!((a + b).abs() <= 1e-15);
                let gap = (a - gamma_mean_convex(-1.0, x, d, eps, &e)).abs();
                assert!(gap <= 2.0 * (eps - e.c1 * d.powf(e.p)).max(0.0) + 1e-15);
            }
        }
    }

    #[test]
    fn sc_oracle_gap_identity_and_bias() {
        let e = env(1.0, 1.0, 1.0, 2.0);
        let eps = 0.3;
        let (xs, ds) = validation_grid();
        for &d in &ds {
            let want = 2.0 * (eps - e.c1 * d).max(0.0);
            for &x in &xs {
                let gp = gamma_mean_sc(1.0, x, d, eps, &e);
                let gm = gamma_mean_sc(-1.0, x, d, eps, &e);
                assert!(((gp - gm).abs() - want).abs() <= 1e-12);
                let bias = (gp - (x - eps)).abs();
                assert!((bias - eps.min(d)).abs() <= 1e-15);
            }
        }
        assert_eq!(
            gamma_mean_sc(1.0, 0.4, 1.0, 0.5, &env(1.0, 1.0, 1.0, 2.0)),
            gamma_mean_sc(-1.0, 0.4, 1.0, 0.5, &env(1.0, 1.0, 1.0, 2.0))
        );
    }

    #[test]
    fn instance_envelopes_hold_on_grid() {
        let (xs, ds) = validation_grid();
        for class in [HardClass::ConvexSmooth, HardClass::StronglyConvex] {
            for v in [1.0, -1.0] {
                for (c1, p) in [(1.0, 2.0), (0.3, 1.0), (5.0, 0.5)] {
                    let inst = HardInstance::scalar(class, v, 0.2, env(c1, p, 1.0, 2.0)).unwrap();
                    assert_eq!(envelope_violations(&inst, &xs, &ds), 0);
                }
            }
        }
    }

    #[test]
    fn constructor_validation() {
        let e = env(1.0, 2.0, 1.0, 2.0);
        assert!(HardInstance::scalar(HardClass::ConvexSmooth, 1.0, 0.4, e).is_err());
        assert!(HardInstance::scalar(HardClass::StronglyConvex, 1.0, 0.4, e).is_ok());
        assert!(HardInstance::scalar(HardClass::ConvexSmooth, 0.5, 0.1, e).is_err());
        assert!(HardInstance::scalar(HardClass::ConvexSmooth, 1.0, 0.1, env(1.0, 0.0, 1.0, 2.0)).is_err());
        let a = HardInstance::scalar(HardClass::ConvexSmooth, 1.0, 0.1, e).unwrap();
        let b = HardInstance::scalar(HardClass::StronglyConvex, 1.0, 0.1, e).unwrap();
        assert!(separable_oracle(&[a, b]).is_err());
        assert!(separable_oracle(&[]).is_err());
    }

    #[test]
    fn separable_composition_arithmetic() {
        let e = env(2.0, 1.0, 3.0, 2.0);
        let inst = HardInstance::new(HardClass::StronglyConvex, vec![1.0, -1.0, 1.0, 1.0], 0.5, e).unwrap();
        let o = inst.oracle().unwrap();
        assert_eq!(o.envelope().c1, 2.0);
        assert_eq!(o.envelope().c2, 3.0);
        // Each coordinate saturates C1δ/√d = 0.1 at δ = 0.1, so the ℓ2 bias is C1δ.
        let delta = 0.1;
        let x = [0.3, -0.2, 0.0, 0.9];
        let mean = o.mean(&x, delta);
        let grad = o.objective().grad(&x);
        let bias: f64 = mean
            .iter()
            .zip(&grad)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((bias - 2.0 * delta).abs() < 1e-15);
        let var: f64 = o.variances(delta).iter().sum();
        assert!((var - 3.0 / (delta * delta)).abs() < 1e-9);

        let one = HardInstance::scalar(HardClass::StronglyConvex, -1.0, 0.5, e).unwrap();
        let o1 = one.oracle().unwrap();
        assert_eq!(o1.envelope(), e);
        assert_eq!(o1.mean(&[0.25], 0.2), vec![gamma_mean_sc(-1.0, 0.25, 0.2, 0.5, &e)]);
    }

    #[test]
    fn noise_variance_matches_envelope() {
        let e = env(1.0, 1.0, 0.5, 2.0);
        let inst = HardInstance::scalar(HardClass::StronglyConvex, 1.0, 0.2, e).unwrap();
        let o = inst.oracle().unwrap();
        let q = OracleQuery::new(vec![0.1], 0.5).unwrap();
        let mut rng = crate::rng::RngStream::new(77, 0).rng();
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let r = o.query(&q, &mut rng).unwrap();
            assert_eq!(r.y, q.x);
            s += r.g[0];
            s2 += r.g[0] * r.g[0];
        }
        let m = s / n as f64;
        let var = s2 / n as f64 - m * m;
        assert!((var / 2.0 - 1.0).abs() < 0.01, "{var}");
    }

    proptest! {
        #[test]
        fn lower_bound_monotone(
            p in 0.5..3.0f64, q in 0.5..3.0f64,
            c1 in 0.1..5.0f64, c2 in 0.1..5.0f64,
            n in 10u64..1_000_000,
        ) {
            for class in [HardClass::ConvexSmooth, HardClass::StronglyConvex] {
                let base = lower_bound_value(class, p, q, c1, c2, n, 1).unwrap();
                prop_assert!(lower_bound_value(class, p, q, c1, c2, 2 * n, 1).unwrap() < base);
                prop_assert!(lower_bound_value(class, p, q, 1.5 * c1, c2, n, 1).unwrap() > base);
                prop_assert!(lower_bound_value(class, p, q, c1, 1.5 * c2, n, 1).unwrap() > base);
            }
        }
    }
}
