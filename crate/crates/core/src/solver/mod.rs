//! Mirror descent driven by a gradient oracle.
//!
//! The regularizer is `R(x) = (α/2)‖x‖²`, so a mirror step is a projected
//! gradient step with step size `η_t/α`. Tolerance and step sizes come from the
//! closed-form schedules in [`schedule`].

pub mod schedule;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, ConvexBody, Norm};
use crate::oracle::{GradientOracle, OracleQuery};
use crate::rng::StreamRng;

pub use schedule::{
    regret_bias_terms, schedule_opt_convex, schedule_opt_sc, schedule_regret, EtaRule, ProblemConstants, Schedule,
    ScheduleMode, DELTA_FLOOR,
};

/// Squared Euclidean regularizer scaled by `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub alpha: f64,
}

impl Default for Regularizer {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

impl Regularizer {
    pub fn squared_euclidean() -> Self {
        Self::default()
    }

    pub fn scaled(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self { alpha })
        } else {
            Err(Error::domain(format!(
                "regularizer scale must be positive, got {alpha}"
            )))
        }
    }

    /// `D_R(x, y) = (α/2)‖x − y‖²`.
    pub fn divergence(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = Norm::Euclidean.distance(x, y);
        0.5 * self.alpha * d * d
    }

    /// `D = sup_{x,y∈K} D_R(x, y)`: `(α/2)·diam²`.
    pub fn diameter(&self, body: &ConvexBody) -> f64 {
        let diam_sq = match body {
            ConvexBody::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>(),
            ConvexBody::Ball { radius, .. } => 4.0 * radius * radius,
        };
        0.5 * self.alpha * diam_sq
    }
}

/// `argmin_{x∈K} η⟨g, x⟩ + D_R(x, x_t)`, i.e. `Π_K(x_t − (η/α)g)`.
pub fn md_step(x_t: &[f64], g: &[f64], eta: f64, reg: &Regularizer, body: &ConvexBody) -> Result<Vec<f64>> {
    let mut out = x_t.to_vec();
    md_step_into(&mut out, g, eta, reg, body)?;
    Ok(out)
}

fn md_step_into(x: &mut [f64], g: &[f64], eta: f64, reg: &Regularizer, body: &ConvexBody) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Precondition(format!("step size must be positive, got {eta}")));
    }
    if g.len() != x.len() {
        return Err(Error::domain("gradient and point dimensions differ"));
    }
    let s = eta / reg.alpha;
    for (xi, gi) in x.iter_mut().zip(g) {
        *xi -= s * gi;
    }
    body.project_in_place(x);
    Ok(())
}

/// Slack in the three-point inequality
/// `⟨g, x_{t+1} − x⟩ ≤ (1/η)(D_R(x, x_t) − D_R(x, x_{t+1}) − D_R(x_{t+1}, x_t))`.
/// Nonnegative (up to rounding) for every `x ∈ K` when `x_next` is a mirror step.
pub fn step_inequality_gap(g: &[f64], eta: f64, x_t: &[f64], x_next: &[f64], x: &[f64], reg: &Regularizer) -> f64 {
    let diff: Vec<f64> = x_next.iter().zip(x).map(|(a, b)| a - b).collect();
    let lhs = dot(g, &diff);
    let rhs = (reg.divergence(x, x_t) - reg.divergence(x, x_next) - reg.divergence(x_next, x_t)) / eta;
    rhs - lhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Optimization,
    Regret,
}

/// How much of a trajectory to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recording {
    /// Every iterate, evaluation point, loss, and tolerance.
    #[default]
    Full,
    /// Only the aggregates.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub recording: Recording,
    /// Random comparison points per step for the three-point inequality check
    /// (`0` disables it). They are drawn from a separate stream.
    pub step_checks: usize,
    pub check_seed: u64,
}

/// Trajectory and outcome of one mirror-descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub dim: usize,
    pub n: usize,
    pub mode: RunMode,
    /// `X_1..X_n`, flattened row-major (empty in summary recording).
    pub iterates: Vec<f64>,
    /// Evaluation points `Y_t`, flattened.
    pub eval_points: Vec<f64>,
    /// `f(X_t)`.
    pub losses_x: Vec<f64>,
    /// `f(Y_t)`, averaged over both arms for two-point oracles.
    pub losses_y: Vec<f64>,
    /// Per-query tolerance `δ_t`.
    pub deltas: Vec<f64>,
    pub delta: f64,
    /// `X̂_n = (1/n)Σ X_t`.
    pub x_hat: Vec<f64>,
    /// `f(X̂_n) − f*`.
    pub error: f64,
    /// `(1/n)Σ f(X_t)`.
    pub mean_loss_x: f64,
    /// `Σ_t f(Y_t) − n·f*` over the queried steps.
    pub regret: f64,
    pub queries: usize,
    /// `M = sup_K ‖∇f‖_*`, recorded in regret mode.
    pub grad_bound: Option<f64>,
    /// Smallest three-point inequality slack seen, if checked.
    pub min_step_gap: Option<f64>,
    pub notes: Vec<String>,
}

impl RunTrace {
    pub fn iterate(&self, t: usize) -> &[f64] {
        &self.iterates[(t - 1) * self.dim..t * self.dim]
    }

    pub fn eval_point(&self, t: usize) -> &[f64] {
        &self.eval_points[(t - 1) * self.dim..t * self.dim]
    }
}

/// Runs mirror descent for `n` rounds from `x1`.
///
/// Optimization mode queries at `X_1..X_{n−1}` and returns the average iterate.
/// Regret mode also plays `X_n` so that `n` losses `f(Y_t)` are charged.
#[allow(clippy::too_many_arguments)]
pub fn run<O: GradientOracle + ?Sized>(
    oracle: &O,
    schedule: &Schedule,
    n: usize,
    body: &ConvexBody,
    reg: &Regularizer,
    x1: &[f64],
    rng: &mut StreamRng,
    mode: RunMode,
) -> Result<RunTrace> {
    run_with(oracle, schedule, n, body, reg, x1, rng, mode, RunOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn run_with<O: GradientOracle + ?Sized>(
    oracle: &O,
    schedule: &Schedule,
    n: usize,
    body: &ConvexBody,
    reg: &Regularizer,
    x1: &[f64],
    rng: &mut StreamRng,
    mode: RunMode,
    opts: RunOptions,
) -> Result<RunTrace> {
    if n == 0 {
        return Err(Error::domain("horizon n must be >= 1"));
    }
    let dim = body.dim();
    if x1.len() != dim || oracle.dim() != dim {
        return Err(Error::domain("start point, oracle, and domain dimensions differ"));
    }
    if !body.contains(x1, 1e-12) {
        return Err(Error::Precondition(format!("start point {x1:?} lies outside K")));
    }
    let delta = schedule.delta;
    crate::oracle::validate_delta(delta)?;
    let f = oracle.objective();
    let f_star = f.f_star();
    let full = opts.recording == Recording::Full;
    let queries = match mode {
        RunMode::Optimization => n - 1,
        RunMode::Regret => n,
    };

    let mut notes = schedule.notes.clone();
    let mut grad_bound = None;
    if mode == RunMode::Regret {
        let m = f.sup_grad_dual(oracle.norm());
        grad_bound = Some(m);
        notes.push(format!("gradient bound M = {m}"));
        if !oracle.is_unbiased() {
            notes.push("warning: biased oracle in regret mode; the regret bound is not guaranteed".into());
        }
    }

    let cap = if full { n } else { 0 };
    let mut iterates = Vec::with_capacity(cap * dim);
    let mut eval_points = Vec::with_capacity(if full { queries * dim } else { 0 });
    let mut losses_x = Vec::with_capacity(cap);
    let mut losses_y = Vec::with_capacity(if full { queries } else { 0 });
    let mut deltas = Vec::with_capacity(if full { queries } else { 0 });

    let mut check_rng = (opts.step_checks > 0).then(|| crate::rng::RngStream::new(opts.check_seed, 0x7374_6570).rng());
    let mut min_gap = f64::INFINITY;

    let mut x = x1.to_vec();
    let mut sum_x = vec![0.0; dim];
    let mut sum_fx = 0.0;
    let mut sum_fy = 0.0;
    for t in 1..=n {
        for (s, xi) in sum_x.iter_mut().zip(&x) {
            *s += xi;
        }
        let fx = f.eval(&x);
        sum_fx += fx;
        if full {
            iterates.extend_from_slice(&x);
            losses_x.push(fx);
        }
        if t > queries {
            break;
        }
        let q = OracleQuery::new(x.clone(), delta)?;
        let resp = oracle.query(&q, rng)?;
        let fy = match &resp.y_minus {
            Some(ym) => 0.5 * (f.eval(&resp.y) + f.eval(ym)),
            None => f.eval(&resp.y),
        };
        sum_fy += fy;
        if full {
            eval_points.extend_from_slice(&resp.y);
            losses_y.push(fy);
            deltas.push(delta);
        }
        if t == n {
            break;
        }
        let eta = schedule.eta(t);
        let x_prev = check_rng.as_ref().map(|_| x.clone());
        md_step_into(&mut x, &resp.g, eta, reg, body)?;
        if let (Some(crng), Some(xp)) = (check_rng.as_mut(), x_prev) {
            for _ in 0..opts.step_checks {
                let z = sample_in(body, crng);
                let gap = step_inequality_gap(&resp.g, eta, &xp, &x, &z, reg);
                min_gap = min_gap.min(gap);
            }
        }
    }

    let nf = n as f64;
    let mut x_hat: Vec<f64> = sum_x.iter().map(|s| s / nf).collect();
    // Rounding in the running sum can leave the average a hair outside K.
    body.project_in_place(&mut x_hat);
    let error = f.eval(&x_hat) - f_star;
    Ok(RunTrace {
        dim,
        n,
        mode,
        iterates,
        eval_points,
        losses_x,
        losses_y,
        deltas,
        delta,
        x_hat,
        error,
        mean_loss_x: sum_fx / nf,
        regret: sum_fy - queries as f64 * f_star,
        queries,
        grad_bound,
        min_step_gap: check_rng.map(|_| min_gap),
        notes,
    })
}

/// A point of `K` drawn uniformly from its bounding box and projected, so the
/// boundary is hit with positive probability.
fn sample_in(body: &ConvexBody, rng: &mut StreamRng) -> Vec<f64> {
    let pts: Vec<f64> = body
        .bounding_box(0.0)
        .iter()
        .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    body.project(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ExactOracle, OracleEnvelope, OracleResponse};
    use crate::rng::RngStream;
    use crate::testbed::Objective;
    use proptest::prelude::*;

    struct ZeroOracle(Objective);

    impl GradientOracle for ZeroOracle {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn norm(&self) -> Norm {
            Norm::Euclidean
        }
        fn envelope(&self) -> OracleEnvelope {
            OracleEnvelope::exact()
        }
        fn objective(&self) -> &Objective {
            &self.0
        }
        fn query(&self, q: &OracleQuery, _rng: &mut StreamRng) -> Result<OracleResponse> {
            OracleResponse::new(q, Norm::Euclidean, vec![0.0; q.x.len()], q.x.clone())
        }
    }

    fn square() -> ConvexBody {
        ConvexBody::cube(2, -1.0, 1.0).unwrap()
    }

    #[test]
    fn md_step_examples() {
        let reg = Regularizer::default();
        let big = ConvexBody::cube(2, -10.0, 10.0).unwrap();
        assert_eq!(
            md_step(&[0.3, -0.2], &[0.0, 0.0], 0.5, &reg, &square()).unwrap(),
            vec![0.3, -0.2]
        );
        assert_eq!(
            md_step(&[0.0, 0.0], &[1.0, 0.0], 0.1, &reg, &big).unwrap(),
            vec![-0.1, 0.0]
        );
        assert_eq!(
            md_step(&[0.95, 0.0], &[-1.0, 0.0], 0.1, &reg, &square()).unwrap(),
            vec![1.0, 0.0]
        );
        assert!(md_step(&[0.0, 0.0], &[1.0, 0.0], 0.0, &reg, &square()).is_err());
    }

    #[test]
    fn diameters() {
        let reg = Regularizer::default();
        assert_eq!(reg.diameter(&ConvexBody::cube(1, -1.0, 1.0).unwrap()), 2.0);
        assert_eq!(reg.diameter(&square()), 4.0);
        let ball = ConvexBody::ball(vec![0.0; 3], 0.5).unwrap();
        assert_eq!(reg.diameter(&ball), 0.5);
        assert_eq!(Regularizer::scaled(4.0).unwrap().diameter(&square()), 16.0);
    }

    #[test]
    fn exact_oracle_sc_schedule_error_within_two_over_n() {
        let f = Objective::quadratic(&[1.0], &[0.0]).unwrap();
        let o = ExactOracle::new(f.clone());
        let body = f.domain().clone();
        let k = ProblemConstants {
            p: 1.0,
            q: 0.0,
            c1: 0.0,
            c2: 0.0,
            d: 2.0,
            alpha: 4.0,
            l: 1.0,
            mu: 1.0,
            oracle_type: crate::oracle::OracleType::TypeI,
            r_sup: 1.0,
        };
        let s = schedule_opt_sc(&k, 1000).unwrap();
        let reg = Regularizer::scaled(4.0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let tr = run(&o, &s, 1000, &body, &reg, &[1.0], &mut rng, RunMode::Optimization).unwrap();
        assert!(tr.error <= 2.0 / 1000.0, "error {}", tr.error);
        // With α = 1 the schedule's step 2/t overshoots, yet the run stays feasible.
        let s1 = Schedule::manual(1.0, EtaRule::InverseLinear { mu: 1.0 }).unwrap();
        let tr = run(
            &o,
            &s1,
            1000,
            &body,
            &Regularizer::default(),
            &[1.0],
            &mut rng,
            RunMode::Optimization,
        )
        .unwrap();
        assert!(tr.iterates.iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn single_round_returns_start() {
        let f = Objective::quadratic(&[1.0, 2.0], &[0.5, 0.0]).unwrap();
        let o = ExactOracle::new(f);
        let s = Schedule::manual(0.5, EtaRule::Constant { eta: 0.1 }).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let tr = run(
            &o,
            &s,
            1,
            &square(),
            &Regularizer::default(),
            &[0.2, -0.4],
            &mut rng,
            RunMode::Optimization,
        )
        .unwrap();
        assert_eq!(tr.x_hat, vec![0.2, -0.4]);
        assert_eq!(tr.queries, 0);
        assert_eq!(tr.iterates.len(), 2);
    }

    #[test]
    fn zero_gradient_keeps_iterates_fixed() {
        let f = Objective::quadratic(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let o = ZeroOracle(f);
        let s = Schedule::manual(0.5, EtaRule::Constant { eta: 0.3 }).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let x1 = [0.25, -0.75];
        let tr = run(
            &o,
            &s,
            50,
            &square(),
            &Regularizer::default(),
            &x1,
            &mut rng,
            RunMode::Regret,
        )
        .unwrap();
        for t in 1..=50 {
            assert_eq!(tr.iterate(t), &x1);
        }
        assert_eq!(tr.queries, 50);
        assert!(tr.grad_bound.is_some());
    }

    #[test]
    fn noiseless_convex_schedule_meets_deterministic_bound() {
        // With C1 = C2 = 0 the schedule is η = α/L and the bound reduces to
        // (f(X_1) − f* + DL/α)/n.
        let f = Objective::quadratic(&[1.0], &[-2.0]).unwrap();
        let o = ExactOracle::new(f.clone());
        let body = f.domain().clone();
        let reg = Regularizer::default();
        let k = ProblemConstants {
            p: 2.0,
            q: 2.0,
            c1: 0.0,
            c2: 0.0,
            d: reg.diameter(&body),
            alpha: 1.0,
            l: 1.0,
            mu: 0.0,
            oracle_type: crate::oracle::OracleType::TypeI,
            r_sup: 1.0,
        };
        for n in [10usize, 100, 1000] {
            let s = schedule_opt_convex(&k, n).unwrap();
            let mut rng = RngStream::new(2, 0).rng();
            let x1 = [-1.0];
            let tr = run(&o, &s, n, &body, &reg, &x1, &mut rng, RunMode::Optimization).unwrap();
            let bound = (f.error(&x1) + k.d * k.l / k.alpha) / n as f64;
            assert!(tr.error <= bound, "n={n}: {} > {bound}", tr.error);
        }
    }

    #[test]
    fn step_inequality_holds_along_a_run() {
        let f = Objective::quadratic(&[1.0, 3.0], &[-2.0, 0.5]).unwrap();
        let inner = ExactOracle::new(f.clone());
        let s = Schedule::manual(
            0.5,
            EtaRule::Polynomial {
                alpha: 1.0,
                a: 0.5,
                r: 0.5,
                l: 0.1,
            },
        )
        .unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let opts = RunOptions {
            recording: Recording::Summary,
            step_checks: 100,
            check_seed: 9,
        };
        let tr = run_with(
            &inner,
            &s,
            200,
            &square(),
            &Regularizer::default(),
            &[0.0, 0.0],
            &mut rng,
            RunMode::Optimization,
            opts,
        )
        .unwrap();
        assert!(tr.min_step_gap.unwrap() >= -1e-8);
        assert!(tr.iterates.is_empty());
    }

    proptest! {
        #[test]
        fn step_inequality_random(
            x in proptest::collection::vec(-1.0f64..1.0, 3),
            g in proptest::collection::vec(-20.0f64..20.0, 3),
            z in proptest::collection::vec(-1.0f64..1.0, 3),
            eta in 1e-4f64..5.0,
            alpha in 0.5f64..4.0,
            ball in any::<bool>(),
        ) {
            let body = if ball {
                ConvexBody::ball(vec![0.0; 3], 1.0).unwrap()
            } else {
                ConvexBody::cube(3, -1.0, 1.0).unwrap()
            };
            let x = body.project(&x);
            let z = body.project(&z);
            let reg = Regularizer::scaled(alpha).unwrap();
            let next = md_step(&x, &g, eta, &reg, &body).unwrap();
            prop_assert!(body.contains(&next, 1e-12));
            prop_assert!(step_inequality_gap(&g, eta, &x, &next, &z, &reg) >= -1e-8);
        }

        #[test]
        fn average_obeys_jensen(seed in any::<u64>()) {
            let f = Objective::quadratic(&[1.0, 0.5], &[0.3, -0.2]).unwrap();
            let o = crate::estimators::EstimatorOracle::smoothing(
                f.clone(),
                crate::estimators::NoiseModel::Uncontrolled { sigma: 0.5 },
            ).unwrap();
            let s = Schedule::manual(0.3, EtaRule::Constant { eta: 0.05 }).unwrap();
            let mut rng = RngStream::new(seed, 0).rng();
            let tr = run(&o, &s, 64, f.domain(), &Regularizer::default(), &[0.9, -0.9], &mut rng,
                RunMode::Optimization).unwrap();
            let fhat = f.eval(&tr.x_hat);
            prop_assert!(fhat <= tr.mean_loss_x + 1e-12);
            prop_assert!(tr.iterates.chunks(2).all(|x| f.domain().contains(x, 0.0)));
        }
    }
}
