//! Monte Carlo bias and variance of every two-dimensional estimator cell
//! against its declared envelope, plus seeded determinism of whole runs.

use bgo::harness::presets::boundary_quadratic;
use bgo::harness::probe_bias_variance;
use bgo::solver::{run_with, schedule_opt_convex, Recording, RunMode, RunOptions};
use bgo::{
    Component, Coupling, EstimatorOracle, Feedback, FunctionClass, GradientOracle, NoiseModel, Objective,
    PerturbationScheme, Regularizer, RngStream,
};
use proptest::prelude::*;
use rand::Rng;

const REPS: usize = 50_000;
const DELTAS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];
const POINTS: usize = 5;
const SE_SLACK: f64 = 5.0;
const VAR_SLACK: f64 = 1.05;

fn target() -> Objective {
    let e = Objective::scalar(Component::Exp { scale: 1.0 }).unwrap();
    Objective::separable(&[e.clone(), e]).unwrap()
}

fn cells() -> Vec<(String, EstimatorOracle)> {
    let unc = NoiseModel::Uncontrolled { sigma: 0.5 };
    let ctl = NoiseModel::Controlled {
        sigma: 0.5,
        coupling: Coupling::Tilt,
    };
    let mut out = Vec::new();
    for scheme in [
        PerturbationScheme::Spsa,
        PerturbationScheme::Rdsa,
        PerturbationScheme::Sf,
    ] {
        for (class, noise, fb) in [
            (FunctionClass::ConvexSmooth, unc, Feedback::OnePoint),
            (FunctionClass::C3, unc, Feedback::TwoPoint),
            (FunctionClass::ConvexSmooth, ctl, Feedback::TwoPoint),
            (FunctionClass::C3, ctl, Feedback::TwoPoint),
        ] {
            let o = EstimatorOracle::new(target(), scheme, noise, fb, class).unwrap();
            out.push((
                format!(
                    "{scheme:?}/{class:?}/{fb:?}/{}",
                    if noise.is_controlled() { "ctl" } else { "unc" }
                ),
                o,
            ));
        }
    }
    out
}

#[test]
fn measured_bias_and_variance_stay_inside_envelopes() {
    let mut failures = Vec::new();
    for (c, (name, o)) in cells().into_iter().enumerate() {
        let env = o.envelope();
        let mut pick = RngStream::new(0xb1a5, c as u64).rng();
        for i in 0..POINTS {
            let x = [pick.random_range(-0.9..0.9), pick.random_range(-0.9..0.9)];
            for (j, &delta) in DELTAS.iter().enumerate() {
                let mut rng = RngStream::new(0xe1, (c * 100 + i * 10 + j) as u64).rng();
                let r = probe_bias_variance(&o, &x, delta, REPS, &mut rng).unwrap();
                let (b, v) = env.check(delta).unwrap();
                if r.bias_est > b + SE_SLACK * r.bias_se || r.var_est > v * VAR_SLACK + SE_SLACK * r.var_se {
                    failures.push(format!(
                        "{name} x = {x:?} δ = {delta}: bias {:.3e} (≤ {b:.3e}), var {:.3e} (≤ {v:.3e})",
                        r.bias_est, r.var_est
                    ));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equal_streams_give_bitwise_equal_runs(seed in any::<u64>(), n in 2usize..400) {
        let f = Objective::try_from(boundary_quadratic()).unwrap();
        let o = EstimatorOracle::smoothing(f.clone(), NoiseModel::Uncontrolled { sigma: 1.0 }).unwrap();
        let reg = Regularizer::default();
        let k = bgo::harness::problem_constants(&o, &reg);
        let s = schedule_opt_convex(&k, n).unwrap();
        let body = f.domain().clone();
        let go = || {
            let mut rng = RngStream::new(seed, 0).derive(n as u64).rng();
            let opts = RunOptions { recording: Recording::Full, ..RunOptions::default() };
            run_with(&o, &s, n, &body, &reg, &body.center(), &mut rng, RunMode::Optimization, opts).unwrap()
        };
        let (a, b) = (go(), go());
        prop_assert_eq!(a.error.to_bits(), b.error.to_bits());
        prop_assert_eq!(a.iterates, b.iterates);
        prop_assert_eq!(a.eval_points, b.eval_points);
    }
}
