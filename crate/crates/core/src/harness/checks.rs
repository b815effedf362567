//! Deterministic property suite run by `bgo check`.

use serde::{Deserialize, Serialize};

use super::presets::{boundary_quadratic, centered_quadratic};
use super::probe::probe_bias_variance;
use crate::adversarial::{
    envelope_violations, gamma_mean_sc, separable_oracle, validation_grid, HardClass, HardInstance,
};
use crate::error::Result;
use crate::estimators::{EstimatorOracle, Feedback, FunctionClass, NoiseModel, PerturbationScheme};
use crate::geometry::ConvexBody;
use crate::oracle::{ExactOracle, GradientOracle, OracleEnvelope};
use crate::rng::RngStream;
use crate::solver::{run_with, EtaRule, Recording, Regularizer, RunMode, RunOptions, Schedule};
use crate::testbed::{finite_diff_check, Component, Objective};

pub const STEP_TOL: f64 = 1e-8;
pub const FD_TOL: f64 = 1e-4;
pub const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.items.push(CheckItem {
            name: name.into(),
            passed,
            detail,
        });
    }
}

/// Every objective family shipped with the crate.
pub fn testbeds() -> Result<Vec<(String, Objective)>> {
    let mut out = vec![
        (
            "boundary_quadratic".to_string(),
            Objective::try_from(boundary_quadratic())?,
        ),
        (
            "centered_quadratic".to_string(),
            Objective::try_from(centered_quadratic())?,
        ),
        ("softabs".to_string(), Objective::softabs(1.0, 0.1)?),
        ("softabs_narrow".to_string(), Objective::softabs(-1.0, 0.02)?),
        ("sc_pair".to_string(), Objective::sc_pair(-1.0, 0.3)?),
        (
            "kinked".to_string(),
            Objective::scalar(Component::KinkedQuadratic { a_neg: 1.0, a_pos: 2.0 })?,
        ),
        ("exp".to_string(), Objective::scalar(Component::Exp { scale: 1.0 })?),
        (
            "quadratic_3d".to_string(),
            Objective::quadratic(&[1.0, 2.0, 0.5], &[0.3, -0.1, 0.0])?,
        ),
    ];
    let sep = Objective::separable(&[Objective::softabs(1.0, 0.1)?, Objective::sc_pair(1.0, 0.2)?])?;
    out.push(("separable".to_string(), sep));
    let ball = Objective::quadratic(&[1.0, 1.0], &[-2.0, 1.0])?.on(ConvexBody::ball(vec![0.0, 0.0], 1.0)?)?;
    out.push(("ball_quadratic".to_string(), ball));
    Ok(out)
}

fn check_finite_differences(r: &mut CheckReport) -> Result<()> {
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    for (i, (name, f)) in testbeds()?.into_iter().enumerate() {
        let mut rng = RngStream::new(0xfd, i as u64).rng();
        let e = finite_diff_check(&f, 200, &mut rng);
        if e > worst {
            worst = e;
            worst_name = name;
        }
    }
    r.push(
        "finite_differences",
        worst <= FD_TOL,
        format!("worst relative error {worst:.3e} ({worst_name}), tolerance {FD_TOL:e}"),
    );
    Ok(())
}

fn check_adversarial(r: &mut CheckReport) -> Result<()> {
    let (xs, deltas) = validation_grid();
    let mut violations = 0;
    let mut cases = 0;
    for class in [HardClass::ConvexSmooth, HardClass::StronglyConvex] {
        for (c1, p) in [(1.0, 2.0), (0.5, 1.0), (4.0, 0.5)] {
            for eps in [0.01, 0.05, 0.2] {
                for v in [1.0, -1.0] {
                    let env = OracleEnvelope::type_i(c1, p, 1.0, 2.0)?;
                    let inst = HardInstance::scalar(class, v, eps, env)?;
                    violations += envelope_violations(&inst, &xs, &deltas);
                    cases += 1;
                }
            }
        }
    }
    r.push(
        "adversarial_envelope",
        violations == 0,
        format!(
            "{violations} violations over {cases} instances × {} grid points",
            xs.len() * deltas.len()
        ),
    );

    let mut worst: f64 = 0.0;
    for (c1, p) in [(1.0, 2.0), (0.5, 1.0), (4.0, 0.5)] {
        let env = OracleEnvelope::type_i(c1, p, 1.0, 2.0)?;
        for eps in [0.01, 0.05, 0.2] {
            for &d in &deltas {
                for &x in &xs {
                    let gap = (gamma_mean_sc(1.0, x, d, eps, &env) - gamma_mean_sc(-1.0, x, d, eps, &env)).abs();
                    let expect = 2.0 * (eps - c1 * d.powf(p)).max(0.0);
                    worst = worst.max((gap - expect).abs());
                }
            }
        }
    }
    r.push(
        "sc_gap_identity",
        worst <= GAP_TOL,
        format!("max |gap − 2(ε − C1δ^p)⁺| = {worst:.3e}, tolerance {GAP_TOL:e}"),
    );
    Ok(())
}

fn check_separable(r: &mut CheckReport) -> Result<()> {
    let parts: Vec<HardInstance> = [(0.5, 0.25), (1.5, 2.0), (1.0, 0.75)]
        .iter()
        .zip([1.0, -1.0, 1.0])
        .map(|(&(c1, c2), v)| {
            HardInstance::scalar(
                HardClass::StronglyConvex,
                v,
                0.1,
                OracleEnvelope::type_i(c1, 1.0, c2, 2.0)?,
            )
        })
        .collect::<Result<_>>()?;
    let o = separable_oracle(&parts)?;
    let env = o.envelope();
    let mut ok = env.c1 == (0.25f64 + 2.25 + 1.0).sqrt() && env.c2 == 3.0;
    let x = [0.3, -0.7, 0.1];
    let means = o.mean(&x, 0.2);
    for (i, p) in parts.iter().enumerate() {
        ok &= means[i] == p.gamma_mean_coord(0, x[i], 0.2);
    }
    let d4 = HardInstance::new(
        HardClass::ConvexSmooth,
        vec![1.0, -1.0, -1.0, 1.0],
        0.05,
        OracleEnvelope::type_i(2.0, 2.0, 8.0, 2.0)?,
    )?;
    let coord = d4.coordinate_envelope();
    ok &= coord.c1 == 1.0 && coord.c2 == 2.0;
    let composed = d4.oracle()?.envelope();
    ok &= composed.c1 == 2.0 && composed.c2 == 8.0;
    r.push(
        "separable_arithmetic",
        ok,
        format!(
            "composed (C1, C2) = ({}, {}), d = 4 round trip = ({}, {})",
            env.c1, env.c2, composed.c1, composed.c2
        ),
    );
    Ok(())
}

fn check_step_inequality(r: &mut CheckReport) -> Result<()> {
    let mut worst = f64::INFINITY;
    let f = Objective::try_from(boundary_quadratic())?;
    let noisy = EstimatorOracle::smoothing(f.clone(), NoiseModel::Uncontrolled { sigma: 1.0 })?;
    let exact = ExactOracle::new(Objective::quadratic(&[1.0, 3.0], &[-2.0, 0.5])?);
    let ball = Objective::quadratic(&[1.0, 1.0], &[-2.0, 1.0])?.on(ConvexBody::ball(vec![0.0, 0.0], 1.0)?)?;
    let on_ball = EstimatorOracle::new(
        ball,
        PerturbationScheme::Spsa,
        NoiseModel::Uncontrolled { sigma: 0.5 },
        Feedback::TwoPoint,
        FunctionClass::ConvexSmooth,
    )?;
    let oracles: [&dyn GradientOracle; 3] = [&noisy, &exact, &on_ball];
    for (i, o) in oracles.into_iter().enumerate() {
        let sched = Schedule::manual(
            0.2,
            EtaRule::Polynomial {
                alpha: 1.0,
                a: 1.0,
                r: 2.0 / 3.0,
                l: 1.0,
            },
        )?;
        let body = o.objective().domain().clone();
        let opts = RunOptions {
            recording: Recording::Summary,
            step_checks: 100,
            check_seed: i as u64,
        };
        let mut rng = RngStream::new(0x57e9, i as u64).rng();
        let tr = run_with(
            o,
            &sched,
            500,
            &body,
            &Regularizer::default(),
            &body.center(),
            &mut rng,
            RunMode::Optimization,
            opts,
        )?;
        worst = worst.min(tr.min_step_gap.unwrap_or(f64::NEG_INFINITY));
    }
    r.push(
        "step_inequality",
        worst >= -STEP_TOL,
        format!("smallest slack {worst:.3e} over 3 runs × 499 steps × 100 points, tolerance {STEP_TOL:e}"),
    );
    Ok(())
}

fn check_estimator_envelopes(r: &mut CheckReport) -> Result<()> {
    let f = Objective::try_from(boundary_quadratic())?;
    let e = Objective::scalar(Component::Exp { scale: 1.0 })?;
    let noise = NoiseModel::Uncontrolled { sigma: 0.5 };
    let oracles = [
        EstimatorOracle::smoothing(f.clone(), noise)?,
        EstimatorOracle::new(
            f,
            PerturbationScheme::Spsa,
            noise,
            Feedback::OnePoint,
            FunctionClass::ConvexSmooth,
        )?,
        EstimatorOracle::new(
            e,
            PerturbationScheme::Spsa,
            noise,
            Feedback::TwoPoint,
            FunctionClass::C3,
        )?,
    ];
    let mut bad = Vec::new();
    for (i, o) in oracles.iter().enumerate() {
        let env = o.envelope();
        for (j, &delta) in [0.5, 0.1].iter().enumerate() {
            let x = [0.5];
            let mut rng = RngStream::new(0xe7, (i * 2 + j) as u64).rng();
            let pr = probe_bias_variance(o, &x, delta, 20_000, &mut rng)?;
            let (b, v) = env.check(delta)?;
            if pr.bias_est > b + 5.0 * pr.bias_se || pr.var_est > v + 5.0 * pr.var_se {
                bad.push(format!(
                    "oracle {i} at δ = {delta}: bias {:.3e} var {:.3e} vs ({b:.3e}, {v:.3e})",
                    pr.bias_est, pr.var_est
                ));
            }
        }
    }
    r.push(
        "estimator_envelopes",
        bad.is_empty(),
        if bad.is_empty() {
            "measured bias and variance within the declared envelopes".into()
        } else {
            bad.join("; ")
        },
    );
    Ok(())
}

/// Runs every check; the report lists each item with a short detail line.
pub fn run_checks() -> Result<CheckReport> {
    let mut r = CheckReport::default();
    check_finite_differences(&mut r)?;
    check_adversarial(&mut r)?;
    check_separable(&mut r)?;
    check_step_inequality(&mut r)?;
    check_estimator_envelopes(&mut r)?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let r = run_checks().unwrap();
        for i in &r.items {
            assert!(i.passed, "{}: {}", i.name, i.detail);
        }
        assert_eq!(r.items.len(), 6);
    }
}
