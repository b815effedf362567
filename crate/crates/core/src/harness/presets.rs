//! Ready-made configurations behind the CLI subcommands and the acceptance suite.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, OracleSpec, ProbeSpec, ScheduleSpec};
use crate::adversarial::HardClass;
use crate::error::{Error, Result};
use crate::estimators::{Coupling, Feedback, FunctionClass, NoiseModel, PerturbationScheme};
use crate::geometry::{ConvexBody, Norm};
use crate::solver::ScheduleMode;
use crate::testbed::{Component, ObjectiveSpec};

pub const DEFAULT_HORIZONS: [usize; 7] = [1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000];
pub const DEFAULT_REPS: usize = 16;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const PROBE_DELTAS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemClass {
    Convex,
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    OnePoint,
    Smoothing,
    Spsa,
    Rdsa,
    Sf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Controlled,
    Uncontrolled,
}

/// `½x² − 1.25x + 25/32` on `[0, 1]`: minimizer `1` on the boundary,
/// `f* = 1/32`, and a small outward slope `f'(1) = −0.25`.
pub fn boundary_quadratic() -> ObjectiveSpec {
    ObjectiveSpec {
        components: vec![Component::Quadratic { a: 1.0, b: -1.25 }],
        offset: 25.0 / 32.0,
        domain: ConvexBody::Box {
            lower: vec![0.0],
            upper: vec![1.0],
        },
    }
}

/// `½x²` on `[−1, 1]`: interior minimizer, `L = μ = 1`.
pub fn centered_quadratic() -> ObjectiveSpec {
    ObjectiveSpec {
        components: vec![Component::Quadratic { a: 1.0, b: 0.0 }],
        offset: 0.0,
        domain: ConvexBody::Box {
            lower: vec![-1.0],
            upper: vec![1.0],
        },
    }
}

fn noise_model(noise: NoiseKind, sigma: f64) -> NoiseModel {
    match noise {
        NoiseKind::Uncontrolled => NoiseModel::Uncontrolled { sigma },
        NoiseKind::Controlled => NoiseModel::Controlled {
            sigma,
            coupling: Coupling::Tilt,
        },
    }
}

fn estimator_oracle(estimator: EstimatorKind, noise: NoiseModel, class: FunctionClass) -> OracleSpec {
    let two_point = |scheme| OracleSpec::Estimator {
        scheme,
        feedback: Feedback::TwoPoint,
        class,
        noise,
        norm: Norm::Euclidean,
        envelope: None,
    };
    match estimator {
        EstimatorKind::OnePoint => OracleSpec::Estimator {
            scheme: PerturbationScheme::Spsa,
            feedback: Feedback::OnePoint,
            class,
            noise,
            norm: Norm::Euclidean,
            envelope: None,
        },
        EstimatorKind::Smoothing => OracleSpec::Smoothing { noise, envelope: None },
        EstimatorKind::Spsa => two_point(PerturbationScheme::Spsa),
        EstimatorKind::Rdsa => two_point(PerturbationScheme::Rdsa),
        EstimatorKind::Sf => two_point(PerturbationScheme::Sf),
    }
}

fn objective_for_class(_class: ProblemClass) -> ObjectiveSpec {
    boundary_quadratic()
}

fn base(id: &str, kind: ExperimentKind, oracle: OracleSpec, schedule: ScheduleSpec) -> ExperimentConfig {
    ExperimentConfig {
        experiment_id: id.into(),
        kind,
        seed: DEFAULT_SEED,
        replications: DEFAULT_REPS,
        horizons: DEFAULT_HORIZONS.to_vec(),
        threads: 0,
        output: None,
        objective: None,
        oracle,
        schedule,
        probe: None,
    }
}

/// Rate experiment on the class's testbed quadratic with Gaussian noise `σ`.
pub fn rate_config(
    class: ProblemClass,
    estimator: EstimatorKind,
    noise: NoiseKind,
    sigma: f64,
) -> Result<ExperimentConfig> {
    let oracle = estimator_oracle(estimator, noise_model(noise, sigma), FunctionClass::ConvexSmooth);
    let mut schedule = ScheduleSpec::tuned(match class {
        ProblemClass::Convex => ScheduleMode::OptConvex,
        ProblemClass::Sc => ScheduleMode::OptSc,
    });
    if class == ProblemClass::Sc {
        schedule.alpha = Some(SC_ALPHA);
    }
    let id = format!(
        "rate-{}-{}-{}",
        class_name(class),
        estimator_name(estimator),
        noise_name(noise)
    );
    let mut cfg = base(&id, ExperimentKind::Rate, oracle, schedule);
    cfg.objective = Some(objective_for_class(class));
    cfg.validate()?;
    Ok(cfg)
}

/// Regularizer scale used with the strongly convex schedule on the testbed
/// (`L = μ = 1`), so that `αμ > 2L` with room to spare.
pub const SC_ALPHA: f64 = 3.0;

/// Regret experiment. The oracle is picked by its `(p, q)` cell:
/// `(2, 2)` smoothing, `(1, 2)` one-point SPSA, `(1, 0)` controlled two-point SPSA.
pub fn regret_config(class: ProblemClass, p: f64, q: f64) -> Result<ExperimentConfig> {
    let estimator = match (p, q) {
        (p, q) if p == 2.0 && q == 2.0 => (EstimatorKind::Smoothing, NoiseKind::Uncontrolled),
        (p, q) if p == 1.0 && q == 2.0 => (EstimatorKind::OnePoint, NoiseKind::Uncontrolled),
        (p, q) if p == 1.0 && q == 0.0 => (EstimatorKind::Spsa, NoiseKind::Controlled),
        _ => {
            return Err(Error::config(
                "oracle",
                format!("no estimator provides the cell (p, q) = ({p}, {q}); use (2,2), (1,2) or (1,0)"),
            ))
        }
    };
    let oracle = estimator_oracle(
        estimator.0,
        noise_model(estimator.1, DEFAULT_SIGMA),
        FunctionClass::ConvexSmooth,
    );
    let mut schedule = ScheduleSpec::tuned(match class {
        ProblemClass::Convex => ScheduleMode::RegretConvex,
        ProblemClass::Sc => ScheduleMode::RegretSc,
    });
    if class == ProblemClass::Sc {
        schedule.alpha = Some(SC_ALPHA);
    }
    let id = format!("regret-{}-p{p}-q{q}", class_name(class));
    let mut cfg = base(&id, ExperimentKind::Regret, oracle, schedule);
    cfg.objective = Some(objective_for_class(class));
    cfg.validate()?;
    Ok(cfg)
}

/// Mirror descent with the matching tuned schedule against the hard pair at `ε*(n)`.
pub fn lower_bound_config(
    class: ProblemClass,
    p: f64,
    q: f64,
    c1: f64,
    c2: f64,
    n: usize,
    reps: usize,
) -> Result<ExperimentConfig> {
    let (hard, mode) = match class {
        ProblemClass::Convex => (HardClass::ConvexSmooth, ScheduleMode::OptConvex),
        ProblemClass::Sc => (HardClass::StronglyConvex, ScheduleMode::OptSc),
    };
    let oracle = OracleSpec::Hard {
        class: hard,
        p,
        q,
        c1,
        c2,
        eps: None,
    };
    let id = format!("lowerbound-{}-p{p}-q{q}", class_name(class));
    let mut cfg = base(&id, ExperimentKind::LowerBound, oracle, ScheduleSpec::tuned(mode));
    cfg.horizons = vec![n];
    cfg.replications = reps;
    cfg.validate()?;
    Ok(cfg)
}

/// The estimator cells whose bias and variance slopes are probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeCell {
    /// One-point SPSA on the kinked quadratic at its kink (bias `δ/4`).
    OnePointKinked,
    /// Two-point SPSA on `e^x` (bias `e^x(sinh δ/δ − 1)`).
    SpsaExp,
    /// Smoothing on `e^x − 1` (same bias as two-point SPSA).
    SmoothingExp,
}

pub fn probe_config(cell: ProbeCell, sigma: f64, reps: usize) -> Result<ExperimentConfig> {
    let noise = NoiseModel::Uncontrolled { sigma };
    let interval = ConvexBody::Box {
        lower: vec![-1.0],
        upper: vec![1.0],
    };
    let (objective, oracle) = match cell {
        ProbeCell::OnePointKinked => (
            ObjectiveSpec {
                components: vec![Component::KinkedQuadratic { a_neg: 1.0, a_pos: 2.0 }],
                offset: 0.0,
                domain: interval,
            },
            estimator_oracle(EstimatorKind::OnePoint, noise, FunctionClass::ConvexSmooth),
        ),
        ProbeCell::SpsaExp => (
            ObjectiveSpec {
                components: vec![Component::Exp { scale: 1.0 }],
                offset: 0.0,
                domain: interval,
            },
            estimator_oracle(EstimatorKind::Spsa, noise, FunctionClass::C3),
        ),
        ProbeCell::SmoothingExp => (
            ObjectiveSpec {
                components: vec![Component::Exp { scale: 1.0 }],
                offset: -1.0,
                domain: interval,
            },
            estimator_oracle(EstimatorKind::Smoothing, noise, FunctionClass::ConvexSmooth),
        ),
    };
    let id = format!("probe-{}", serde_json::to_value(cell)?.as_str().unwrap_or("cell"));
    let mut cfg = base(
        &id,
        ExperimentKind::Probe,
        oracle,
        ScheduleSpec::tuned(ScheduleMode::Manual),
    );
    cfg.schedule.delta = Some(1.0);
    cfg.schedule.eta = Some(crate::solver::EtaRule::Constant { eta: 1.0 });
    cfg.horizons = vec![1];
    cfg.objective = Some(objective);
    cfg.probe = Some(ProbeSpec {
        x: vec![0.0],
        deltas: PROBE_DELTAS.to_vec(),
        reps,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn class_name(c: ProblemClass) -> &'static str {
    match c {
        ProblemClass::Convex => "convex",
        ProblemClass::Sc => "sc",
    }
}

fn estimator_name(e: EstimatorKind) -> &'static str {
    match e {
        EstimatorKind::OnePoint => "one-point",
        EstimatorKind::Smoothing => "smoothing",
        EstimatorKind::Spsa => "spsa",
        EstimatorKind::Rdsa => "rdsa",
        EstimatorKind::Sf => "sf",
    }
}

fn noise_name(n: NoiseKind) -> &'static str {
    match n {
        NoiseKind::Controlled => "controlled",
        NoiseKind::Uncontrolled => "uncontrolled",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn testbed_optima() {
        let f = crate::testbed::Objective::try_from(boundary_quadratic()).unwrap();
        assert_eq!(f.x_star(), &[1.0]);
        assert_eq!(f.f_star(), 1.0 / 32.0);
        assert_eq!(f.grad(&[1.0]), vec![-0.25]);
        let g = crate::testbed::Objective::try_from(centered_quadratic()).unwrap();
        assert_eq!((g.smoothness(), g.strong_convexity()), (1.0, 1.0));
    }

    #[test]
    fn predicted_exponents_of_presets() {
        use crate::harness::predicted_exponent;
        let cases = [
            (
                rate_config(
                    ProblemClass::Convex,
                    EstimatorKind::Smoothing,
                    NoiseKind::Uncontrolled,
                    1.0,
                ),
                1.0 / 3.0,
            ),
            (
                rate_config(
                    ProblemClass::Convex,
                    EstimatorKind::OnePoint,
                    NoiseKind::Uncontrolled,
                    1.0,
                ),
                0.25,
            ),
            (
                rate_config(ProblemClass::Convex, EstimatorKind::Spsa, NoiseKind::Controlled, 1.0),
                0.5,
            ),
            (
                rate_config(ProblemClass::Sc, EstimatorKind::Smoothing, NoiseKind::Uncontrolled, 1.0),
                0.5,
            ),
            (regret_config(ProblemClass::Convex, 2.0, 2.0), 1.0 / 3.0),
        ];
        for (cfg, want) in cases {
            let got = predicted_exponent(&cfg.unwrap()).unwrap().unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let probe = probe_config(ProbeCell::SpsaExp, 1.0, 1000).unwrap();
        assert_eq!(predicted_exponent(&probe).unwrap(), None);
    }

    #[test]
    fn presets_validate_and_round_trip() {
        let mut all = vec![
            rate_config(
                ProblemClass::Convex,
                EstimatorKind::Smoothing,
                NoiseKind::Uncontrolled,
                1.0,
            )
            .unwrap(),
            rate_config(ProblemClass::Convex, EstimatorKind::Spsa, NoiseKind::Controlled, 1.0).unwrap(),
            rate_config(ProblemClass::Sc, EstimatorKind::Smoothing, NoiseKind::Uncontrolled, 1.0).unwrap(),
            regret_config(ProblemClass::Convex, 2.0, 2.0).unwrap(),
            lower_bound_config(ProblemClass::Convex, 2.0, 2.0, 1.0, 1.0, 10_000, 64).unwrap(),
        ];
        for cell in [ProbeCell::OnePointKinked, ProbeCell::SpsaExp, ProbeCell::SmoothingExp] {
            all.push(probe_config(cell, 1e-3, 1000).unwrap());
        }
        for cfg in all {
            let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn unsupported_cells_are_config_errors() {
        assert!(matches!(
            rate_config(
                ProblemClass::Convex,
                EstimatorKind::OnePoint,
                NoiseKind::Controlled,
                1.0
            ),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            regret_config(ProblemClass::Convex, 3.0, 1.0),
            Err(Error::Config { .. })
        ));
    }
}
