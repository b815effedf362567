//! Biased noisy gradient oracles for bandit convex optimization.
//!
//! The crate provides zeroth-order gradient estimators with declared
//! bias/variance envelopes, mirror descent with closed-form tolerance and
//! step-size schedules, constructive lower-bound instances, and an experiment
//! harness that fits empirical convergence rates.

pub mod adversarial;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod solver;
pub mod testbed;

pub use adversarial::{
    epsilon_star, lower_bound_value, separable_oracle, HardClass, HardInstance, SeparableHardOracle,
};
pub use error::{Error, Result};
pub use estimators::{
    envelope_for, Coupling, EstimatorOracle, Feedback, FunctionClass, NoiseModel, PerturbationScheme,
};
pub use geometry::{dual_norm, project, ConvexBody, Norm};
pub use harness::{run_checks, ExperimentConfig, ExperimentKind, Report};
pub use oracle::{
    envelope_check, ExactOracle, GradientOracle, OracleEnvelope, OracleQuery, OracleResponse, OracleType,
};
pub use rng::{RngStream, StreamRng};
pub use solver::{
    md_step, run, run_with, EtaRule, ProblemConstants, Regularizer, RunMode, RunOptions, RunTrace, Schedule,
    ScheduleMode,
};
pub use testbed::{finite_diff_check, Component, Objective};
