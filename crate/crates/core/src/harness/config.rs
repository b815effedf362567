use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversarial::{convex_eps_limit, epsilon_star, HardClass, HardInstance};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorOracle, Feedback, FunctionClass, NoiseModel, PerturbationScheme};
use crate::geometry::Norm;
use crate::oracle::{ExactOracle, GradientOracle, OracleEnvelope};
use crate::solver::{EtaRule, Regularizer, ScheduleMode};
use crate::testbed::{Objective, ObjectiveSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rate,
    Regret,
    LowerBound,
    Probe,
}

/// Which oracle an experiment queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    Exact,
    Estimator {
        scheme: PerturbationScheme,
        feedback: Feedback,
        class: FunctionClass,
        #[serde(default)]
        noise: NoiseModel,
        #[serde(default)]
        norm: Norm,
        /// Overrides the computed envelope constants.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<OracleEnvelope>,
    },
    Smoothing {
        #[serde(default)]
        noise: NoiseModel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<OracleEnvelope>,
    },
    /// One-dimensional hard pair; `eps` defaults to the optimal `ε*(n)`.
    Hard {
        class: HardClass,
        p: f64,
        q: f64,
        c1: f64,
        c2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub mode: ScheduleMode,
    /// Regularizer scale. Defaults to `4L/μ` for strongly convex modes and 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Tolerance for `manual` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Step rule for `manual` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaRule>,
    /// Start point; defaults to the center of the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
}

impl ScheduleSpec {
    pub fn tuned(mode: ScheduleMode) -> Self {
        Self {
            mode,
            alpha: None,
            delta: None,
            eta: None,
            x1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub x: Vec<f64>,
    pub deltas: Vec<f64>,
    pub reps: usize,
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replications: usize,
    pub horizons: Vec<usize>,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub threads: usize,
    /// CSV path; the JSON summary goes next to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    pub oracle: OracleSpec,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

fn cfg_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::config(path, msg)
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => cfg_err(path, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// Checks every field, reporting the first problem with its path.
    pub fn validate(&self) -> Result<()> {
        if self.experiment_id.is_empty()
            || !self
                .experiment_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(cfg_err("experiment_id", "must be nonempty and use [A-Za-z0-9-_.]"));
        }
        if self.replications == 0 {
            return Err(cfg_err("replications", "must be >= 1"));
        }
        if self.horizons.is_empty() {
            return Err(cfg_err("horizons", "must list at least one horizon"));
        }
        for (i, n) in self.horizons.iter().enumerate() {
            if *n == 0 {
                return Err(cfg_err(format!("horizons[{i}]"), "must be >= 1"));
            }
            if i > 0 && *n <= self.horizons[i - 1] {
                return Err(cfg_err(
                    format!("horizons[{i}]"),
                    "horizons must be strictly increasing",
                ));
            }
        }
        let modes_ok = match self.kind {
            ExperimentKind::Rate | ExperimentKind::LowerBound => matches!(
                self.schedule.mode,
                ScheduleMode::OptConvex | ScheduleMode::OptSc | ScheduleMode::Manual
            ),
            ExperimentKind::Regret => matches!(
                self.schedule.mode,
                ScheduleMode::RegretConvex | ScheduleMode::RegretSc | ScheduleMode::Manual
            ),
            ExperimentKind::Probe => true,
        };
        if !modes_ok {
            return Err(cfg_err(
                "schedule.mode",
                format!("{:?} does not fit a {:?} experiment", self.schedule.mode, self.kind),
            ));
        }
        match self.kind {
            ExperimentKind::Rate | ExperimentKind::Regret if self.horizons.len() < 3 => {
                return Err(cfg_err("horizons", "a rate fit needs at least 3 horizons"));
            }
            ExperimentKind::LowerBound => {
                if self.horizons.len() != 1 {
                    return Err(cfg_err("horizons", "a lower-bound experiment uses exactly one horizon"));
                }
                if self.replications < 2 {
                    return Err(cfg_err("replications", "must be >= 2 for a standard error"));
                }
                if !matches!(self.oracle, OracleSpec::Hard { .. }) {
                    return Err(cfg_err("oracle.kind", "a lower-bound experiment needs a hard oracle"));
                }
            }
            ExperimentKind::Probe => {
                let p = self
                    .probe
                    .as_ref()
                    .ok_or_else(|| cfg_err("probe", "missing probe section"))?;
                if p.reps < super::probe::MIN_PROBE_REPS {
                    return Err(cfg_err("probe.reps", "must be >= 1000"));
                }
                if p.deltas.len() < 2 {
                    return Err(cfg_err("probe.deltas", "needs at least two tolerances"));
                }
                for (i, d) in p.deltas.iter().enumerate() {
                    if !(*d > 0.0 && *d <= 1.0) {
                        return Err(cfg_err(format!("probe.deltas[{i}]"), "must lie in (0, 1]"));
                    }
                }
            }
            _ => {}
        }
        self.validate_oracle()?;
        if let Some(a) = self.schedule.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(cfg_err("schedule.alpha", "must be positive"));
            }
        }
        if self.schedule.mode == ScheduleMode::Manual {
            let d = self
                .schedule
                .delta
                .ok_or_else(|| cfg_err("schedule.delta", "manual mode needs a tolerance"))?;
            crate::oracle::validate_delta(d).map_err(|e| at("schedule.delta", e))?;
            let eta = self
                .schedule
                .eta
                .ok_or_else(|| cfg_err("schedule.eta", "manual mode needs a step rule"))?;
            crate::solver::Schedule::manual(d, eta).map_err(|e| at("schedule.eta", e))?;
        }
        let objective = self.objective_for(self.horizons[0])?;
        self.build_oracle(self.horizons[0], 1.0).map_err(|e| at("oracle", e))?;
        if let Some(x1) = &self.schedule.x1 {
            if !objective.domain().contains(x1, 1e-12) || x1.len() != objective.dim() {
                return Err(cfg_err("schedule.x1", "start point must lie in the domain"));
            }
        }
        if let Some(p) = &self.probe {
            if p.x.len() != objective.dim() {
                return Err(cfg_err("probe.x", "dimension does not match the objective"));
            }
        }
        Ok(())
    }

    fn validate_oracle(&self) -> Result<()> {
        match &self.oracle {
            OracleSpec::Exact => Ok(()),
            OracleSpec::Estimator { noise, envelope, .. } | OracleSpec::Smoothing { noise, envelope } => {
                noise.validate().map_err(|e| at("oracle.noise.sigma", e))?;
                if let Some(env) = envelope {
                    OracleEnvelope::new(env.c1, env.p, env.c2, env.q, env.oracle_type)
                        .map_err(|e| at("oracle.envelope", e))?;
                }
                if self.objective.is_none() {
                    return Err(cfg_err("objective", "estimator oracles need an objective"));
                }
                Ok(())
            }
            OracleSpec::Hard {
                class,
                p,
                q,
                c1,
                c2,
                eps,
            } => {
                for (name, v, min_ok) in [
                    ("p", *p, *p > 0.0),
                    ("q", *q, *q >= 0.0),
                    ("c1", *c1, *c1 > 0.0),
                    ("c2", *c2, *c2 > 0.0),
                ] {
                    if !(v.is_finite() && min_ok) {
                        return Err(cfg_err(format!("oracle.{name}"), format!("invalid value {v}")));
                    }
                }
                let lim = convex_eps_limit();
                match eps {
                    Some(e) if e.is_nan() || *e <= 0.0 => Err(cfg_err("oracle.eps", "must be positive")),
                    Some(e) if *class == HardClass::ConvexSmooth && *e >= lim => {
                        Err(cfg_err("oracle.eps", format!("must be below 1/(4 ln 2) ≈ {lim:.6}")))
                    }
                    Some(_) => Ok(()),
                    None => {
                        for (i, n) in self.horizons.iter().enumerate() {
                            let e = epsilon_star(*class, *p, *q, *c1, *c2, *n as u64).map_err(|e| at("oracle", e))?;
                            if *class == HardClass::ConvexSmooth && e >= lim {
                                return Err(cfg_err(
                                    "oracle.eps",
                                    format!(
                                        "eps*(n = {}) = {e} is not below 1/(4 ln 2); horizons[{i}] is too small",
                                        n
                                    ),
                                ));
                            }
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    /// The ε used by a hard oracle at horizon `n`.
    pub fn hard_eps(&self, n: usize) -> Result<Option<f64>> {
        match &self.oracle {
            OracleSpec::Hard {
                class,
                p,
                q,
                c1,
                c2,
                eps,
            } => Ok(Some(match eps {
                Some(e) => *e,
                None => epsilon_star(*class, *p, *q, *c1, *c2, n as u64)?,
            })),
            _ => Ok(None),
        }
    }

    fn hard_instance(&self, n: usize, v: f64) -> Result<Option<HardInstance>> {
        let OracleSpec::Hard {
            class, p, q, c1, c2, ..
        } = &self.oracle
        else {
            return Ok(None);
        };
        let eps = self.hard_eps(n)?.unwrap_or_default();
        let env = OracleEnvelope::type_i(*c1, *p, *c2, *q)?;
        Ok(Some(HardInstance::scalar(*class, v, eps, env)?))
    }

    /// The objective at horizon `n` (the `v = +1` member for hard oracles).
    pub fn objective_for(&self, n: usize) -> Result<Objective> {
        if let Some(inst) = self.hard_instance(n, 1.0)? {
            return inst.objective();
        }
        let spec = self
            .objective
            .clone()
            .ok_or_else(|| cfg_err("objective", "missing objective"))?;
        Objective::try_from(spec).map_err(|e| at("objective", e))
    }

    /// Builds the oracle at horizon `n`; `v` selects the hard-pair member.
    pub fn build_oracle(&self, n: usize, v: f64) -> Result<Box<dyn GradientOracle>> {
        if let Some(inst) = self.hard_instance(n, v)? {
            return Ok(Box::new(inst.oracle()?));
        }
        let f = self.objective_for(n)?;
        Ok(match &self.oracle {
            OracleSpec::Exact => Box::new(ExactOracle::new(f)),
            OracleSpec::Estimator {
                scheme,
                feedback,
                class,
                noise,
                norm,
                envelope,
            } => {
                let o = EstimatorOracle::with_norm(f, *scheme, *noise, *feedback, *class, *norm)
                    .map_err(|e| at("oracle", e))?;
                Box::new(match envelope {
                    Some(env) => o.with_envelope(*env),
                    None => o,
                })
            }
            OracleSpec::Smoothing { noise, envelope } => {
                let o = EstimatorOracle::smoothing(f, *noise).map_err(|e| at("oracle", e))?;
                Box::new(match envelope {
                    Some(env) => o.with_envelope(*env),
                    None => o,
                })
            }
            OracleSpec::Hard { .. } => unreachable!("handled above"),
        })
    }

    /// Regularizer for this schedule: `alpha` if given, else `4L/μ` for
    /// strongly convex modes and 1 otherwise.
    pub fn regularizer(&self, f: &Objective, norm: Norm) -> Result<Regularizer> {
        let alpha = match (self.schedule.alpha, self.schedule.mode) {
            (Some(a), _) => a,
            (None, ScheduleMode::OptSc | ScheduleMode::RegretSc) => {
                let mu = f.strong_convexity();
                if mu <= 0.0 {
                    return Err(cfg_err(
                        "schedule.mode",
                        "strongly convex mode on an objective with mu = 0",
                    ));
                }
                4.0 * f.smoothness_in(norm) / mu
            }
            (None, _) => 1.0,
        };
        Regularizer::scaled(alpha).map_err(|e| at("schedule.alpha", e))
    }
}
