use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::fit::{fit_rate_with_se, RateFit};
use super::io::{summary_path, write_csv, write_json, write_records, ReplicationRecord};
use super::probe::{log_log_slope, probe_bias_variance, ProbeResult};
use crate::adversarial::lower_bound_value;
use crate::error::{Error, Result};
use crate::oracle::{ExactOracle, GradientOracle};
use crate::rng::RngStream;
use crate::solver::{
    run_with, schedule_opt_convex, schedule_opt_sc, schedule_regret, ProblemConstants, Recording, Regularizer, RunMode,
    RunOptions, RunTrace, Schedule, ScheduleMode,
};

/// Runs `f` inside a pool of `threads` workers (0 keeps the global pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Problem constants seen by the schedules for `oracle` under `reg`.
pub fn problem_constants<O: GradientOracle + ?Sized>(oracle: &O, reg: &Regularizer) -> ProblemConstants {
    let env = oracle.envelope();
    let f = oracle.objective();
    let norm = oracle.norm();
    ProblemConstants {
        p: env.p,
        q: env.q,
        c1: env.c1,
        c2: env.c2,
        d: reg.diameter(f.domain()),
        alpha: reg.alpha,
        l: f.smoothness_in(norm),
        mu: f.strong_convexity(),
        oracle_type: env.oracle_type,
        r_sup: f.domain().radius_sup(norm),
    }
}

pub fn build_schedule<O: GradientOracle + ?Sized>(
    cfg: &ExperimentConfig,
    oracle: &O,
    reg: &Regularizer,
    n: usize,
) -> Result<Schedule> {
    let k = problem_constants(oracle, reg);
    match cfg.schedule.mode {
        ScheduleMode::OptConvex => schedule_opt_convex(&k, n),
        ScheduleMode::OptSc => schedule_opt_sc(&k, n),
        ScheduleMode::RegretConvex => schedule_regret(&k, n, false),
        ScheduleMode::RegretSc => schedule_regret(&k, n, true),
        ScheduleMode::Manual => {
            let delta = cfg.schedule.delta.unwrap_or(1.0);
            let eta = cfg
                .schedule
                .eta
                .ok_or_else(|| Error::config("schedule.eta", "manual mode needs a step rule"))?;
            Schedule::manual(delta, eta)
        }
    }
}

/// Decay exponent the tuned schedule should show for `cfg`: `p/(2p+q)` for
/// the convex modes and `p/(p+q)` for the strongly convex ones, with the
/// regret modes reading `R_n/n` and using `p̂ = min(p, 2)`. `None` for manual
/// schedules.
pub fn predicted_exponent(cfg: &ExperimentConfig) -> Result<Option<f64>> {
    let n = cfg.horizons.first().copied().unwrap_or(1);
    let env = cfg.build_oracle(n, 1.0)?.envelope();
    let (p, q) = (env.p, env.q);
    Ok(match cfg.schedule.mode {
        ScheduleMode::OptConvex => Some(p / (2.0 * p + q)),
        ScheduleMode::OptSc => Some(p / (p + q)),
        ScheduleMode::RegretConvex => Some(p.min(2.0) / (2.0 * p.min(2.0) + q)),
        ScheduleMode::RegretSc => Some(p.min(2.0) / (p.min(2.0) + q)),
        ScheduleMode::Manual => None,
    })
}

/// Stream of replication `rep` at horizon `n`.
pub fn replication_stream(seed: u64, n: usize, rep: usize) -> RngStream {
    RngStream::new(seed, n as u64).derive(rep as u64)
}

struct Outcome {
    trace: RunTrace,
    seed: u64,
}

fn run_one<O: GradientOracle + ?Sized>(
    cfg: &ExperimentConfig,
    oracle: &O,
    schedule: &Schedule,
    reg: &Regularizer,
    n: usize,
    rep: usize,
    mode: RunMode,
) -> Result<Outcome> {
    let f = oracle.objective();
    let x1 = cfg.schedule.x1.clone().unwrap_or_else(|| f.domain().center());
    let stream = replication_stream(cfg.seed, n, rep);
    let mut rng = stream.rng();
    let opts = RunOptions {
        recording: Recording::Summary,
        ..RunOptions::default()
    };
    let trace = run_with(oracle, schedule, n, f.domain(), reg, &x1, &mut rng, mode, opts)?;
    Ok(Outcome {
        trace,
        seed: stream.stream_id,
    })
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Fitted summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub experiment_id: String,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit: RateFit,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub fit: RateFit,
    pub records: Vec<ReplicationRecord>,
    pub notes: Vec<String>,
}

impl RateReport {
    pub fn summary(&self, cfg: &ExperimentConfig) -> RateSummary {
        RateSummary {
            experiment_id: cfg.experiment_id.clone(),
            exponent: self.fit.fitted_exponent,
            intercept: self.fit.fitted_intercept,
            r_squared: self.fit.r_squared,
            fit: self.fit.clone(),
            notes: self.notes.clone(),
            config: cfg.clone(),
        }
    }
}

fn horizon_sweep(cfg: &ExperimentConfig, mode: RunMode) -> Result<RateReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || {
        let mut records = Vec::new();
        let mut points = Vec::new();
        let mut ses = Vec::new();
        let mut notes = Vec::new();
        for &n in &cfg.horizons {
            let oracle = cfg.build_oracle(n, 1.0)?;
            let f = oracle.objective();
            let reg = cfg.regularizer(f, oracle.norm())?;
            let schedule = build_schedule(cfg, oracle.as_ref(), &reg, n)?;
            let outs: Vec<Outcome> = (0..cfg.replications)
                .into_par_iter()
                .map(|rep| run_one(cfg, oracle.as_ref(), &schedule, &reg, n, rep, mode))
                .collect::<Result<_>>()?;
            for note in &outs[0].trace.notes {
                notes.push(format!("n = {n}: {note}"));
            }
            let values: Vec<f64> = outs
                .iter()
                .map(|o| match mode {
                    RunMode::Optimization => o.trace.error,
                    RunMode::Regret => o.trace.regret / n as f64,
                })
                .collect();
            let (m, se) = mean_se(&values);
            points.push((n as f64, m));
            ses.push(se);
            records.extend(outs.iter().enumerate().map(|(rep, o)| ReplicationRecord {
                experiment_id: cfg.experiment_id.clone(),
                n: n as u64,
                replication: rep as u64,
                error: o.trace.error,
                regret: o.trace.regret,
                delta: o.trace.delta,
                seed: o.seed,
            }));
        }
        let fit = fit_rate_with_se(&points, &ses)?;
        Ok(RateReport { fit, records, notes })
    })?
}

/// Mean optimization error `f(X̂_n) − f*` per horizon and its fitted exponent.
pub fn rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    if cfg.kind != ExperimentKind::Rate {
        return Err(Error::config("kind", "rate_experiment needs kind = \"rate\""));
    }
    horizon_sweep(cfg, RunMode::Optimization)
}

/// Mean average regret `R_n/n` per horizon and its fitted exponent. The regret
/// exponent itself is `1 − fitted_exponent`.
pub fn regret_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    if cfg.kind != ExperimentKind::Regret {
        return Err(Error::config("kind", "regret_experiment needs kind = \"regret\""));
    }
    horizon_sweep(cfg, RunMode::Regret)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub experiment_id: String,
    pub n: u64,
    pub eps: f64,
    pub delta: f64,
    /// The minimax floor for this class and horizon.
    pub floor: f64,
    pub mean_error: f64,
    pub se: f64,
    /// `mean_error + 3·se ≥ floor`.
    pub holds: bool,
    /// Same algorithm with exact gradients, averaged over both signs.
    pub exact_mean_error: f64,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
    pub config: ExperimentConfig,
}

/// Runs the configured algorithm against both members of the hard pair.
/// Replication `2j` uses `v = +1` and `2j + 1` uses `v = −1`.
pub fn lower_bound_experiment(cfg: &ExperimentConfig) -> Result<LowerBoundReport> {
    if cfg.kind != ExperimentKind::LowerBound {
        return Err(Error::config(
            "kind",
            "lower_bound_experiment needs kind = \"lower_bound\"",
        ));
    }
    cfg.validate()?;
    let super::config::OracleSpec::Hard {
        class, p, q, c1, c2, ..
    } = cfg.oracle
    else {
        return Err(Error::config(
            "oracle.kind",
            "a lower-bound experiment needs a hard oracle",
        ));
    };
    let n = cfg.horizons[0];
    let eps = cfg.hard_eps(n)?.unwrap_or_default();
    let floor = lower_bound_value(class, p, q, c1, c2, n as u64, 1)?;
    with_threads(cfg.threads, || {
        let mut all = Vec::new();
        let mut exact = Vec::new();
        let mut delta = 0.0;
        for (k, v) in [1.0, -1.0].into_iter().enumerate() {
            let oracle = cfg.build_oracle(n, v)?;
            let f = oracle.objective().clone();
            let reg = cfg.regularizer(&f, oracle.norm())?;
            let schedule = build_schedule(cfg, oracle.as_ref(), &reg, n)?;
            delta = schedule.delta;
            let outs: Vec<(usize, Outcome)> = (0..cfg.replications)
                .into_par_iter()
                .map(|j| {
                    let rep = 2 * j + k;
                    run_one(cfg, oracle.as_ref(), &schedule, &reg, n, rep, RunMode::Optimization).map(|o| (rep, o))
                })
                .collect::<Result<_>>()?;
            all.extend(outs);
            let ex = ExactOracle::new(f);
            exact.push(
                run_one(cfg, &ex, &schedule, &reg, n, usize::MAX - k, RunMode::Optimization)?
                    .trace
                    .error,
            );
        }
        all.sort_by_key(|(rep, _)| *rep);
        let errors: Vec<f64> = all.iter().map(|(_, o)| o.trace.error).collect();
        let (mean_error, se) = mean_se(&errors);
        let records = all
            .iter()
            .map(|(rep, o)| ReplicationRecord {
                experiment_id: cfg.experiment_id.clone(),
                n: n as u64,
                replication: *rep as u64,
                error: o.trace.error,
                regret: o.trace.regret,
                delta: o.trace.delta,
                seed: o.seed,
            })
            .collect();
        Ok(LowerBoundReport {
            experiment_id: cfg.experiment_id.clone(),
            n: n as u64,
            eps,
            delta,
            floor,
            mean_error,
            se,
            holds: mean_error + 3.0 * se >= floor,
            exact_mean_error: exact.iter().sum::<f64>() / exact.len() as f64,
            records,
            config: cfg.clone(),
        })
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub experiment_id: String,
    pub results: Vec<ProbeResult>,
    /// Log-log slope of bias against δ, if every bias estimate is positive.
    pub bias_slope: Option<f64>,
    pub var_slope: Option<f64>,
    pub config: ExperimentConfig,
}

/// Bias and variance of the configured oracle across a tolerance grid.
pub fn probe_experiment(cfg: &ExperimentConfig) -> Result<ProbeReport> {
    if cfg.kind != ExperimentKind::Probe {
        return Err(Error::config("kind", "probe_experiment needs kind = \"probe\""));
    }
    cfg.validate()?;
    let spec = cfg
        .probe
        .as_ref()
        .ok_or_else(|| Error::config("probe", "missing probe section"))?;
    let oracle = cfg.build_oracle(cfg.horizons[0], 1.0)?;
    with_threads(cfg.threads, || {
        let results = spec
            .deltas
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut rng = RngStream::new(cfg.seed, 0x70).derive(i as u64).rng();
                probe_bias_variance(oracle.as_ref(), &spec.x, *d, spec.reps, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let slope = |ys: Vec<f64>| log_log_slope(&spec.deltas, &ys).ok();
        Ok(ProbeReport {
            experiment_id: cfg.experiment_id.clone(),
            bias_slope: slope(results.iter().map(|r| r.bias_est).collect()),
            var_slope: slope(results.iter().map(|r| r.var_est).collect()),
            results,
            config: cfg.clone(),
        })
    })?
}

/// The result of any experiment kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Rate(RateReport),
    Regret(RateReport),
    LowerBound(LowerBoundReport),
    Probe(ProbeReport),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    Ok(match cfg.kind {
        ExperimentKind::Rate => Report::Rate(rate_experiment(cfg)?),
        ExperimentKind::Regret => Report::Regret(regret_experiment(cfg)?),
        ExperimentKind::LowerBound => Report::LowerBound(lower_bound_experiment(cfg)?),
        ExperimentKind::Probe => Report::Probe(probe_experiment(cfg)?),
    })
}

/// Writes the CSV to `cfg.output` and the JSON summary next to it.
pub fn write_report(cfg: &ExperimentConfig, report: &Report) -> Result<()> {
    let Some(path) = &cfg.output else {
        return Ok(());
    };
    let json = summary_path(path);
    match report {
        Report::Rate(r) | Report::Regret(r) => {
            write_records(path, &r.records)?;
            write_json(&json, &r.summary(cfg))
        }
        Report::LowerBound(r) => {
            write_records(path, &r.records)?;
            write_json(&json, r)
        }
        Report::Probe(r) => {
            write_csv(path, &r.results)?;
            write_json(&json, r)
        }
    }
}
