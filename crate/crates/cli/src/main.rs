//! `bgo`: run oracle probes, rate fits, lower-bound floors, regret sweeps and
//! the property suite from the command line.
//!
//! Every experiment subcommand starts from a preset (or `--config <file>`),
//! applies the explicit flags on top, runs, prints a summary, and writes a CSV
//! plus a JSON summary when `--out` is given. The exit code is 0 iff the
//! command's assertions hold, 1 if one fails, and 2 on a usage or config error.

use std::path::PathBuf;
use std::process::ExitCode;

use bgo::harness::presets::{
    lower_bound_config, probe_config, rate_config, regret_config, EstimatorKind, NoiseKind, ProbeCell, ProblemClass,
    DEFAULT_SIGMA,
};
use bgo::harness::{
    predicted_exponent, run_checks, run_experiment, write_report, ExperimentConfig, ExperimentKind, Report,
};
use clap::{Args, Parser, Subcommand};

/// Fitted exponents must land within this distance of the prediction.
const EXPONENT_TOL: f64 = 0.08;
const MIN_R2: f64 = 0.97;
/// Probe bias and variance may exceed the envelope by at most this many SEs.
const PROBE_SE_SLACK: f64 = 5.0;

#[derive(Parser)]
#[command(name = "bgo", version, about = "Biased noisy gradient oracle experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo bias and variance of an estimator over a tolerance grid.
    Probe(ProbeArgs),
    /// Mean optimization error over horizons and its fitted decay exponent.
    Rate(RateArgs),
    /// Mirror descent against the hard pair, compared with the closed-form floor.
    Lowerbound(LowerBoundArgs),
    /// Average regret over horizons and its fitted decay exponent.
    Regret(RegretArgs),
    /// Deterministic property suite.
    Check,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config used instead of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; the JSON summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 uses every core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_enum, default_value = "spsa-exp", conflicts_with = "config")]
    oracle: ProbeCellArg,
    #[arg(long, default_value_t = DEFAULT_SIGMA, conflicts_with = "config")]
    sigma: f64,
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_enum, default_value = "convex", conflicts_with = "config")]
    class: ClassArg,
    #[arg(long, value_enum, default_value = "smoothing", conflicts_with = "config")]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "uncontrolled", conflicts_with = "config")]
    noise: NoiseArg,
    #[arg(long, default_value_t = DEFAULT_SIGMA, conflicts_with = "config")]
    sigma: f64,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LowerBoundArgs {
    #[arg(long, value_enum, default_value = "convex", conflicts_with = "config")]
    class: ClassArg,
    #[arg(long, default_value_t = 2.0, conflicts_with = "config")]
    p: f64,
    #[arg(long, default_value_t = 2.0, conflicts_with = "config")]
    q: f64,
    #[arg(long, default_value_t = 1.0, conflicts_with = "config")]
    c1: f64,
    #[arg(long, default_value_t = 1.0, conflicts_with = "config")]
    c2: f64,
    /// Horizon (default 10000).
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RegretArgs {
    #[arg(long, value_enum, default_value = "convex", conflicts_with = "config")]
    class: ClassArg,
    #[arg(long, default_value_t = 2.0, conflicts_with = "config")]
    p: f64,
    #[arg(long, default_value_t = 2.0, conflicts_with = "config")]
    q: f64,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ClassArg {
    Convex,
    Sc,
}

impl From<ClassArg> for ProblemClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Convex => ProblemClass::Convex,
            ClassArg::Sc => ProblemClass::Sc,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EstimatorArg {
    OnePoint,
    Smoothing,
    Spsa,
    Rdsa,
    Sf,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::OnePoint => EstimatorKind::OnePoint,
            EstimatorArg::Smoothing => EstimatorKind::Smoothing,
            EstimatorArg::Spsa => EstimatorKind::Spsa,
            EstimatorArg::Rdsa => EstimatorKind::Rdsa,
            EstimatorArg::Sf => EstimatorKind::Sf,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum NoiseArg {
    Controlled,
    Uncontrolled,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Controlled => NoiseKind::Controlled,
            NoiseArg::Uncontrolled => NoiseKind::Uncontrolled,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ProbeCellArg {
    OnePointKinked,
    SpsaExp,
    SmoothingExp,
}

impl From<ProbeCellArg> for ProbeCell {
    fn from(c: ProbeCellArg) -> Self {
        match c {
            ProbeCellArg::OnePointKinked => ProbeCell::OnePointKinked,
            ProbeCellArg::SpsaExp => ProbeCell::SpsaExp,
            ProbeCellArg::SmoothingExp => ProbeCell::SmoothingExp,
        }
    }
}

const DEFAULT_PROBE_REPS: usize = 100_000;

fn base_config(
    common: &Common,
    kind: ExperimentKind,
    preset: impl FnOnce() -> bgo::Result<ExperimentConfig>,
) -> bgo::Result<ExperimentConfig> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => preset()?,
    };
    if cfg.kind != kind {
        return Err(bgo::Error::config(
            "kind",
            format!(
                "this subcommand runs {kind:?} experiments, the config has {:?}",
                cfg.kind
            ),
        ));
    }
    Ok(cfg)
}

fn apply_common(cfg: &mut ExperimentConfig, common: &Common) {
    if let Some(r) = common.reps {
        match cfg.probe.as_mut() {
            Some(p) => p.reps = r,
            None => cfg.replications = r,
        }
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output = Some(o.clone());
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
}

fn build(cmd: &Cmd) -> bgo::Result<ExperimentConfig> {
    let cfg = match cmd {
        Cmd::Probe(a) => {
            let mut cfg = base_config(&a.common, ExperimentKind::Probe, || {
                probe_config(a.oracle.into(), a.sigma, DEFAULT_PROBE_REPS)
            })?;
            if let (Some(grid), Some(p)) = (&a.delta_grid, cfg.probe.as_mut()) {
                p.deltas = grid.clone();
            }
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Cmd::Rate(a) => {
            let mut cfg = base_config(&a.common, ExperimentKind::Rate, || {
                rate_config(a.class.into(), a.estimator.into(), a.noise.into(), a.sigma)
            })?;
            if let Some(h) = &a.horizons {
                cfg.horizons = h.clone();
            }
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Cmd::Lowerbound(a) => {
            let mut cfg = base_config(&a.common, ExperimentKind::LowerBound, || {
                lower_bound_config(a.class.into(), a.p, a.q, a.c1, a.c2, a.n.unwrap_or(10_000), 64)
            })?;
            if let Some(n) = a.n {
                cfg.horizons = vec![n];
            }
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Cmd::Regret(a) => {
            let mut cfg = base_config(&a.common, ExperimentKind::Regret, || {
                regret_config(a.class.into(), a.p, a.q)
            })?;
            if let Some(h) = &a.horizons {
                cfg.horizons = h.clone();
            }
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Cmd::Check => unreachable!("check takes no config"),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Prints the report and returns whether its assertions hold.
fn assess(cfg: &ExperimentConfig, report: &Report) -> bgo::Result<bool> {
    match report {
        Report::Rate(r) | Report::Regret(r) => {
            for note in &r.notes {
                println!("note: {note}");
            }
            for ((n, e), se) in r.fit.horizons.iter().zip(&r.fit.errors).zip(&r.fit.error_se) {
                println!("n = {n:>9}  mean = {e:.6e}  se = {se:.2e}");
            }
            let e = r.fit.fitted_exponent;
            let r2 = r.fit.r_squared;
            match predicted_exponent(cfg)? {
                Some(want) => {
                    let ok = (e - want).abs() <= EXPONENT_TOL && r2 >= MIN_R2;
                    println!(
                        "{} {}: exponent {e:.4} (predicted {want:.4} ± {EXPONENT_TOL}), r² {r2:.4} (≥ {MIN_R2})",
                        verdict(ok),
                        cfg.experiment_id
                    );
                    Ok(ok)
                }
                None => {
                    println!("{}: exponent {e:.4}, r² {r2:.4}", cfg.experiment_id);
                    Ok(true)
                }
            }
        }
        Report::LowerBound(r) => {
            println!(
                "{} {}: n = {}, ε = {:.4e}, δ = {:.4e}, mean error {:.4e} ± {:.2e} vs floor {:.4e}; exact-gradient baseline {:.3e}",
                verdict(r.holds),
                r.experiment_id,
                r.n,
                r.eps,
                r.delta,
                r.mean_error,
                r.se,
                r.floor,
                r.exact_mean_error
            );
            Ok(r.holds)
        }
        Report::Probe(r) => {
            let env = cfg.build_oracle(1, 1.0)?.envelope();
            let mut ok = true;
            for p in &r.results {
                let (b, v) = env.check(p.delta)?;
                let within = p.bias_est <= b + PROBE_SE_SLACK * p.bias_se && p.var_est <= v + PROBE_SE_SLACK * p.var_se;
                ok &= within;
                println!(
                    "δ = {:<6} bias {:.4e} ± {:.1e} (≤ {b:.3e})  var {:.4e} ± {:.1e} (≤ {v:.3e})  {}",
                    p.delta,
                    p.bias_est,
                    p.bias_se,
                    p.var_est,
                    p.var_se,
                    if within { "ok" } else { "outside envelope" }
                );
            }
            let slope = |s: Option<f64>| s.map_or("n/a".to_string(), |s| format!("{s:.3}"));
            println!(
                "{} {}: bias slope {}, variance slope {} (envelope p = {}, q = {})",
                verdict(ok),
                r.experiment_id,
                slope(r.bias_slope),
                slope(r.var_slope),
                env.p,
                env.q
            );
            Ok(ok)
        }
    }
}

fn check() -> bgo::Result<bool> {
    let r = run_checks()?;
    for i in &r.items {
        println!("{} {}: {}", verdict(i.passed), i.name, i.detail);
    }
    Ok(r.all_passed())
}

fn execute(cmd: &Cmd) -> bgo::Result<bool> {
    if let Cmd::Check = cmd {
        return check();
    }
    let cfg = build(cmd)?;
    let report = run_experiment(&cfg)?;
    write_report(&cfg, &report)?;
    assess(&cfg, &report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
