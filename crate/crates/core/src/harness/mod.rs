//! Experiment drivers: bias/variance probes, rate fits, lower-bound floors,
//! regret sweeps, and the property suite behind `bgo check`.
//!
//! Replications run in parallel on independent streams and are aggregated in
//! index order, so results are bitwise identical for any worker count.

pub mod checks;
pub mod config;
pub mod experiment;
pub mod fit;
pub mod io;
pub mod presets;
pub mod probe;

pub use checks::{run_checks, CheckItem, CheckReport};
pub use config::{ExperimentConfig, ExperimentKind, OracleSpec, ProbeSpec, ScheduleSpec};
pub use experiment::{
    build_schedule, lower_bound_experiment, predicted_exponent, probe_experiment, problem_constants, rate_experiment,
    regret_experiment, replication_stream, run_experiment, with_threads, write_report, LowerBoundReport, ProbeReport,
    RateReport, RateSummary, Report,
};
pub use fit::{fit_rate, fit_rate_with_se, RateFit};
pub use io::{read_records, write_records, ReplicationRecord};
pub use probe::{log_log_slope, probe_bias_variance, ProbeResult};
