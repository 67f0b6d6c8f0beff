//! Flow-based offline charging scheduler (FOCS) for large groups of EVs.
//!
//! The scheduler minimizes the time-integral of squared aggregated power
//! over the charging horizon, subject to per-session energy demands, charging
//! windows and power caps. It works in rounds of maximum-flow probes at
//! rising fill levels, fixing one critical interval set per round. A
//! pre-mature stop variant serves model-predictive controllers that only
//! need the schedule of the next few intervals.
//!
//! Crate layout:
//! * [`instance`] — jobs, time discretization, schedules, the objective
//! * [`maxflow`] — the tripartite flow network and four max-flow algorithms
//! * [`focs`] — the scheduling algorithm and its pre-mature stop variant
//! * [`oracle`] — independent optimality references (quantized min-cost
//!   augmentation, min-max-peak bisection)
//! * [`ingest`] — session CSV parsing, sampling, synthetic data
//! * [`harness`] — the benchmark protocol and verification suites

pub mod error;
pub mod focs;
pub mod harness;
pub mod ingest;
pub mod instance;
pub mod maxflow;
pub mod oracle;

pub use error::FocsError;
pub use focs::{peak, solve, solve_prefix, FillLevels, RoundLog, SolveReport};
pub use instance::{
    aggregate_profile, build_jobs, discretize, objective, validate_schedule, AtomicInterval,
    BuildStats, ClampPolicy, Job, PowerProfile, Schedule, SessionInput, Timeline,
};
pub use maxflow::{
    build_network, immovable_intervals, max_flow, saturated_sink_intervals, FlowNetwork,
    FlowResult, MaxFlowMethod,
};

pub use harness::verify::{run_suite, CheckResult, VerifyReport, VerifySuite};
pub use harness::{
    emit_per_run, emit_results, run_experiment, DataSource, ExperimentConfig, MethodChoice,
    OutputFormat, RunOptions, RunRecord, StartMode, Summary, SummaryRow, Variant,
};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, FocsError>;
