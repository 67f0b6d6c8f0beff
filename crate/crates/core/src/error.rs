use thiserror::Error;

/// Errors produced while constructing instances, solving them or running
/// the benchmark harness.
#[derive(Debug, Error)]
pub enum FocsError {
    #[error("session {id}: infeasible demand {demand} kWh exceeds cap {cap} kWh over its window")]
    InfeasibleSession { id: String, demand: f64, cap: f64 },

    #[error("session {id}: non-positive power cap {power_cap} kW")]
    NonPositivePowerCap { id: String, power_cap: f64 },

    #[error("session {id}: departure must lie after arrival")]
    EmptyWindow { id: String },

    #[error("cannot discretize an empty job list")]
    NoJobs,

    #[error("infeasible instance: job {id} demands {demand} kWh but can charge at most {cap} kWh")]
    InfeasibleInstance { id: String, demand: f64, cap: f64 },

    #[error("objective requires a complete profile; interval {interval} is unscheduled")]
    PartialProfile { interval: usize },

    #[error("negative capacity {cap} on {what}")]
    NegativeCapacity { what: String, cap: f64 },

    #[error("immovable-interval query requires a demand-saturating flow (value {value}, demand {demand})")]
    FlowNotSaturating { value: f64, demand: f64 },

    #[error("round {round} exceeded the iteration cap ({cap}) with residual deficit {deficit}")]
    IterationCap { round: usize, cap: usize, deficit: f64 },

    #[error("round {round}: demand-saturating flow fixed no critical interval")]
    EmptyCriticalSet { round: usize },

    #[error("round {round}: max flow fell short of demand with no saturated sink; remaining subproblem lost feasibility")]
    NoSaturatedSink { round: usize },

    #[error("quantized instance infeasible: job {job} needs {need} units, caps allow {have}")]
    QuantizedInfeasible { job: usize, need: u64, have: u64 },

    #[error("demand of job {job} ({demand} kWh) is not on the {quantum} kWh quantum grid")]
    OffQuantumGrid { job: usize, demand: f64, quantum: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    MalformedRow { path: String, line: u64, msg: String },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },

    #[error("sample size {n} exceeds dataset size {available}")]
    SampleTooLarge { n: usize, available: usize },

    #[error("degenerate generator parameters: {msg}")]
    DegenerateParams { msg: String },

    #[error("invalid experiment config: {msg}")]
    InvalidConfig { msg: String },

    #[error("run with seed {seed} failed: {source}")]
    RunFailed {
        seed: u64,
        #[source]
        source: Box<FocsError>,
    },

    #[error("cannot emit an empty summary")]
    EmptySummary,
}
