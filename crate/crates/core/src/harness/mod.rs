//! The benchmark harness: seeded instance sweeps over methods and
//! variants, per-run CPU timing split into model building and solving,
//! medians over repetitions, and machine-readable output.
//!
//! Timing follows the measured phase only: sampling and I/O are excluded,
//! and per-thread CPU time keeps parallel workers from distorting each
//! other.

pub mod genrand;
pub mod timing;
pub mod verify;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::FocsError;
use crate::focs::{solve, solve_prefix, SolveReport};
use crate::ingest::{
    clamp_to_noon, parse_sessions, rebase_to_day, sample_instance, synth_office, to_inputs,
    RawSession, SynthParams,
};
use crate::instance::{build_jobs, discretize, ClampPolicy, Job, Timeline, GRANULARITIES_S};
use crate::maxflow::MaxFlowMethod;
use crate::Result;

/// Scheduler variant under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Full solve over the whole horizon.
    Focs,
    /// Pre-mature stop once the first interval is fixed.
    FocsPm,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Focs => "focs",
            Variant::FocsPm => "focs-pm",
        }
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "focs" => Ok(Variant::Focs),
            "focs-pm" => Ok(Variant::FocsPm),
            other => Err(format!("unknown variant `{other}` (expected focs|focs-pm)")),
        }
    }
}

/// Horizon start: the whole day or from noon onwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartMode {
    FullDay,
    Noon,
}

impl StartMode {
    pub fn name(self) -> &'static str {
        match self {
            StartMode::FullDay => "full-day",
            StartMode::Noon => "noon",
        }
    }
}

impl FromStr for StartMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full-day" => Ok(StartMode::FullDay),
            "noon" => Ok(StartMode::Noon),
            other => Err(format!("unknown start `{other}` (expected full-day|noon)")),
        }
    }
}

/// One method or the whole comparison set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    One(MaxFlowMethod),
    All,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<MaxFlowMethod> {
        match self {
            MethodChoice::One(m) => vec![m],
            MethodChoice::All => MaxFlowMethod::ALL.to_vec(),
        }
    }
}

impl FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            Ok(MethodChoice::All)
        } else {
            s.parse().map(MethodChoice::One)
        }
    }
}

/// Where run instances come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    Path(PathBuf),
}

/// Parameters of one experiment sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub granularity_s: u32,
    pub method: MethodChoice,
    pub variant: Variant,
    pub start: StartMode,
    pub runs: usize,
    pub seed: u64,
    pub data: DataSource,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(FocsError::InvalidConfig {
                msg: "runs must be at least 1".into(),
            });
        }
        if self.n < 1 {
            return Err(FocsError::InvalidConfig {
                msg: "n must be at least 1".into(),
            });
        }
        if !GRANULARITIES_S.contains(&self.granularity_s) {
            return Err(FocsError::InvalidConfig {
                msg: format!("granularity {}s not in {GRANULARITIES_S:?}", self.granularity_s),
            });
        }
        Ok(())
    }
}

/// Measurements of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub method: String,
    pub build_time_s: f64,
    pub solve_time_s: f64,
    pub total_time_s: f64,
    /// Absent for partial (pre-mature stop) schedules.
    pub objective: Option<f64>,
    pub flow_calls: usize,
    pub rounds: usize,
}

/// Medians of one (n, granularity, method, variant, start) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub granularity_s: u32,
    pub method: String,
    pub variant: String,
    pub start: String,
    pub median_build_s: f64,
    pub median_solve_s: f64,
    pub median_total_s: f64,
    pub median_objective: Option<f64>,
    pub runs: usize,
}

/// Experiment output: one summary row per method plus the raw per-run
/// records behind them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub per_run: Vec<RunRecord>,
}

/// Execution switches that do not alter the measured protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run repetitions on the current thread instead of a worker pool.
    pub serial: bool,
}

/// Lower median: the floor(len-1 / 2)-th order statistic, so the reported
/// value is always one of the recorded runs.
fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[(values.len() - 1) / 2]
}

fn build_instance(
    sessions: &[RawSession],
    granularity_s: u32,
    start: StartMode,
) -> Result<(Vec<Job>, Timeline)> {
    let inputs = to_inputs(sessions);
    let (mut jobs, _) = build_jobs(&inputs, granularity_s, ClampPolicy::ClampEnergy)?;
    if start == StartMode::Noon {
        jobs = clamp_to_noon(&jobs, 12.0);
    }
    let timeline = discretize(&jobs)?;
    Ok((jobs, timeline))
}

fn run_one(
    cfg: &ExperimentConfig,
    method: MaxFlowMethod,
    dataset: Option<&[RawSession]>,
    run: usize,
) -> Result<RunRecord> {
    let seed = cfg.seed.wrapping_add(run as u64);
    let wrap = |source: FocsError| FocsError::RunFailed {
        seed,
        source: Box::new(source),
    };

    // instance sampling is not part of the measured phases
    let sessions = match dataset {
        None => synth_office(cfg.n, seed, &SynthParams::default()).map_err(wrap)?,
        Some(all) => rebase_to_day(&sample_instance(all, cfg.n, seed).map_err(wrap)?),
    };

    let ((jobs, timeline), build_time_s) =
        match timing::timed(|| build_instance(&sessions, cfg.granularity_s, cfg.start)) {
            (Ok(pair), dt) => (pair, dt),
            (Err(e), _) => return Err(wrap(e)),
        };

    let solve_once = || -> Result<SolveReport> {
        match cfg.variant {
            Variant::Focs => solve(&jobs, &timeline, method),
            Variant::FocsPm => {
                solve_prefix(&jobs, &timeline, method, &BTreeSet::from([0]))
            }
        }
    };
    let (report, solve_time_s) = match timing::timed(solve_once) {
        (Ok(r), dt) => (r, dt),
        (Err(e), _) => return Err(wrap(e)),
    };

    Ok(RunRecord {
        run,
        seed,
        method: method.short_name().to_string(),
        build_time_s,
        solve_time_s,
        total_time_s: build_time_s + solve_time_s,
        objective: report.objective,
        flow_calls: report.total_flow_calls,
        rounds: report.rounds.len(),
    })
}

/// Executes `runs` independently sampled instances per method and reports
/// the medians of build, solve and total CPU time. Any failing run aborts
/// the experiment with its seed in the error.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Summary> {
    cfg.validate()?;
    let dataset: Option<Vec<RawSession>> = match &cfg.data {
        DataSource::Synthetic => None,
        DataSource::Path(p) => Some(parse_sessions(p)?),
    };

    let mut rows = Vec::new();
    let mut per_run = Vec::new();
    for method in cfg.method.methods() {
        let records: Vec<RunRecord> = if opts.serial {
            (0..cfg.runs)
                .map(|run| run_one(cfg, method, dataset.as_deref(), run))
                .collect::<Result<_>>()?
        } else {
            (0..cfg.runs)
                .into_par_iter()
                .map(|run| run_one(cfg, method, dataset.as_deref(), run))
                .collect::<Result<_>>()?
        };

        let mut build: Vec<f64> = records.iter().map(|r| r.build_time_s).collect();
        let mut solve: Vec<f64> = records.iter().map(|r| r.solve_time_s).collect();
        let mut total: Vec<f64> = records.iter().map(|r| r.total_time_s).collect();
        let mut objectives: Vec<f64> = records.iter().filter_map(|r| r.objective).collect();
        rows.push(SummaryRow {
            n: cfg.n,
            granularity_s: cfg.granularity_s,
            method: method.short_name().to_string(),
            variant: cfg.variant.name().to_string(),
            start: cfg.start.name().to_string(),
            median_build_s: median(&mut build),
            median_solve_s: median(&mut solve),
            median_total_s: median(&mut total),
            median_objective: if objectives.is_empty() {
                None
            } else {
                Some(median(&mut objectives))
            },
            runs: cfg.runs,
        });
        per_run.extend(records);
    }
    Ok(Summary { rows, per_run })
}

/// Output formats for [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

const SUMMARY_HEADER: [&str; 10] = [
    "n",
    "granularity_s",
    "method",
    "variant",
    "start",
    "median_build_s",
    "median_solve_s",
    "median_total_s",
    "median_objective",
    "runs",
];

/// Writes the summary in plot-ready long format with a deterministic
/// column order.
pub fn emit_results(summary: &Summary, path: &Path, format: OutputFormat) -> Result<()> {
    if summary.rows.is_empty() {
        return Err(FocsError::EmptySummary);
    }
    let io_err = |source| FocsError::Io {
        path: path.display().to_string(),
        source,
    };
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => io_err(io),
                other => FocsError::InvalidConfig {
                    msg: format!("{other:?}"),
                },
            })?;
            writer.write_record(SUMMARY_HEADER).map_err(csv_io(path))?;
            for row in &summary.rows {
                writer
                    .write_record([
                        row.n.to_string(),
                        row.granularity_s.to_string(),
                        row.method.clone(),
                        row.variant.clone(),
                        row.start.clone(),
                        format!("{:.9}", row.median_build_s),
                        format!("{:.9}", row.median_solve_s),
                        format!("{:.9}", row.median_total_s),
                        row.median_objective
                            .map_or(String::new(), |o| format!("{o:.9}")),
                        row.runs.to_string(),
                    ])
                    .map_err(csv_io(path))?;
            }
            writer.flush().map_err(io_err)?;
        }
        OutputFormat::Json => {
            let mut file = std::fs::File::create(path).map_err(io_err)?;
            serde_json::to_writer_pretty(&mut file, &summary.rows)
                .map_err(|e| io_err(e.into()))?;
            file.write_all(b"\n").map_err(io_err)?;
        }
    }
    Ok(())
}

/// Writes the raw per-run records (`--per-run`), from which the summary
/// medians are recomputable.
pub fn emit_per_run(summary: &Summary, path: &Path, format: OutputFormat) -> Result<()> {
    if summary.per_run.is_empty() {
        return Err(FocsError::EmptySummary);
    }
    let io_err = |source| FocsError::Io {
        path: path.display().to_string(),
        source,
    };
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => io_err(io),
                other => FocsError::InvalidConfig {
                    msg: format!("{other:?}"),
                },
            })?;
            writer
                .write_record([
                    "run",
                    "seed",
                    "method",
                    "build_time_s",
                    "solve_time_s",
                    "total_time_s",
                    "objective",
                    "flow_calls",
                    "rounds",
                ])
                .map_err(csv_io(path))?;
            for r in &summary.per_run {
                writer
                    .write_record([
                        r.run.to_string(),
                        r.seed.to_string(),
                        r.method.clone(),
                        format!("{:.9}", r.build_time_s),
                        format!("{:.9}", r.solve_time_s),
                        format!("{:.9}", r.total_time_s),
                        r.objective.map_or(String::new(), |o| format!("{o:.9}")),
                        r.flow_calls.to_string(),
                        r.rounds.to_string(),
                    ])
                    .map_err(csv_io(path))?;
            }
            writer.flush().map_err(io_err)?;
        }
        OutputFormat::Json => {
            let mut file = std::fs::File::create(path).map_err(io_err)?;
            serde_json::to_writer_pretty(&mut file, &summary.per_run)
                .map_err(|e| io_err(e.into()))?;
            file.write_all(b"\n").map_err(io_err)?;
        }
    }
    Ok(())
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> FocsError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => FocsError::Io {
            path: path.display().to_string(),
            source: io,
        },
        other => FocsError::InvalidConfig {
            msg: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(variant: Variant) -> ExperimentConfig {
        ExperimentConfig {
            n: 20,
            granularity_s: 3600,
            method: MethodChoice::One(MaxFlowMethod::ShortestAugmentingPath),
            variant,
            start: StartMode::Noon,
            runs: 3,
            seed: 11,
            data: DataSource::Synthetic,
        }
    }

    #[test]
    fn single_run_median_is_that_run() {
        let mut cfg = small_config(Variant::Focs);
        cfg.runs = 1;
        let summary = run_experiment(&cfg, RunOptions { serial: true }).unwrap();
        assert_eq!(summary.rows.len(), 1);
        assert_eq!(summary.per_run.len(), 1);
        let row = &summary.rows[0];
        let rec = &summary.per_run[0];
        assert_eq!(row.median_build_s, rec.build_time_s);
        assert_eq!(row.median_solve_s, rec.solve_time_s);
        assert_eq!(row.median_objective, rec.objective);
    }

    #[test]
    fn experiment_is_deterministic_apart_from_timing() {
        let cfg = small_config(Variant::Focs);
        let a = run_experiment(&cfg, RunOptions { serial: true }).unwrap();
        let b = run_experiment(&cfg, RunOptions::default()).unwrap();
        let key = |s: &Summary| -> Vec<(Option<u64>, usize, usize)> {
            let mut v: Vec<_> = s
                .per_run
                .iter()
                .map(|r| (r.objective.map(f64::to_bits), r.flow_calls, r.rounds))
                .collect();
            v.sort();
            v
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn pm_never_needs_more_flow_calls() {
        let full = run_experiment(&small_config(Variant::Focs), RunOptions { serial: true }).unwrap();
        let pm = run_experiment(&small_config(Variant::FocsPm), RunOptions { serial: true }).unwrap();
        for (f, p) in full.per_run.iter().zip(&pm.per_run) {
            assert_eq!(f.seed, p.seed);
            assert!(p.flow_calls <= f.flow_calls);
            assert!(p.objective.is_none() || p.rounds == f.rounds);
        }
    }

    #[test]
    fn summary_files_round_trip() {
        let cfg = small_config(Variant::Focs);
        let summary = run_experiment(&cfg, RunOptions { serial: true }).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let csv_path = dir.path().join("out.csv");
        emit_results(&summary, &csv_path, OutputFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with(
            "n,granularity_s,method,variant,start,median_build_s,median_solve_s,median_total_s,median_objective,runs"
        ));

        let json_path = dir.path().join("out.json");
        emit_results(&summary, &json_path, OutputFormat::Json).unwrap();
        let rows: Vec<SummaryRow> =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(rows.len(), summary.rows.len());

        let empty = Summary {
            rows: vec![],
            per_run: vec![],
        };
        assert!(matches!(
            emit_results(&empty, &csv_path, OutputFormat::Csv),
            Err(FocsError::EmptySummary)
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small_config(Variant::Focs);
        cfg.runs = 0;
        assert!(matches!(
            run_experiment(&cfg, RunOptions::default()),
            Err(FocsError::InvalidConfig { .. })
        ));
        let mut cfg = small_config(Variant::Focs);
        cfg.granularity_s = 1234;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn path_dataset_runs() {
        let sessions = synth_office(30, 5, &SynthParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sessions.csv");
        let mut w = csv::Writer::from_path(&path).unwrap();
        w.write_record(["session_id", "arrival_ts", "departure_ts", "energy_kwh"])
            .unwrap();
        for s in &sessions {
            w.write_record([
                s.session_id.clone(),
                s.arrival_ts.to_string(),
                s.departure_ts.to_string(),
                s.energy_kwh.to_string(),
            ])
            .unwrap();
        }
        w.flush().unwrap();

        let mut cfg = small_config(Variant::Focs);
        cfg.data = DataSource::Path(path);
        cfg.n = 10;
        let summary = run_experiment(&cfg, RunOptions { serial: true }).unwrap();
        assert_eq!(summary.per_run.len(), 3);
        for r in &summary.per_run {
            assert!(r.objective.unwrap() > 0.0);
        }
    }
}
