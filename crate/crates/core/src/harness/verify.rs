//! Self-contained verification suites behind the `verify` CLI command:
//! golden traces with hand-checked values, comparisons against the
//! independent optimality references, and structural properties over
//! seeded random instances. Each check reports pass/fail plus the seeds of
//! any counterexamples, so failures are reproducible.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::focs::{peak, solve, solve_prefix};
use crate::harness::genrand::{random_instance, INSTANCE_QUANTUM};
use crate::instance::{aggregate_profile, validate_schedule, Job, Timeline};
use crate::maxflow::MaxFlowMethod;
use crate::oracle::{minmax_peak_bisect, optimal_quantized, QuantizedInstance};

/// Which suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifySuite {
    /// Hand-checked instances with known traces and objectives.
    Golden,
    /// Random instances against the independent optimality references.
    Oracle,
    /// Structural properties over random instances.
    Properties,
}

impl VerifySuite {
    pub fn name(self) -> &'static str {
        match self {
            VerifySuite::Golden => "golden",
            VerifySuite::Oracle => "oracle",
            VerifySuite::Properties => "properties",
        }
    }
}

impl FromStr for VerifySuite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "golden" => Ok(VerifySuite::Golden),
            "oracle" => Ok(VerifySuite::Oracle),
            "properties" => Ok(VerifySuite::Properties),
            other => Err(format!(
                "unknown suite `{other}` (expected golden|oracle|properties)"
            )),
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Empty on success; counterexample seeds or the first violation
    /// otherwise.
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            passed: true,
            detail: String::new(),
        }
    }

    fn fail(name: &str, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            passed: false,
            detail,
        }
    }

    fn from_failures(name: &str, failures: Vec<String>) -> Self {
        if failures.is_empty() {
            Self::pass(name)
        } else {
            let shown = failures.iter().take(5).cloned().collect::<Vec<_>>();
            Self::fail(
                name,
                format!("{} failure(s), first: {}", failures.len(), shown.join("; ")),
            )
        }
    }
}

/// All checks of one suite run.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suite: &'static str,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Number of random instances each randomized check draws.
const SAMPLES: u64 = 120;

/// Runs `suite`; `seed` offsets the instance stream of the randomized
/// suites and is ignored by the golden one.
pub fn run_suite(suite: VerifySuite, seed: u64) -> VerifyReport {
    let checks = match suite {
        VerifySuite::Golden => golden_checks(),
        VerifySuite::Oracle => oracle_checks(seed),
        VerifySuite::Properties => property_checks(seed),
    };
    VerifyReport {
        suite: suite.name(),
        seed,
        checks,
    }
}

fn golden_instance(rows: &[(f64, f64, f64, f64)]) -> (Vec<Job>, Timeline) {
    let jobs: Vec<Job> = rows
        .iter()
        .enumerate()
        .map(|(k, &(a, d, e, p))| Job {
            id: format!("g{k}"),
            arrival: a,
            departure: d,
            demand: e,
            power_cap: p,
        })
        .collect();
    let tl = crate::instance::discretize(&jobs).expect("non-empty");
    (jobs, tl)
}

/// Two overlapping jobs whose optimal profile is the staircase (2, 3, 1)
/// kW with objective 14, solved in three rounds and six flow probes.
fn staircase() -> (Vec<Job>, Timeline) {
    golden_instance(&[(0.0, 2.0, 4.0, 2.0), (1.0, 3.0, 2.0, 1.0)])
}

/// Four jobs whose unique optimal profile is flat at 2.5 kW with
/// objective 12.5, solved in a single round.
fn flat_valley() -> (Vec<Job>, Timeline) {
    golden_instance(&[
        (0.0, 2.0, 2.0, 2.0),
        (0.0, 1.0, 0.5, 2.0),
        (1.0, 2.0, 0.5, 2.0),
        (0.0, 2.0, 2.0, 2.0),
    ])
}

fn golden_checks() -> Vec<CheckResult> {
    let mut checks = Vec::new();

    // full staircase trace
    let (jobs, tl) = staircase();
    checks.push(
        match solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath) {
            Err(e) => CheckResult::fail("staircase-trace", e.to_string()),
            Ok(report) => {
                let levels: Vec<f64> = report.rounds.iter().map(|r| r.fixed_power).collect();
                let profile = aggregate_profile(&report.schedule, &tl);
                let profile_ok = profile
                    .values
                    .iter()
                    .zip([2.0, 3.0, 1.0])
                    .all(|(got, want)| (got.unwrap() - want).abs() < 1e-6);
                let ok = report.total_flow_calls == 6
                    && report.rounds.len() == 3
                    && levels
                        .iter()
                        .zip([3.0, 2.0, 1.0])
                        .all(|(got, want)| (got - want).abs() < 1e-6)
                    && profile_ok
                    && (report.objective.unwrap_or(f64::NAN) - 14.0).abs() < 1e-6;
                if ok {
                    CheckResult::pass("staircase-trace")
                } else {
                    CheckResult::fail(
                        "staircase-trace",
                        format!(
                            "flow_calls={} rounds={} levels={levels:?} objective={:?}",
                            report.total_flow_calls,
                            report.rounds.len(),
                            report.objective
                        ),
                    )
                }
            }
        },
    );

    // pre-mature stop on the first interval saves the last round
    checks.push(
        match solve_prefix(
            &jobs,
            &tl,
            MaxFlowMethod::ShortestAugmentingPath,
            &BTreeSet::from([0]),
        ) {
            Err(e) => CheckResult::fail("staircase-prefix-stop", e.to_string()),
            Ok(report) => {
                if report.total_flow_calls == 5
                    && report.stopped_early
                    && report.schedule.is_fixed(0)
                    && !report.schedule.is_fixed(2)
                {
                    CheckResult::pass("staircase-prefix-stop")
                } else {
                    CheckResult::fail(
                        "staircase-prefix-stop",
                        format!(
                            "flow_calls={} stopped_early={} fixed={:?}",
                            report.total_flow_calls,
                            report.stopped_early,
                            report.schedule.fixed_intervals()
                        ),
                    )
                }
            }
        },
    );

    // the flat instance must come out identical under all four methods
    let (jobs, tl) = flat_valley();
    let mut failures = Vec::new();
    for method in MaxFlowMethod::ALL {
        match solve(&jobs, &tl, method) {
            Err(e) => failures.push(format!("{method}: {e}")),
            Ok(report) => {
                let profile = aggregate_profile(&report.schedule, &tl);
                let flat = profile
                    .values
                    .iter()
                    .all(|v| (v.unwrap() - 2.5).abs() < 1e-6);
                let obj_ok = (report.objective.unwrap_or(f64::NAN) - 12.5).abs() < 1e-6;
                if !(flat && obj_ok && report.rounds.len() == 1) {
                    failures.push(format!(
                        "{method}: profile={:?} objective={:?} rounds={}",
                        profile.values,
                        report.objective,
                        report.rounds.len()
                    ));
                }
                if let Err(msg) = validate_schedule(&jobs, &tl, &report.schedule) {
                    failures.push(format!("{method}: {msg}"));
                }
            }
        }
    }
    checks.push(CheckResult::from_failures("flat-valley-all-methods", failures));

    // a deliberately corrupted schedule must be rejected by name
    let (jobs, tl) = staircase();
    let report = solve(&jobs, &tl, MaxFlowMethod::Dinitz).expect("golden instance solves");
    let mut corrupted = report.schedule.clone();
    corrupted.set(1, 0, 100.0);
    checks.push(match validate_schedule(&jobs, &tl, &corrupted) {
        Err(msg) if msg.contains("power-cap") => CheckResult::pass("corrupt-schedule-rejected"),
        Err(msg) => CheckResult::fail(
            "corrupt-schedule-rejected",
            format!("wrong constraint named: {msg}"),
        ),
        Ok(()) => CheckResult::fail(
            "corrupt-schedule-rejected",
            "validator accepted an over-cap allocation".into(),
        ),
    });

    let mut starved = report.schedule.clone();
    starved.set(1, 1, 0.0);
    starved.set(2, 1, 0.0);
    checks.push(match validate_schedule(&jobs, &tl, &starved) {
        Err(msg) if msg.contains("demand-coverage") => {
            CheckResult::pass("starved-schedule-rejected")
        }
        Err(msg) => CheckResult::fail(
            "starved-schedule-rejected",
            format!("wrong constraint named: {msg}"),
        ),
        Ok(()) => CheckResult::fail(
            "starved-schedule-rejected",
            "validator accepted an under-delivering schedule".into(),
        ),
    });

    checks
}

/// Gap admitted by comparing against the optimum over `q`-quantized
/// allocations: rounding a continuous profile `p` up onto the grid costs at
/// most `sum_i (2 p_i q + q^2 / L_i)`.
fn quantization_bound(profile: &[f64], lengths: &[f64], q: f64) -> f64 {
    profile
        .iter()
        .zip(lengths)
        .map(|(p, l)| 2.0 * p * q + q * q / l)
        .sum()
}

fn oracle_checks(seed: u64) -> Vec<CheckResult> {
    let mut objective_failures = Vec::new();
    let mut peak_failures = Vec::new();

    for s in seed..seed + SAMPLES {
        let (jobs, tl) = random_instance(s);
        let lengths = tl.lengths();

        let report = match solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath) {
            Ok(r) => r,
            Err(e) => {
                objective_failures.push(format!("seed {s}: solve failed: {e}"));
                continue;
            }
        };
        let f_focs = report.objective.expect("complete schedule");

        let quantized = QuantizedInstance::from_jobs(&jobs, &tl, INSTANCE_QUANTUM)
            .and_then(|qi| optimal_quantized(&qi, &lengths));
        match quantized {
            Err(e) => objective_failures.push(format!("seed {s}: reference failed: {e}")),
            Ok((_, f_ref)) => {
                // the continuous optimum can only undercut the quantized one,
                // and never by more than the rounding bound
                let profile: Vec<f64> = aggregate_profile(&report.schedule, &tl)
                    .values
                    .iter()
                    .map(|v| v.unwrap())
                    .collect();
                let bound = quantization_bound(&profile, &lengths, INSTANCE_QUANTUM);
                if f_focs > f_ref + 1e-9 * f_ref.max(1.0) {
                    objective_failures.push(format!(
                        "seed {s}: objective {f_focs} above quantized optimum {f_ref}"
                    ));
                } else if f_ref - f_focs > bound {
                    objective_failures.push(format!(
                        "seed {s}: gap {} exceeds rounding bound {bound}",
                        f_ref - f_focs
                    ));
                }
            }
        }

        match peak(&jobs, &tl) {
            Err(e) => peak_failures.push(format!("seed {s}: peak failed: {e}")),
            Ok(p) => {
                let reference = minmax_peak_bisect(&jobs, &tl, 1e-9);
                if (p - reference).abs() > 1e-6 {
                    peak_failures.push(format!(
                        "seed {s}: first-round level {p} vs bisected min-max peak {reference}"
                    ));
                }
            }
        }
    }

    vec![
        CheckResult::from_failures("objective-vs-quantized-optimum", objective_failures),
        CheckResult::from_failures("first-round-level-vs-minmax-peak", peak_failures),
    ]
}

fn property_checks(seed: u64) -> Vec<CheckResult> {
    let mut feasibility = Vec::new();
    let mut method_invariance = Vec::new();
    let mut prefix_consistency = Vec::new();
    let mut work_bound = Vec::new();
    let mut monotone_levels = Vec::new();

    for s in seed..seed + SAMPLES {
        let (jobs, tl) = random_instance(s);
        let m = tl.num_intervals();

        let full = match solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath) {
            Ok(r) => r,
            Err(e) => {
                feasibility.push(format!("seed {s}: solve failed: {e}"));
                continue;
            }
        };
        if let Err(msg) = validate_schedule(&jobs, &tl, &full.schedule) {
            feasibility.push(format!("seed {s}: {msg}"));
        }

        // every method must land on the same aggregated profile
        let reference = aggregate_profile(&full.schedule, &tl);
        for method in [
            MaxFlowMethod::EdmondsKarp,
            MaxFlowMethod::PreflowPush,
            MaxFlowMethod::Dinitz,
        ] {
            match solve(&jobs, &tl, method) {
                Err(e) => method_invariance.push(format!("seed {s}: {method}: {e}")),
                Ok(other) => {
                    let profile = aggregate_profile(&other.schedule, &tl);
                    let agree = profile
                        .values
                        .iter()
                        .zip(&reference.values)
                        .all(|(a, b)| (a.unwrap() - b.unwrap()).abs() < 1e-6);
                    if !agree {
                        method_invariance
                            .push(format!("seed {s}: {method} profile deviates"));
                    }
                }
            }
        }

        // stopping at the first interval must agree with the full solve on
        // everything it fixed, at no extra flow probes
        match solve_prefix(
            &jobs,
            &tl,
            MaxFlowMethod::ShortestAugmentingPath,
            &BTreeSet::from([0]),
        ) {
            Err(e) => prefix_consistency.push(format!("seed {s}: prefix solve failed: {e}")),
            Ok(prefix) => {
                if prefix.total_flow_calls > full.total_flow_calls {
                    prefix_consistency.push(format!(
                        "seed {s}: prefix used {} probes, full solve {}",
                        prefix.total_flow_calls, full.total_flow_calls
                    ));
                }
                for &i in prefix.schedule.fixed_intervals() {
                    for j in 0..jobs.len() {
                        let (a, b) = (prefix.schedule.get(i, j), full.schedule.get(i, j));
                        if (a - b).abs() > 1e-6 {
                            prefix_consistency.push(format!(
                                "seed {s}: e[({i},{j})] prefix {a} vs full {b}"
                            ));
                        }
                    }
                }
            }
        }

        if full.total_flow_calls > m * m {
            work_bound.push(format!(
                "seed {s}: {} flow probes on {m} intervals",
                full.total_flow_calls
            ));
        }

        let decreasing = full
            .rounds
            .windows(2)
            .all(|w| w[0].fixed_power > w[1].fixed_power - 1e-12);
        if !decreasing {
            monotone_levels.push(format!("seed {s}: fixed levels not decreasing"));
        }
    }

    vec![
        CheckResult::from_failures("schedule-feasibility", feasibility),
        CheckResult::from_failures("profile-method-invariance", method_invariance),
        CheckResult::from_failures("prefix-stop-consistency", prefix_consistency),
        CheckResult::from_failures("flow-probe-work-bound", work_bound),
        CheckResult::from_failures("fixed-levels-decrease", monotone_levels),
    ]
}
