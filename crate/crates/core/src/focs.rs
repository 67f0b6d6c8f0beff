//! The scheduling algorithm: rounds of maximum-flow probes at rising fill
//! levels. Each round raises a per-interval power level until a flow
//! saturating the remaining demand exists, fixes the critical intervals
//! (those whose load no alternative maximum flow can reduce), removes them
//! and recurses on the rest. The fixed levels decrease strictly over
//! rounds, so a controller interested only in the first few intervals can
//! stop as soon as those are fixed.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::FocsError;
use crate::instance::{aggregate_profile, objective, Job, Schedule, Timeline};
use crate::maxflow::{
    build_network, immovable_intervals, max_flow, min_cut_sink_intervals,
    saturated_sink_intervals, MaxFlowMethod,
};
use crate::Result;

/// Demands below this many kWh count as served; such jobs are pruned from
/// subsequent rounds' networks.
const DEMAND_PRUNE_TOL: f64 = 1e-9;

/// Relative tolerance for the demand-saturation test within a round.
const SATURATION_TOL: f64 = 1e-9;

/// Per-interval power levels (kW) defining sink capacities `g_i * L_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FillLevels(pub BTreeMap<usize, f64>);

/// What one round did: how many flow probes it took, the final fill
/// levels, and which intervals it fixed at what power.
#[derive(Debug, Clone)]
pub struct RoundLog {
    /// 1-based round counter.
    pub round: usize,
    pub iterations: usize,
    pub final_levels: FillLevels,
    pub critical_set: BTreeSet<usize>,
    /// Common power level of the critical set (its maximum when levels differ).
    pub fixed_power: f64,
    pub flow_calls: usize,
}

/// The solver output: a complete or partial schedule plus the per-round
/// trace.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub schedule: Schedule,
    pub rounds: Vec<RoundLog>,
    /// Objective value; absent for partial schedules.
    pub objective: Option<f64>,
    pub total_flow_calls: usize,
    pub stopped_early: bool,
}

struct Solver<'a> {
    jobs: &'a [Job],
    timeline: &'a Timeline,
    method: MaxFlowMethod,
    /// Remaining demand per still-active job.
    demands: BTreeMap<usize, f64>,
    /// Intervals not yet fixed.
    remaining: BTreeSet<usize>,
    schedule: Schedule,
    rounds: Vec<RoundLog>,
    total_flow_calls: usize,
}

impl<'a> Solver<'a> {
    fn new(jobs: &'a [Job], timeline: &'a Timeline, method: MaxFlowMethod) -> Result<Self> {
        for job in jobs {
            if !job.is_feasible() {
                return Err(FocsError::InfeasibleInstance {
                    id: job.id.clone(),
                    demand: job.demand,
                    cap: job.energy_bound(),
                });
            }
        }
        let demands = jobs
            .iter()
            .enumerate()
            .filter(|(_, j)| j.demand > DEMAND_PRUNE_TOL)
            .map(|(idx, j)| (idx, j.demand))
            .collect();
        Ok(Solver {
            jobs,
            timeline,
            method,
            demands,
            remaining: (0..timeline.num_intervals()).collect(),
            schedule: Schedule::new(),
            rounds: Vec::new(),
            total_flow_calls: 0,
        })
    }

    fn done(&self) -> bool {
        self.remaining.is_empty()
    }

    /// Runs one round: probe fill levels until the remaining demand fits,
    /// then fix the critical intervals.
    fn round(&mut self) -> Result<()> {
        let round = self.rounds.len() + 1;
        let total_demand: f64 = self.demands.values().sum();
        let total_length: f64 = self.remaining.iter().map(|&i| self.timeline.length(i)).sum();

        let mut levels: BTreeMap<usize, f64> = self
            .remaining
            .iter()
            .map(|&i| (i, total_demand / total_length))
            .collect();

        let iteration_cap = 4 * self.remaining.len() + 4;
        // The plain raise distributes the deficit over every saturated sink
        // interval. When the saturated set stops shrinking that raise only
        // converges geometrically (part of it lands on intervals whose
        // bottleneck is on the job side), so from then on the round raises
        // min-cut sink edges only, which absorb added capacity at unit rate
        // and terminate the round exactly.
        let mut prev_saturated: Option<BTreeSet<usize>> = None;
        let mut cut_raises_only = false;
        for iteration in 1..=iteration_cap {
            let sink_caps: BTreeMap<usize, f64> = levels
                .iter()
                .map(|(&i, &g)| (i, g * self.timeline.length(i)))
                .collect();
            let net = build_network(self.jobs, self.timeline, &self.demands, &sink_caps)?;
            let flow = max_flow(&net, self.method);
            self.total_flow_calls += 1;

            let deficit = total_demand - flow.value;
            if deficit <= SATURATION_TOL * total_demand.max(1.0)
                || (iteration == iteration_cap && deficit <= 1e-9 * total_demand.max(1.0))
            {
                let critical = immovable_intervals(&net, &flow)?;
                if critical.is_empty() {
                    return Err(FocsError::EmptyCriticalSet { round });
                }
                for &i in &critical {
                    for &j in &self.timeline.avail_by_interval[i] {
                        if let Some(edge) = net.pair_edge(j, i) {
                            let e = flow.flow(&net, edge);
                            if e > 0.0 {
                                self.schedule.set(i, j, e);
                                let d = self.demands.get_mut(&j).expect("active job");
                                *d = (*d - e).max(0.0);
                            }
                        }
                    }
                    self.schedule.mark_fixed(i);
                    self.remaining.remove(&i);
                }
                self.demands.retain(|_, d| *d > DEMAND_PRUNE_TOL);
                let fixed_power = critical
                    .iter()
                    .map(|i| levels[i])
                    .fold(f64::NEG_INFINITY, f64::max);
                self.rounds.push(RoundLog {
                    round,
                    iterations: iteration,
                    final_levels: FillLevels(levels),
                    critical_set: critical,
                    fixed_power,
                    // one flow probe per iteration of this loop
                    flow_calls: iteration,
                });
                debug_assert!(
                    self.rounds.len() < 2
                        || self.rounds[self.rounds.len() - 2].fixed_power
                            > self.rounds[self.rounds.len() - 1].fixed_power,
                    "fixed levels must decrease strictly over rounds"
                );
                return Ok(());
            }

            // distribute the deficit over the saturated sink intervals only
            let saturated = saturated_sink_intervals(&net, &flow);
            if saturated.is_empty() {
                return Err(FocsError::NoSaturatedSink { round });
            }
            if !cut_raises_only {
                let shrank = prev_saturated
                    .as_ref()
                    .is_none_or(|prev| saturated.len() < prev.len() && saturated.is_subset(prev));
                cut_raises_only = !shrank;
            }
            let raise_set = if cut_raises_only {
                let cut = min_cut_sink_intervals(&net, &flow);
                if cut.is_empty() {
                    saturated.clone()
                } else {
                    cut
                }
            } else {
                saturated.clone()
            };
            prev_saturated = Some(saturated);
            let raise_length: f64 = raise_set.iter().map(|&i| self.timeline.length(i)).sum();
            for &i in &raise_set {
                *levels.get_mut(&i).expect("remaining interval") += deficit / raise_length;
            }
        }
        Err(FocsError::IterationCap {
            round,
            cap: iteration_cap,
            deficit: f64::NAN,
        })
    }

    fn into_report(self, stopped_early: bool) -> Result<SolveReport> {
        let obj = if self.schedule.is_complete(self.timeline) {
            let profile = aggregate_profile(&self.schedule, self.timeline);
            Some(objective(&profile)?)
        } else {
            None
        };
        Ok(SolveReport {
            schedule: self.schedule,
            rounds: self.rounds,
            objective: obj,
            total_flow_calls: self.total_flow_calls,
            stopped_early,
        })
    }
}

/// Computes a complete optimal schedule.
pub fn solve(jobs: &[Job], timeline: &Timeline, method: MaxFlowMethod) -> Result<SolveReport> {
    let focus: BTreeSet<usize> = (0..timeline.num_intervals()).collect();
    solve_prefix(jobs, timeline, method, &focus)
}

/// Runs rounds until every interval in `focus` is fixed, then stops. The
/// returned partial schedule agrees with some complete optimal schedule on
/// all fixed intervals, so a controller acting only on `focus` loses
/// nothing by stopping early.
pub fn solve_prefix(
    jobs: &[Job],
    timeline: &Timeline,
    method: MaxFlowMethod,
    focus: &BTreeSet<usize>,
) -> Result<SolveReport> {
    if focus.is_empty() {
        return Err(FocsError::InvalidConfig {
            msg: "focus set must be non-empty".into(),
        });
    }
    if let Some(&bad) = focus.iter().find(|&&i| i >= timeline.num_intervals()) {
        return Err(FocsError::InvalidConfig {
            msg: format!("focus interval {bad} out of range"),
        });
    }
    let mut solver = Solver::new(jobs, timeline, method)?;
    while !solver.done() && focus.iter().any(|i| solver.remaining.contains(i)) {
        solver.round()?;
    }
    let stopped_early = !solver.done();
    solver.into_report(stopped_early)
}

/// The min-max aggregated power: the level the first round fixes its
/// critical intervals at.
pub fn peak(jobs: &[Job], timeline: &Timeline) -> Result<f64> {
    let mut solver = Solver::new(jobs, timeline, MaxFlowMethod::ShortestAugmentingPath)?;
    solver.round()?;
    Ok(solver.rounds[0].fixed_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_jobs, discretize, validate_schedule, ClampPolicy, SessionInput};

    fn instance(rows: &[(i64, i64, f64, f64)]) -> (Vec<Job>, Timeline) {
        let inputs: Vec<SessionInput> = rows
            .iter()
            .enumerate()
            .map(|(k, &(a, d, e, p))| SessionInput {
                id: format!("j{k}"),
                arrival_s: a * 3600,
                departure_s: d * 3600,
                energy_kwh: e,
                power_cap_kw: p,
            })
            .collect();
        let (jobs, _) = build_jobs(&inputs, 3600, ClampPolicy::Reject).unwrap();
        let tl = discretize(&jobs).unwrap();
        (jobs, tl)
    }

    fn fig2() -> (Vec<Job>, Timeline) {
        instance(&[(0, 2, 4.0, 2.0), (1, 3, 2.0, 1.0)])
    }

    fn fig6() -> (Vec<Job>, Timeline) {
        instance(&[
            (0, 2, 2.0, 2.0),
            (0, 1, 0.5, 2.0),
            (1, 2, 0.5, 2.0),
            (0, 2, 2.0, 2.0),
        ])
    }

    #[test]
    fn fig2_full_trace() {
        let (jobs, tl) = fig2();
        let report = solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath).unwrap();
        assert_eq!(report.total_flow_calls, 6);
        assert!(!report.stopped_early);
        assert_eq!(report.rounds.len(), 3);
        assert_eq!(report.rounds[0].critical_set, BTreeSet::from([1]));
        assert_eq!(report.rounds[1].critical_set, BTreeSet::from([0]));
        assert_eq!(report.rounds[2].critical_set, BTreeSet::from([2]));
        let levels: Vec<f64> = report.rounds.iter().map(|r| r.fixed_power).collect();
        assert!((levels[0] - 3.0).abs() < 1e-9);
        assert!((levels[1] - 2.0).abs() < 1e-9);
        assert!((levels[2] - 1.0).abs() < 1e-9);
        let profile = aggregate_profile(&report.schedule, &tl);
        for (got, want) in profile.values.iter().zip([2.0, 3.0, 1.0]) {
            assert!((got.unwrap() - want).abs() < 1e-6);
        }
        assert!((report.objective.unwrap() - 14.0).abs() < 1e-9);
        validate_schedule(&jobs, &tl, &report.schedule).unwrap();
    }

    #[test]
    fn fig2_prefix_stops_at_five_calls() {
        let (jobs, tl) = fig2();
        let report =
            solve_prefix(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath, &BTreeSet::from([0]))
                .unwrap();
        assert_eq!(report.total_flow_calls, 5);
        assert!(report.stopped_early);
        assert!(report.objective.is_none());
        assert_eq!(report.rounds.len(), 2);
        assert!(report.schedule.is_fixed(0));
        assert!(report.schedule.is_fixed(1));
        assert!(!report.schedule.is_fixed(2));
        assert!((report.rounds[0].fixed_power - 3.0).abs() < 1e-9);
        assert!((report.rounds[1].fixed_power - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_focus_matches_solve() {
        let (jobs, tl) = fig2();
        let full = solve(&jobs, &tl, MaxFlowMethod::Dinitz).unwrap();
        let all: BTreeSet<usize> = (0..tl.num_intervals()).collect();
        let prefix = solve_prefix(&jobs, &tl, MaxFlowMethod::Dinitz, &all).unwrap();
        assert_eq!(full.schedule, prefix.schedule);
        assert_eq!(full.total_flow_calls, prefix.total_flow_calls);
        assert!(!prefix.stopped_early);
    }

    #[test]
    fn fig6_unique_profile() {
        let (jobs, tl) = fig6();
        for m in MaxFlowMethod::ALL {
            let report = solve(&jobs, &tl, m).unwrap();
            let profile = aggregate_profile(&report.schedule, &tl);
            for v in &profile.values {
                assert!((v.unwrap() - 2.5).abs() < 1e-6, "{m}: {profile:?}");
            }
            assert!((report.objective.unwrap() - 12.5).abs() < 1e-6, "{m}");
            validate_schedule(&jobs, &tl, &report.schedule).unwrap();
        }
    }

    #[test]
    fn single_job_flat_profile() {
        let (jobs, tl) = instance(&[(0, 4, 8.0, 11.0)]);
        let report = solve(&jobs, &tl, MaxFlowMethod::PreflowPush).unwrap();
        let profile = aggregate_profile(&report.schedule, &tl);
        assert_eq!(profile.values.len(), 1);
        assert!((profile.values[0].unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(report.rounds.len(), 1);
    }

    #[test]
    fn single_interval_prefix_has_no_savings() {
        let (jobs, tl) = instance(&[(0, 4, 8.0, 11.0)]);
        let full = solve(&jobs, &tl, MaxFlowMethod::EdmondsKarp).unwrap();
        let prefix =
            solve_prefix(&jobs, &tl, MaxFlowMethod::EdmondsKarp, &BTreeSet::from([0])).unwrap();
        assert_eq!(full.total_flow_calls, prefix.total_flow_calls);
        assert!(!prefix.stopped_early);
    }

    #[test]
    fn peak_values() {
        let (jobs, tl) = fig2();
        assert!((peak(&jobs, &tl).unwrap() - 3.0).abs() < 1e-9);
        let (jobs, tl) = fig6();
        assert!((peak(&jobs, &tl).unwrap() - 2.5).abs() < 1e-9);
        let (jobs, tl) = instance(&[(0, 4, 8.0, 11.0)]);
        assert!((peak(&jobs, &tl).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_instance_rejected_before_solving() {
        let jobs = vec![Job {
            id: "j".into(),
            arrival: 0.0,
            departure: 1.0,
            demand: 100.0,
            power_cap: 2.0,
        }];
        let tl = discretize(&jobs).unwrap();
        assert!(matches!(
            solve(&jobs, &tl, MaxFlowMethod::Dinitz),
            Err(FocsError::InfeasibleInstance { .. })
        ));
    }

    #[test]
    fn empty_focus_rejected() {
        let (jobs, tl) = fig2();
        assert!(matches!(
            solve_prefix(&jobs, &tl, MaxFlowMethod::Dinitz, &BTreeSet::new()),
            Err(FocsError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn gap_interval_with_no_jobs_is_fixed_at_zero() {
        // jobs in [0,1] and [2,3]; the middle interval has no available job
        let (jobs, tl) = instance(&[(0, 1, 1.0, 2.0), (2, 3, 1.0, 2.0)]);
        assert_eq!(tl.num_intervals(), 3);
        let report = solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath).unwrap();
        let profile = aggregate_profile(&report.schedule, &tl);
        assert_eq!(profile.values[1], Some(0.0));
        assert!((profile.values[0].unwrap() - 1.0).abs() < 1e-9);
        validate_schedule(&jobs, &tl, &report.schedule).unwrap();
    }

    #[test]
    fn zero_total_demand_fixes_everything_at_zero() {
        let mut jobs = instance(&[(0, 2, 4.0, 2.0), (1, 3, 2.0, 1.0)]).0;
        for j in &mut jobs {
            j.demand = 0.0;
        }
        let tl = discretize(&jobs).unwrap();
        let report = solve(&jobs, &tl, MaxFlowMethod::Dinitz).unwrap();
        assert_eq!(report.objective.unwrap(), 0.0);
        assert_eq!(report.rounds.len(), 1);
        assert_eq!(report.rounds[0].fixed_power, 0.0);
    }

    #[test]
    fn lemma2_no_residual_path_after_fixing() {
        // rebuild the fixing flow of round 1 and confirm the critical set
        // cannot shed load in the residual graph
        let (jobs, tl) = fig2();
        let report = solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath).unwrap();
        let r1 = &report.rounds[0];
        let demands: BTreeMap<usize, f64> =
            jobs.iter().enumerate().map(|(i, j)| (i, j.demand)).collect();
        let caps: BTreeMap<usize, f64> = r1
            .final_levels
            .0
            .iter()
            .map(|(&i, &g)| (i, g * tl.length(i)))
            .collect();
        let net = build_network(&jobs, &tl, &demands, &caps).unwrap();
        let flow = max_flow(&net, MaxFlowMethod::ShortestAugmentingPath);
        let critical = immovable_intervals(&net, &flow).unwrap();
        assert_eq!(&critical, &r1.critical_set);
    }
}
