//! Problem instances: charging jobs, time discretization into atomic
//! intervals, schedules and the aggregated-power objective.
//!
//! Units are fixed throughout the crate: time in hours, energy in kWh,
//! power in kW. Raw inputs carry epoch seconds and are converted on ingest,
//! so `energy = power * time` holds without scale factors.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::FocsError;
use crate::Result;

/// Relative tolerance on demand coverage (constraint 1a as an equality).
pub const DEMAND_TOL: f64 = 1e-6;

/// Accepted time granularities, in seconds.
pub const GRANULARITIES_S: [u32; 4] = [60, 900, 1800, 3600];

const SECONDS_PER_HOUR: f64 = 3600.0;

/// A raw charging session with an already-assigned power cap, ready for
/// validation and grid rounding.
#[derive(Debug, Clone)]
pub struct SessionInput {
    pub id: String,
    pub arrival_s: i64,
    pub departure_s: i64,
    pub energy_kwh: f64,
    pub power_cap_kw: f64,
}

/// One charging session after validation: window in hours, demand in kWh,
/// power cap in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: String,
    pub arrival: f64,
    pub departure: f64,
    pub demand: f64,
    pub power_cap: f64,
}

impl Job {
    /// Window length in hours.
    pub fn window(&self) -> f64 {
        self.departure - self.arrival
    }

    /// Maximum energy the job can absorb over its whole window.
    pub fn energy_bound(&self) -> f64 {
        self.power_cap * self.window()
    }

    pub fn is_feasible(&self) -> bool {
        self.demand <= self.energy_bound() * (1.0 + 1e-9) + 1e-12
    }
}

/// How to treat sessions whose demand exceeds what their window can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampPolicy {
    /// Fail instance construction, naming the offending session.
    Reject,
    /// Clamp the demand down to `power_cap * window`.
    ClampEnergy,
}

/// Counters for sessions silently dropped or adjusted during construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub dropped_zero_demand: usize,
    pub dropped_empty_window: usize,
    pub clamped: usize,
}

/// Validates raw sessions and rounds their windows onto the time grid:
/// arrivals are rounded up, departures down, so no energy is ever scheduled
/// outside the true availability window. Sessions whose rounded window is
/// empty or whose demand is zero are dropped and counted.
pub fn build_jobs(
    sessions: &[SessionInput],
    granularity_s: u32,
    policy: ClampPolicy,
) -> Result<(Vec<Job>, BuildStats)> {
    if !GRANULARITIES_S.contains(&granularity_s) {
        return Err(FocsError::InvalidConfig {
            msg: format!("granularity {granularity_s}s not in {GRANULARITIES_S:?}"),
        });
    }
    let g = granularity_s as i64;
    let mut jobs = Vec::with_capacity(sessions.len());
    let mut stats = BuildStats::default();
    for s in sessions {
        if s.power_cap_kw <= 0.0 {
            return Err(FocsError::NonPositivePowerCap {
                id: s.id.clone(),
                power_cap: s.power_cap_kw,
            });
        }
        if s.departure_s <= s.arrival_s {
            return Err(FocsError::EmptyWindow { id: s.id.clone() });
        }
        if s.energy_kwh <= 0.0 {
            stats.dropped_zero_demand += 1;
            continue;
        }
        let arrival_s = s.arrival_s.div_euclid(g) * g + if s.arrival_s.rem_euclid(g) != 0 { g } else { 0 };
        let departure_s = s.departure_s.div_euclid(g) * g;
        if departure_s <= arrival_s {
            stats.dropped_empty_window += 1;
            continue;
        }
        let mut job = Job {
            id: s.id.clone(),
            arrival: arrival_s as f64 / SECONDS_PER_HOUR,
            departure: departure_s as f64 / SECONDS_PER_HOUR,
            demand: s.energy_kwh,
            power_cap: s.power_cap_kw,
        };
        if !job.is_feasible() {
            match policy {
                ClampPolicy::Reject => {
                    return Err(FocsError::InfeasibleSession {
                        id: s.id.clone(),
                        demand: job.demand,
                        cap: job.energy_bound(),
                    })
                }
                ClampPolicy::ClampEnergy => {
                    job.demand = job.energy_bound();
                    stats.clamped += 1;
                }
            }
        }
        jobs.push(job);
    }
    Ok((jobs, stats))
}

/// A maximal time span between consecutive breakpoints; job availability
/// is constant within it.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicInterval {
    /// 0-based position within the timeline.
    pub index: usize,
    pub start: f64,
    pub end: f64,
}

impl AtomicInterval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// The discretized horizon: breakpoints, atomic intervals and the
/// availability maps in both directions.
#[derive(Debug, Clone)]
pub struct Timeline {
    pub breakpoints: Vec<f64>,
    pub intervals: Vec<AtomicInterval>,
    /// Per interval, the (sorted) indices of jobs available in it.
    pub avail_by_interval: Vec<Vec<usize>>,
    /// Per job, the (sorted) indices of intervals it is available in.
    pub avail_by_job: Vec<Vec<usize>>,
}

impl Timeline {
    pub fn num_intervals(&self) -> usize {
        self.intervals.len()
    }

    pub fn length(&self, interval: usize) -> f64 {
        self.intervals[interval].length()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.intervals.iter().map(|iv| iv.length()).collect()
    }

    /// Per-pair energy cap `e_max = power_cap * L_i`.
    pub fn energy_cap(&self, interval: usize, job: &Job) -> f64 {
        job.power_cap * self.length(interval)
    }
}

/// Discretizes the horizon using all distinct arrival and departure times
/// as breakpoints and populates the availability maps.
pub fn discretize(jobs: &[Job]) -> Result<Timeline> {
    if jobs.is_empty() {
        return Err(FocsError::NoJobs);
    }
    let mut breakpoints: Vec<f64> = jobs
        .iter()
        .flat_map(|j| [j.arrival, j.departure])
        .collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();

    let intervals: Vec<AtomicInterval> = breakpoints
        .windows(2)
        .enumerate()
        .map(|(index, w)| AtomicInterval {
            index,
            start: w[0],
            end: w[1],
        })
        .collect();

    let mut avail_by_interval = vec![Vec::new(); intervals.len()];
    let mut avail_by_job = vec![Vec::new(); jobs.len()];
    for (ji, job) in jobs.iter().enumerate() {
        for iv in &intervals {
            if job.arrival <= iv.start && iv.end <= job.departure {
                avail_by_interval[iv.index].push(ji);
                avail_by_job[ji].push(iv.index);
            }
        }
    }

    Ok(Timeline {
        breakpoints,
        intervals,
        avail_by_interval,
        avail_by_job,
    })
}

/// The decision matrix `e[(interval, job)]` in kWh, together with the set
/// of intervals whose allocation is final. A complete schedule has every
/// interval fixed; the pre-mature stop variant returns partial ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    energy: BTreeMap<(usize, usize), f64>,
    fixed: BTreeSet<usize>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `e[(interval, job)] = kwh` and marks nothing fixed. Zero
    /// entries are not stored.
    pub fn set(&mut self, interval: usize, job: usize, kwh: f64) {
        if kwh != 0.0 {
            self.energy.insert((interval, job), kwh);
        } else {
            self.energy.remove(&(interval, job));
        }
    }

    pub fn get(&self, interval: usize, job: usize) -> f64 {
        self.energy.get(&(interval, job)).copied().unwrap_or(0.0)
    }

    pub fn mark_fixed(&mut self, interval: usize) {
        self.fixed.insert(interval);
    }

    pub fn fixed_intervals(&self) -> &BTreeSet<usize> {
        &self.fixed
    }

    pub fn is_fixed(&self, interval: usize) -> bool {
        self.fixed.contains(&interval)
    }

    pub fn is_complete(&self, timeline: &Timeline) -> bool {
        (0..timeline.num_intervals()).all(|i| self.fixed.contains(&i))
    }

    /// Total energy assigned to `job` over all intervals.
    pub fn job_total(&self, job: usize) -> f64 {
        self.energy
            .iter()
            .filter(|((_, j), _)| *j == job)
            .map(|(_, e)| e)
            .sum()
    }

    /// Total energy assigned within `interval`.
    pub fn interval_total(&self, interval: usize) -> f64 {
        self.energy
            .range((interval, 0)..(interval + 1, 0))
            .map(|(_, e)| e)
            .sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.energy.iter().map(|(&(i, j), &e)| (i, j, e))
    }
}

/// The aggregated power per atomic interval. Unfixed intervals of a
/// partial schedule show up as `None`, not zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    pub values: Vec<Option<f64>>,
    pub lengths: Vec<f64>,
}

impl PowerProfile {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_some())
    }

    /// Largest scheduled power level, ignoring unfixed intervals.
    pub fn peak(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &p| m.max(p))
    }
}

/// Computes the average aggregated power `p_i = sum_j e[(i,j)] / L_i` per
/// fixed interval.
pub fn aggregate_profile(schedule: &Schedule, timeline: &Timeline) -> PowerProfile {
    let values = timeline
        .intervals
        .iter()
        .map(|iv| {
            schedule
                .is_fixed(iv.index)
                .then(|| schedule.interval_total(iv.index) / iv.length())
        })
        .collect();
    PowerProfile {
        values,
        lengths: timeline.lengths(),
    }
}

/// The objective `F = sum_i L_i * p_i^2` in kW^2 * h, the time-integral of
/// squared aggregated power.
pub fn objective(profile: &PowerProfile) -> Result<f64> {
    let mut total = 0.0;
    for (i, (v, len)) in profile.values.iter().zip(&profile.lengths).enumerate() {
        match v {
            Some(p) => total += len * p * p,
            None => return Err(FocsError::PartialProfile { interval: i }),
        }
    }
    Ok(total)
}

/// Checks a schedule against the model constraints. For complete schedules
/// demand coverage is an equality within `DEMAND_TOL`; for partial ones
/// only the cap and sign constraints plus over-delivery are checked.
/// Returns the name of the first violated constraint.
pub fn validate_schedule(
    jobs: &[Job],
    timeline: &Timeline,
    schedule: &Schedule,
) -> std::result::Result<(), String> {
    for (i, j, e) in schedule.entries() {
        if e < -1e-12 {
            return Err(format!("non-negativity (1b): e[({i},{j})] = {e}"));
        }
        let cap = timeline.energy_cap(i, &jobs[j]);
        if e > cap * (1.0 + 1e-9) + 1e-9 {
            return Err(format!("power-cap (1c): e[({i},{j})] = {e} > {cap}"));
        }
        if !timeline.avail_by_job[j].contains(&i) {
            return Err(format!("availability: job {j} not available in interval {i}"));
        }
    }
    let complete = schedule.is_complete(timeline);
    for (j, job) in jobs.iter().enumerate() {
        let got = schedule.job_total(j);
        let tol = DEMAND_TOL * job.demand.max(1.0);
        if complete {
            if (got - job.demand).abs() > tol {
                return Err(format!(
                    "demand-coverage (1a): job {j} got {got} kWh, demands {} kWh",
                    job.demand
                ));
            }
        } else if got > job.demand + tol {
            return Err(format!(
                "demand-coverage (1a): job {j} over-delivered {got} kWh of {} kWh",
                job.demand
            ));
        }
    }
    Ok(())
}
