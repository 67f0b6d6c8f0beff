//! Independent optimality references used to validate the scheduler
//! without an external solver: an exact minimizer over energy quanta
//! (successive unit augmentation along minimum-marginal-cost residual
//! paths) and a bisection search for the min-max peak.
//!
//! These exist for correctness at desk scale, not performance.

use std::collections::{BTreeMap, VecDeque};

use crate::error::FocsError;
use crate::instance::{Job, Schedule, Timeline};
use crate::maxflow::{build_network, max_flow, MaxFlowMethod};
use crate::Result;

/// An instance discretized onto an energy quantum: demands in units
/// (exactly), per-pair caps rounded down.
#[derive(Debug, Clone)]
pub struct QuantizedInstance {
    pub quantum: f64,
    pub unit_demands: Vec<u64>,
    pub unit_caps: BTreeMap<(usize, usize), u64>,
}

impl QuantizedInstance {
    /// Quantizes `jobs` over `timeline`. Demands must already lie on the
    /// quantum grid; pair caps are rounded down.
    pub fn from_jobs(jobs: &[Job], timeline: &Timeline, quantum: f64) -> Result<Self> {
        let mut unit_demands = Vec::with_capacity(jobs.len());
        let mut unit_caps = BTreeMap::new();
        for (j, job) in jobs.iter().enumerate() {
            let units = (job.demand / quantum).round();
            if (units * quantum - job.demand).abs() > 1e-9 * job.demand.max(1.0) {
                return Err(FocsError::OffQuantumGrid {
                    job: j,
                    demand: job.demand,
                    quantum,
                });
            }
            unit_demands.push(units as u64);
            let mut available: u64 = 0;
            for &i in &timeline.avail_by_job[j] {
                let cap = (timeline.energy_cap(i, job) / quantum + 1e-9).floor() as u64;
                unit_caps.insert((j, i), cap);
                available += cap;
            }
            if available < units as u64 {
                return Err(FocsError::QuantizedInfeasible {
                    job: j,
                    need: units as u64,
                    have: available,
                });
            }
        }
        Ok(QuantizedInstance {
            quantum,
            unit_demands,
            unit_caps,
        })
    }
}

/// Exact minimizer of `sum_i L_i p_i^2` over quantized allocations.
///
/// Augments one unit at a time along the cheapest residual path, where the
/// marginal cost of interval `i` holding `u` units is
/// `L_i * (((u+1) q / L_i)^2 - (u q / L_i)^2)`. Paths are found by a
/// label-correcting search, which tolerates the negative reduced costs of
/// residual arcs. Optimality follows from convexity of the separable cost.
pub fn optimal_quantized(
    instance: &QuantizedInstance,
    lengths: &[f64],
) -> Result<(Schedule, f64)> {
    let num_jobs = instance.unit_demands.len();
    let num_intervals = lengths.len();
    let q = instance.quantum;

    // node layout: jobs, then intervals, then the sink
    let interval_base = num_jobs;
    let sink = num_jobs + num_intervals;
    let num_nodes = sink + 1;

    let mut units: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut load = vec![0u64; num_intervals];
    let mut remaining: Vec<u64> = instance.unit_demands.clone();

    let marginal = |i: usize, load: &[u64]| -> f64 {
        let u = load[i] as f64;
        q * q * (2.0 * u + 1.0) / lengths[i]
    };

    let total_units: u64 = remaining.iter().sum();
    for _ in 0..total_units {
        // label-correcting multi-source shortest path to the sink
        let mut dist = vec![f64::INFINITY; num_nodes];
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; num_nodes]; // (node, is_reverse)
        let mut queue: VecDeque<usize> = VecDeque::new();
        let mut in_queue = vec![false; num_nodes];
        for (j, &r) in remaining.iter().enumerate() {
            if r > 0 {
                dist[j] = 0.0;
                queue.push_back(j);
                in_queue[j] = true;
            }
        }
        while let Some(v) = queue.pop_front() {
            in_queue[v] = false;
            if v < num_jobs {
                for (&(j, i), &cap) in instance.unit_caps.range((v, 0)..(v + 1, 0)) {
                    let used = units.get(&(j, i)).copied().unwrap_or(0);
                    if used < cap {
                        let w = interval_base + i;
                        if dist[v] < dist[w] - 1e-15 {
                            dist[w] = dist[v];
                            pred[w] = Some((v, false));
                            if !in_queue[w] {
                                queue.push_back(w);
                                in_queue[w] = true;
                            }
                        }
                    }
                }
            } else if v < sink {
                let i = v - interval_base;
                // place the unit here
                let cost = dist[v] + marginal(i, &load);
                if cost < dist[sink] - 1e-15 {
                    dist[sink] = cost;
                    pred[sink] = Some((v, false));
                }
                // hand an already-placed unit back to its job
                for ((j, ci), &used) in units.iter() {
                    if *ci == i && used > 0 && dist[v] < dist[*j] - 1e-15 {
                        dist[*j] = dist[v];
                        pred[*j] = Some((v, true));
                        if !in_queue[*j] {
                            queue.push_back(*j);
                            in_queue[*j] = true;
                        }
                    }
                }
            }
        }

        // walk the path backwards, applying unit updates
        let mut node = sink;
        let mut entered_from = pred[sink];
        let final_interval = match entered_from {
            Some((v, _)) => v - interval_base,
            None => unreachable!("quantized instance was checked feasible"),
        };
        load[final_interval] += 1;
        let mut source_job = None;
        while let Some((prev, is_reverse)) = entered_from {
            if node < num_jobs && is_reverse {
                // arrived at job `node` by removing one of its units from `prev`
                let i = prev - interval_base;
                *units.get_mut(&(node, i)).expect("unit present") -= 1;
            } else if node >= num_jobs && node < sink && !is_reverse {
                let i = node - interval_base;
                *units.entry((prev, i)).or_insert(0) += 1;
            }
            node = prev;
            entered_from = pred[node];
            if entered_from.is_none() {
                source_job = Some(node);
            }
        }
        let j = source_job.expect("path starts at a job with remaining demand");
        remaining[j] -= 1;
    }

    let mut schedule = Schedule::new();
    for (&(j, i), &u) in &units {
        if u > 0 {
            schedule.set(i, j, u as f64 * q);
        }
    }
    for i in 0..num_intervals {
        schedule.mark_fixed(i);
    }
    let objective: f64 = load
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let e = u as f64 * q;
            e * e / lengths[i]
        })
        .sum();
    Ok((schedule, objective))
}

/// The smallest uniform power level (within `tol`) whose sink capacities
/// `g * L_i` admit a demand-saturating flow, bisected over
/// `[0, sum_j power_cap]`.
pub fn minmax_peak_bisect(jobs: &[Job], timeline: &Timeline, tol: f64) -> f64 {
    if jobs.is_empty() {
        return 0.0;
    }
    let total_demand: f64 = jobs.iter().map(|j| j.demand).sum();
    if total_demand <= 0.0 {
        return 0.0;
    }
    let demands: BTreeMap<usize, f64> = jobs
        .iter()
        .enumerate()
        .map(|(idx, j)| (idx, j.demand))
        .collect();
    let feasible = |g: f64| -> bool {
        let caps: BTreeMap<usize, f64> = (0..timeline.num_intervals())
            .map(|i| (i, g * timeline.length(i)))
            .collect();
        let net = build_network(jobs, timeline, &demands, &caps).expect("non-negative caps");
        let flow = max_flow(&net, MaxFlowMethod::Dinitz);
        total_demand - flow.value <= 1e-9 * total_demand.max(1.0)
    };
    let mut lo = 0.0;
    let mut hi: f64 = jobs.iter().map(|j| j.power_cap).sum();
    debug_assert!(feasible(hi), "per-job feasible instance must fit at the cap sum");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{aggregate_profile, build_jobs, discretize, ClampPolicy, SessionInput};

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

    /// Exhaustive minimum over all quantized allocations; the independent
    /// check for the unit-augmentation path.
    fn brute_force_optimum(instance: &QuantizedInstance, lengths: &[f64]) -> f64 {
        fn recurse(
            instance: &QuantizedInstance,
            lengths: &[f64],
            job: usize,
            load: &mut Vec<u64>,
            best: &mut f64,
        ) {
            if job == instance.unit_demands.len() {
                let obj: f64 = load
                    .iter()
                    .enumerate()
                    .map(|(i, &u)| {
                        let e = u as f64 * instance.quantum;
                        e * e / lengths[i]
                    })
                    .sum();
                *best = best.min(obj);
                return;
            }
            let caps: Vec<(usize, u64)> = instance
                .unit_caps
                .range((job, 0)..(job + 1, 0))
                .map(|(&(_, i), &c)| (i, c))
                .collect();
            let demand = instance.unit_demands[job];
            #[allow(clippy::too_many_arguments)]
            fn split(
                instance: &QuantizedInstance,
                lengths: &[f64],
                job: usize,
                caps: &[(usize, u64)],
                pos: usize,
                left: u64,
                load: &mut Vec<u64>,
                best: &mut f64,
            ) {
                if pos == caps.len() {
                    if left == 0 {
                        recurse(instance, lengths, job + 1, load, best);
                    }
                    return;
                }
                let (interval, cap) = caps[pos];
                for take in 0..=cap.min(left) {
                    load[interval] += take;
                    split(instance, lengths, job, caps, pos + 1, left - take, load, best);
                    load[interval] -= take;
                }
            }
            split(instance, lengths, job, &caps, 0, demand, load, best);
        }
        let mut load = vec![0u64; lengths.len()];
        let mut best = f64::INFINITY;
        recurse(instance, lengths, 0, &mut load, &mut best);
        best
    }

    #[test]
    fn fig2_quantized_optimum() {
        let (jobs, tl) = instance(&[(0, 2, 4.0, 2.0), (1, 3, 2.0, 1.0)]);
        let qi = QuantizedInstance::from_jobs(&jobs, &tl, 0.5).unwrap();
        let (schedule, obj) = optimal_quantized(&qi, &tl.lengths()).unwrap();
        assert!((obj - 14.0).abs() < 1e-9);
        let profile = aggregate_profile(&schedule, &tl);
        for (got, want) in profile.values.iter().zip([2.0, 3.0, 1.0]) {
            assert!((got.unwrap() - want).abs() < 1e-9);
        }
        assert!((brute_force_optimum(&qi, &tl.lengths()) - obj).abs() < 1e-9);
    }

    #[test]
    fn fig6_quantized_optimum() {
        let (jobs, tl) = instance(&[
            (0, 2, 2.0, 2.0),
            (0, 1, 0.5, 2.0),
            (1, 2, 0.5, 2.0),
            (0, 2, 2.0, 2.0),
        ]);
        let qi = QuantizedInstance::from_jobs(&jobs, &tl, 0.5).unwrap();
        let (_, obj) = optimal_quantized(&qi, &tl.lengths()).unwrap();
        assert!((obj - 12.5).abs() < 1e-9);
        assert!((brute_force_optimum(&qi, &tl.lengths()) - obj).abs() < 1e-9);
    }

    #[test]
    fn single_job_all_units_in_its_interval() {
        let (jobs, tl) = instance(&[(0, 2, 3.0, 2.0)]);
        let qi = QuantizedInstance::from_jobs(&jobs, &tl, 3.0).unwrap();
        assert_eq!(qi.unit_demands, vec![1]);
        let (schedule, obj) = optimal_quantized(&qi, &tl.lengths()).unwrap();
        assert_eq!(schedule.get(0, 0), 3.0);
        assert!((obj - 4.5).abs() < 1e-9);
    }

    #[test]
    fn off_grid_demand_rejected() {
        let (jobs, tl) = instance(&[(0, 2, 3.3, 2.0)]);
        assert!(matches!(
            QuantizedInstance::from_jobs(&jobs, &tl, 0.5),
            Err(FocsError::OffQuantumGrid { .. })
        ));
    }

    #[test]
    fn infeasible_quantized_instance_rejected() {
        // the first job's 2 kWh per-interval caps round down to 0 units
        let (jobs, tl) = instance(&[(0, 2, 4.0, 2.0), (0, 1, 4.0, 22.0)]);
        assert!(matches!(
            QuantizedInstance::from_jobs(&jobs, &tl, 4.0),
            Err(FocsError::QuantizedInfeasible { .. })
        ));
    }

    #[test]
    fn halving_quantum_stays_within_analytic_bound() {
        let (jobs, tl) = instance(&[(0, 2, 4.0, 2.0), (1, 3, 2.0, 1.0), (0, 3, 2.0, 2.0)]);
        let lengths = tl.lengths();
        let coarse = QuantizedInstance::from_jobs(&jobs, &tl, 1.0).unwrap();
        let (sched, f_coarse) = optimal_quantized(&coarse, &lengths).unwrap();
        let fine = QuantizedInstance::from_jobs(&jobs, &tl, 0.5).unwrap();
        let (_, f_fine) = optimal_quantized(&fine, &lengths).unwrap();
        assert!(f_fine <= f_coarse + 1e-9);
        let profile = aggregate_profile(&sched, &tl);
        let bound: f64 = profile
            .values
            .iter()
            .zip(&lengths)
            .map(|(p, l)| {
                let p = p.unwrap();
                l * (2.0 * p * coarse.quantum / l + (coarse.quantum / l).powi(2))
            })
            .sum();
        assert!(f_coarse - f_fine <= bound);
    }

    #[test]
    fn bisect_peaks() {
        let (jobs, tl) = instance(&[(0, 2, 4.0, 2.0), (1, 3, 2.0, 1.0)]);
        assert!((minmax_peak_bisect(&jobs, &tl, 1e-9) - 3.0).abs() < 1e-6);
        let (jobs, tl) = instance(&[
            (0, 2, 2.0, 2.0),
            (0, 1, 0.5, 2.0),
            (1, 2, 0.5, 2.0),
            (0, 2, 2.0, 2.0),
        ]);
        assert!((minmax_peak_bisect(&jobs, &tl, 1e-9) - 2.5).abs() < 1e-6);
    }

    #[test]
    fn bisect_empty_instance_is_zero() {
        let tl = Timeline {
            breakpoints: vec![],
            intervals: vec![],
            avail_by_interval: vec![],
            avail_by_job: vec![],
        };
        assert_eq!(minmax_peak_bisect(&[], &tl, 1e-9), 0.0);
    }
}
