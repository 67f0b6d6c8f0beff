//! Randomized structural properties: discretization invariants, grid
//! rounding, and monotonicity of the max flow in the sink capacities.

use std::collections::BTreeMap;

use proptest::prelude::*;

use focs_core::{
    build_jobs, build_network, discretize, max_flow, ClampPolicy, MaxFlowMethod, SessionInput,
};

fn session_strategy() -> impl Strategy<Value = SessionInput> {
    (0i64..86_400, 1i64..43_200, 0.1f64..60.0, prop_oneof![Just(11.0), Just(22.0)]).prop_map(
        |(arrival_s, duration_s, energy_kwh, power_cap_kw)| SessionInput {
            id: format!("s{arrival_s}-{duration_s}"),
            arrival_s,
            departure_s: arrival_s + duration_s,
            energy_kwh,
            power_cap_kw,
        },
    )
}

proptest! {
    #[test]
    fn discretization_invariants(
        sessions in proptest::collection::vec(session_strategy(), 1..20),
        granularity in prop_oneof![Just(60u32), Just(900), Just(1800), Just(3600)],
    ) {
        let (jobs, stats) = build_jobs(&sessions, granularity, ClampPolicy::ClampEnergy).unwrap();
        prop_assert_eq!(jobs.len() + stats.dropped_empty_window + stats.dropped_zero_demand, sessions.len());
        let g = granularity as f64 / 3600.0;
        for job in &jobs {
            // windows on the grid, non-empty, feasible after clamping
            let on_grid = |t: f64| ((t / g) - (t / g).round()).abs() < 1e-6;
            prop_assert!(on_grid(job.arrival));
            prop_assert!(on_grid(job.departure));
            prop_assert!(job.departure > job.arrival);
            prop_assert!(job.is_feasible());
        }
        if jobs.is_empty() {
            return Ok(());
        }
        let tl = discretize(&jobs).unwrap();
        prop_assert!(tl.num_intervals() < 2 * jobs.len());
        for w in tl.breakpoints.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        for (j, job) in jobs.iter().enumerate() {
            // availability covers exactly the job's window
            let covered: f64 = tl.avail_by_job[j].iter().map(|&i| tl.length(i)).sum();
            prop_assert!((covered - job.window()).abs() < 1e-9);
        }
        for (i, avail) in tl.avail_by_interval.iter().enumerate() {
            for &j in avail {
                prop_assert!(jobs[j].arrival <= tl.intervals[i].start + 1e-12);
                prop_assert!(tl.intervals[i].end <= jobs[j].departure + 1e-12);
            }
        }
    }

    #[test]
    fn max_flow_monotone_in_sink_caps(
        sessions in proptest::collection::vec(session_strategy(), 1..10),
        scale in 0.1f64..1.0,
        extra in 0.0f64..5.0,
    ) {
        let (jobs, _) = build_jobs(&sessions, 3600, ClampPolicy::ClampEnergy).unwrap();
        if jobs.is_empty() {
            return Ok(());
        }
        let tl = discretize(&jobs).unwrap();
        let demands: BTreeMap<usize, f64> =
            jobs.iter().enumerate().map(|(j, job)| (j, job.demand)).collect();
        let total: f64 = demands.values().sum();
        let low: BTreeMap<usize, f64> = (0..tl.num_intervals())
            .map(|i| (i, scale * total / tl.num_intervals() as f64))
            .collect();
        let high: BTreeMap<usize, f64> = low.iter().map(|(&i, &c)| (i, c + extra)).collect();
        let net_low = build_network(&jobs, &tl, &demands, &low).unwrap();
        let net_high = build_network(&jobs, &tl, &demands, &high).unwrap();
        for m in MaxFlowMethod::ALL {
            let v_low = max_flow(&net_low, m).value;
            let v_high = max_flow(&net_high, m).value;
            prop_assert!(v_high >= v_low - 1e-9, "{}: {} < {}", m, v_high, v_low);
            prop_assert!(v_high <= total + 1e-9);
        }
    }
}
