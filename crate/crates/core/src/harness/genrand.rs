//! Seeded random instances and networks for the verification suites and
//! the property tests. Desk scale throughout: at most 12 jobs, demands on
//! a 0.25 kWh grid so the quantized reference stays exact.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{discretize, Job, Timeline};
use crate::maxflow::FlowNetwork;

/// Quantum the random demands are drawn on.
pub const INSTANCE_QUANTUM: f64 = 0.25;

/// A feasible random instance with up to 12 jobs on an integer-hour grid.
/// Includes degenerate shapes (single job, identical jobs, nested windows)
/// with positive probability.
pub fn random_instance(seed: u64) -> (Vec<Job>, Timeline) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=12);
    let shape = rng.gen_range(0..10);
    let mut jobs = Vec::with_capacity(n);

    let random_window = |rng: &mut ChaCha8Rng| {
        let a = rng.gen_range(0..8) as f64;
        let d = rng.gen_range(a as usize + 1..=8) as f64;
        (a, d)
    };
    let caps = [0.5, 1.0, 2.0, 3.0];

    match shape {
        // all-identical jobs
        0 => {
            let (a, d) = random_window(&mut rng);
            let cap = caps[rng.gen_range(0..caps.len())];
            let units = max_units(cap, d - a);
            let demand = rng.gen_range(1..=units) as f64 * INSTANCE_QUANTUM;
            for k in 0..n {
                jobs.push(job(k, a, d, demand, cap));
            }
        }
        // nested windows around a common center
        1 => {
            for k in 0..n {
                let half = rng.gen_range(1..=4) as f64;
                let (a, d) = (4.0 - half, 4.0 + half);
                let cap = caps[rng.gen_range(0..caps.len())];
                let units = max_units(cap, d - a);
                let demand = rng.gen_range(1..=units) as f64 * INSTANCE_QUANTUM;
                jobs.push(job(k, a, d, demand, cap));
            }
        }
        _ => {
            for k in 0..n {
                let (a, d) = random_window(&mut rng);
                let cap = caps[rng.gen_range(0..caps.len())];
                let units = max_units(cap, d - a);
                let demand = rng.gen_range(1..=units) as f64 * INSTANCE_QUANTUM;
                jobs.push(job(k, a, d, demand, cap));
            }
        }
    }
    let timeline = discretize(&jobs).expect("at least one job");
    (jobs, timeline)
}

fn max_units(cap: f64, window: f64) -> u64 {
    // demand stays on the quantum grid, feasible, and at most 4 kWh to
    // keep the unit-augmentation reference fast
    (((cap * window) / INSTANCE_QUANTUM).floor() as u64).clamp(1, 16)
}

fn job(k: usize, arrival: f64, departure: f64, demand: f64, power_cap: f64) -> Job {
    Job {
        id: format!("r{k}"),
        arrival,
        departure,
        demand: demand.min(power_cap * (departure - arrival)),
        power_cap,
    }
}

/// A random digraph with 6 to 12 nodes and fractional capacities, for
/// method-agreement and min-cut checks.
pub fn random_network(seed: u64) -> FlowNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(6..=12);
    let mut net = FlowNetwork::empty(n, 0, n - 1);
    for u in 0..n {
        for v in 0..n {
            if u != v && v != 0 && u != n - 1 && rng.gen_bool(0.4) {
                let cap = rng.gen_range(0.0..8.0_f64) * 0.125;
                net.add_arc(u, v, cap).expect("non-negative capacity");
            }
        }
    }
    net
}
