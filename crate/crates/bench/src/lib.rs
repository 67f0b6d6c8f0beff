//! Shared instance setup for the criterion benches.

use focs_core::ingest::{synth_office, to_inputs, SynthParams};
use focs_core::{build_jobs, discretize, ClampPolicy, Job, Timeline};

/// A synthetic office-day instance with `n` sessions on a 900 s grid.
pub fn office_instance(n: usize, seed: u64) -> (Vec<Job>, Timeline) {
    let sessions = synth_office(n, seed, &SynthParams::default()).expect("valid defaults");
    let (jobs, _) = build_jobs(&to_inputs(&sessions), 900, ClampPolicy::ClampEnergy)
        .expect("synthetic sessions build");
    let timeline = discretize(&jobs).expect("non-empty instance");
    (jobs, timeline)
}
