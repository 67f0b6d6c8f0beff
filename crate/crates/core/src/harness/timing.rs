//! CPU-time measurement for the benchmark protocol. Per-thread CPU time
//! is used so parallel workers do not distort each other's measurements.

/// CPU time consumed by the calling thread, in seconds.
pub fn thread_cpu_time_s() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_THREAD_CPUTIME_ID) failed");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Runs `f`, returning its result and the thread CPU seconds it took.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = thread_cpu_time_s();
    let out = f();
    (out, thread_cpu_time_s() - start)
}
