//! Session data: CSV ingest, power-cap assignment, instance sampling and
//! a synthetic office-pattern generator.
//!
//! Input CSV contract: header `session_id,arrival_ts,departure_ts,energy_kwh`
//! with an optional trailing `avg_power_kw` column; UTF-8, epoch seconds,
//! decimal point `.`.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::FocsError;
use crate::instance::{Job, SessionInput};
use crate::Result;

const SECONDS_PER_DAY: i64 = 86_400;
const SECONDS_PER_HOUR: f64 = 3600.0;

/// One recorded charging session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSession {
    pub session_id: String,
    pub arrival_ts: i64,
    pub departure_ts: i64,
    pub energy_kwh: f64,
    /// Observed average charging power; computed from energy and duration
    /// when the column is absent.
    pub avg_power_kw: Option<f64>,
}

impl RawSession {
    pub fn duration_h(&self) -> f64 {
        (self.departure_ts - self.arrival_ts) as f64 / SECONDS_PER_HOUR
    }

    pub fn avg_power(&self) -> f64 {
        self.avg_power_kw
            .unwrap_or_else(|| self.energy_kwh / self.duration_h())
    }
}

/// Reads sessions from a CSV file, rejecting malformed rows with their
/// line number.
pub fn parse_sessions(path: &Path) -> Result<Vec<RawSession>> {
    let display = path.display().to_string();
    let io_err = |source| FocsError::Io {
        path: display.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(io),
            other => FocsError::MalformedRow {
                path: display.clone(),
                line: 1,
                msg: format!("{other:?}"),
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| FocsError::MalformedRow {
            path: display.clone(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = ["session_id", "arrival_ts", "departure_ts", "energy_kwh"];
    for name in required {
        if col(name).is_none() {
            return Err(FocsError::MissingColumn {
                path: display.clone(),
                column: name.into(),
            });
        }
    }
    let idx_id = col("session_id").unwrap();
    let idx_arr = col("arrival_ts").unwrap();
    let idx_dep = col("departure_ts").unwrap();
    let idx_energy = col("energy_kwh").unwrap();
    let idx_avg = col("avg_power_kw");

    let mut sessions = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| FocsError::MalformedRow {
            path: display.clone(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |msg: String| FocsError::MalformedRow {
            path: display.clone(),
            line,
            msg,
        };
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let arrival_ts: i64 = field(idx_arr)
            .parse()
            .map_err(|_| malformed(format!("bad arrival_ts `{}`", field(idx_arr))))?;
        let departure_ts: i64 = field(idx_dep)
            .parse()
            .map_err(|_| malformed(format!("bad departure_ts `{}`", field(idx_dep))))?;
        let energy_kwh: f64 = field(idx_energy)
            .parse()
            .map_err(|_| malformed(format!("bad energy_kwh `{}`", field(idx_energy))))?;
        let avg_power_kw = match idx_avg {
            Some(i) if !field(i).is_empty() => Some(
                field(i)
                    .parse()
                    .map_err(|_| malformed(format!("bad avg_power_kw `{}`", field(i))))?,
            ),
            _ => None,
        };
        if departure_ts <= arrival_ts {
            return Err(malformed(format!(
                "departure_ts {departure_ts} not after arrival_ts {arrival_ts}"
            )));
        }
        if energy_kwh < 0.0 {
            return Err(malformed(format!("negative energy_kwh {energy_kwh}")));
        }
        sessions.push(RawSession {
            session_id: field(idx_id).to_string(),
            arrival_ts,
            departure_ts,
            energy_kwh,
            avg_power_kw,
        });
    }
    Ok(sessions)
}

/// The power cap of a session: 22 kW when the average observed charging
/// power exceeds 11 kW, 11 kW otherwise (the boundary goes to the lower
/// class).
pub fn assign_pmax(session: &RawSession) -> f64 {
    if session.avg_power() > 11.0 {
        22.0
    } else {
        11.0
    }
}

/// Sessions with their power cap assigned, ready for job construction.
pub fn to_inputs(sessions: &[RawSession]) -> Vec<SessionInput> {
    sessions
        .iter()
        .map(|s| SessionInput {
            id: s.session_id.clone(),
            arrival_s: s.arrival_ts,
            departure_s: s.departure_ts,
            energy_kwh: s.energy_kwh,
            power_cap_kw: assign_pmax(s),
        })
        .collect()
}

/// Uniform sample of `n` sessions without replacement, deterministic per
/// seed.
pub fn sample_instance(sessions: &[RawSession], n: usize, seed: u64) -> Result<Vec<RawSession>> {
    if n > sessions.len() {
        return Err(FocsError::SampleTooLarge {
            n,
            available: sessions.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, sessions.len(), n)
        .into_iter()
        .map(|i| sessions[i].clone())
        .collect())
}

/// Re-bases sessions onto a single day, preserving time of day and
/// duration. Sessions crossing midnight keep a departure past 24h.
pub fn rebase_to_day(sessions: &[RawSession]) -> Vec<RawSession> {
    sessions
        .iter()
        .map(|s| {
            let arrival = s.arrival_ts.rem_euclid(SECONDS_PER_DAY);
            RawSession {
                session_id: s.session_id.clone(),
                arrival_ts: arrival,
                departure_ts: arrival + (s.departure_ts - s.arrival_ts),
                energy_kwh: s.energy_kwh,
                avg_power_kw: s.avg_power_kw,
            }
        })
        .collect()
}

/// Restricts jobs to the horizon starting at `t_noon` (hours): jobs gone
/// by then are dropped, arrivals are moved up to `t_noon`, and energies
/// clamped to what the shortened window can hold. Full original energy is
/// kept otherwise.
pub fn clamp_to_noon(jobs: &[Job], t_noon: f64) -> Vec<Job> {
    jobs.iter()
        .filter(|j| j.departure > t_noon)
        .map(|j| {
            let mut job = j.clone();
            job.arrival = job.arrival.max(t_noon);
            job.demand = job.demand.min(job.energy_bound());
            job
        })
        .collect()
}

/// Distribution parameters for the synthetic office-pattern generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthParams {
    pub arrival_mean_h: f64,
    pub arrival_sd_h: f64,
    pub arrival_min_h: f64,
    pub arrival_max_h: f64,
    pub departure_mean_h: f64,
    pub departure_sd_h: f64,
    pub departure_min_h: f64,
    pub departure_max_h: f64,
    pub energy_log_mean: f64,
    pub energy_log_sd: f64,
    pub energy_min_kwh: f64,
    pub energy_max_kwh: f64,
}

impl Default for SynthParams {
    /// Arrivals clustered 07:00-10:00, departures 15:00-18:00, energies
    /// 5-60 kWh truncated lognormal.
    fn default() -> Self {
        SynthParams {
            arrival_mean_h: 8.5,
            arrival_sd_h: 0.9,
            arrival_min_h: 7.0,
            arrival_max_h: 10.0,
            departure_mean_h: 16.5,
            departure_sd_h: 0.9,
            departure_min_h: 15.0,
            departure_max_h: 18.0,
            energy_log_mean: 2.8,
            energy_log_sd: 0.6,
            energy_min_kwh: 5.0,
            energy_max_kwh: 60.0,
        }
    }
}

impl SynthParams {
    // the negated comparisons deliberately treat NaN parameters as invalid
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| FocsError::DegenerateParams { msg: msg.into() };
        if !(self.arrival_min_h < self.arrival_max_h) {
            return Err(bad("arrival window is empty"));
        }
        if !(self.departure_min_h < self.departure_max_h) {
            return Err(bad("departure window is empty"));
        }
        if self.arrival_max_h >= self.departure_min_h {
            return Err(bad("arrival window must end before the departure window starts"));
        }
        if !(self.arrival_sd_h > 0.0 && self.departure_sd_h > 0.0 && self.energy_log_sd > 0.0) {
            return Err(bad("standard deviations must be positive"));
        }
        if !(0.0 < self.energy_min_kwh && self.energy_min_kwh < self.energy_max_kwh) {
            return Err(bad("energy range is empty"));
        }
        Ok(())
    }
}

fn truncated<D: Distribution<f64>>(dist: &D, lo: f64, hi: f64, rng: &mut impl Rng) -> f64 {
    // rejection sampling; windows are within a couple of standard
    // deviations of the mean, so this converges quickly
    for _ in 0..10_000 {
        let x = dist.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    0.5 * (lo + hi)
}

/// Generates `n` feasible office-pattern sessions, deterministic per seed.
pub fn synth_office(n: usize, seed: u64, params: &SynthParams) -> Result<Vec<RawSession>> {
    params.validate()?;
    let arrival_dist = Normal::new(params.arrival_mean_h, params.arrival_sd_h)
        .map_err(|e| FocsError::DegenerateParams { msg: e.to_string() })?;
    let departure_dist = Normal::new(params.departure_mean_h, params.departure_sd_h)
        .map_err(|e| FocsError::DegenerateParams { msg: e.to_string() })?;
    let energy_dist = LogNormal::new(params.energy_log_mean, params.energy_log_sd)
        .map_err(|e| FocsError::DegenerateParams { msg: e.to_string() })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sessions = Vec::with_capacity(n);
    for k in 0..n {
        let arrival_h = truncated(&arrival_dist, params.arrival_min_h, params.arrival_max_h, &mut rng);
        let departure_h = truncated(
            &departure_dist,
            params.departure_min_h,
            params.departure_max_h,
            &mut rng,
        );
        let duration_h = departure_h - arrival_h;
        let mut energy = truncated(&energy_dist, params.energy_min_kwh, params.energy_max_kwh, &mut rng);
        // keep the session chargeable at the 22 kW cap class
        energy = energy.min(22.0 * duration_h);
        sessions.push(RawSession {
            session_id: format!("synth-{seed}-{k}"),
            arrival_ts: (arrival_h * SECONDS_PER_HOUR).round() as i64,
            departure_ts: (departure_h * SECONDS_PER_HOUR).round() as i64,
            energy_kwh: energy,
            avg_power_kw: None,
        });
    }
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_well_formed_file() {
        let f = write_csv(
            "session_id,arrival_ts,departure_ts,energy_kwh,avg_power_kw\n\
             a,0,7200,10.0,5.0\n\
             b,3600,18000,30.5,\n\
             c,0,3600,7.5,15.0\n",
        );
        let sessions = parse_sessions(f.path()).unwrap();
        assert_eq!(sessions.len(), 3);
        assert_eq!(sessions[0].avg_power_kw, Some(5.0));
        assert_eq!(sessions[1].avg_power_kw, None);
        assert!((sessions[1].avg_power() - 30.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn departure_before_arrival_rejected_with_line() {
        let f = write_csv(
            "session_id,arrival_ts,departure_ts,energy_kwh\n\
             a,0,7200,10.0\n\
             b,7200,3600,5.0\n",
        );
        match parse_sessions(f.path()) {
            Err(FocsError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed-row error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_reported() {
        let f = write_csv("session_id,arrival_ts,energy_kwh\na,0,10.0\n");
        match parse_sessions(f.path()) {
            Err(FocsError::MissingColumn { column, .. }) => assert_eq!(column, "departure_ts"),
            other => panic!("expected missing-column error, got {other:?}"),
        }
    }

    #[test]
    fn avg_power_computed_when_column_absent() {
        let f = write_csv("session_id,arrival_ts,departure_ts,energy_kwh\na,0,7200,11.0\n");
        let sessions = parse_sessions(f.path()).unwrap();
        assert!((sessions[0].avg_power() - 5.5).abs() < 1e-12);
    }

    #[test]
    fn pmax_rule_with_boundary() {
        let s = |avg: f64| RawSession {
            session_id: "s".into(),
            arrival_ts: 0,
            departure_ts: 3600,
            energy_kwh: avg,
            avg_power_kw: Some(avg),
        };
        assert_eq!(assign_pmax(&s(15.0)), 22.0);
        assert_eq!(assign_pmax(&s(5.0)), 11.0);
        assert_eq!(assign_pmax(&s(11.0)), 11.0);
    }

    #[test]
    fn sampling_is_deterministic_and_duplicate_free() {
        let sessions = synth_office(50, 7, &SynthParams::default()).unwrap();
        let a = sample_instance(&sessions, 20, 99).unwrap();
        let b = sample_instance(&sessions, 20, 99).unwrap();
        let ids_a: Vec<&str> = a.iter().map(|s| s.session_id.as_str()).collect();
        let ids_b: Vec<&str> = b.iter().map(|s| s.session_id.as_str()).collect();
        assert_eq!(ids_a, ids_b);
        let mut dedup = ids_a.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), ids_a.len());
    }

    #[test]
    fn full_size_sample_is_a_shuffle() {
        let sessions = synth_office(30, 3, &SynthParams::default()).unwrap();
        let sample = sample_instance(&sessions, 30, 5).unwrap();
        let mut ids: Vec<&str> = sample.iter().map(|s| s.session_id.as_str()).collect();
        ids.sort();
        let mut orig: Vec<&str> = sessions.iter().map(|s| s.session_id.as_str()).collect();
        orig.sort();
        assert_eq!(ids, orig);
        assert!(matches!(
            sample_instance(&sessions, 31, 5),
            Err(FocsError::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn noon_clamp_rules() {
        let job = |a: f64, d: f64, e: f64| Job {
            id: "j".into(),
            arrival: a,
            departure: d,
            demand: e,
            power_cap: 11.0,
        };
        let jobs = vec![job(8.0, 17.0, 40.0), job(8.0, 11.0, 10.0), job(11.0, 13.0, 30.0)];
        let clamped = clamp_to_noon(&jobs, 12.0);
        assert_eq!(clamped.len(), 2);
        assert_eq!(clamped[0].arrival, 12.0);
        assert_eq!(clamped[0].demand, 40.0);
        assert_eq!(clamped[1].arrival, 12.0);
        assert_eq!(clamped[1].demand, 11.0); // 11 kW * 1 h
    }

    #[test]
    fn synth_contract() {
        assert!(synth_office(0, 1, &SynthParams::default()).unwrap().is_empty());
        let sessions = synth_office(400, 42, &SynthParams::default()).unwrap();
        assert_eq!(sessions.len(), 400);
        for s in &sessions {
            assert!(s.departure_ts > s.arrival_ts);
            assert!(s.energy_kwh > 0.0);
            assert!(s.avg_power() <= 22.0 + 1e-9);
        }
        // pinned regression value: the office pattern keeps almost every
        // session spanning noon, so noon-start instances retain most jobs
        let noon = 12 * 3600;
        let spanning = sessions
            .iter()
            .filter(|s| s.arrival_ts <= noon && s.departure_ts > noon)
            .count();
        assert!(spanning as f64 >= 0.8 * sessions.len() as f64, "{spanning}/400");
    }

    #[test]
    fn degenerate_params_rejected() {
        let p = SynthParams {
            arrival_max_h: 6.0,
            ..Default::default()
        };
        assert!(matches!(
            synth_office(10, 1, &p),
            Err(FocsError::DegenerateParams { .. })
        ));
    }

    #[test]
    fn rebase_preserves_time_of_day_and_duration() {
        let s = RawSession {
            session_id: "s".into(),
            arrival_ts: 3 * 86_400 + 8 * 3600,
            departure_ts: 3 * 86_400 + 17 * 3600,
            energy_kwh: 10.0,
            avg_power_kw: None,
        };
        let rebased = rebase_to_day(&[s]);
        assert_eq!(rebased[0].arrival_ts, 8 * 3600);
        assert_eq!(rebased[0].departure_ts, 17 * 3600);
    }
}
