//! Synthetic exam and closure logs generated from known workflow parameters.
//!
//! The generator runs the estimation pipeline's cleaning rules in reverse:
//! it plants negative-TAT rows, low-volume reader-days with inflated read
//! times, over-long closure gaps and non-resident readers, all of which a
//! correct estimator must discard.

use chrono::{Duration, FixedOffset, NaiveDate, NaiveTime, TimeZone};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::estimation::calendar::Calendar;
use crate::estimation::logs::{ClosureRecord, Diagnosis, ExamRecord, Location, ReaderRole, Timestamp};
use crate::model::{trial_rng, unit_exponential, Cohort, ExamClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamLogSpec {
    pub start: NaiveDate,
    pub n_days: u32,
    /// Offset from UTC in seconds used for every timestamp.
    pub utc_offset_secs: i32,
    pub work_interarrival: f64,
    pub off_interarrival: f64,
    /// Standard deviation of the per-day mean inter-arrival time, relative
    /// to the cohort mean. Zero keeps every day at the cohort mean.
    pub daily_relative_sd: f64,
    /// Keep only the first `max_rows` arrivals.
    pub max_rows: Option<usize>,
    /// Exact number of positive exams; otherwise `positive_fraction` per exam.
    pub n_positive: Option<usize>,
    pub positive_fraction: f64,
    /// Rows with report time before scan time, appended to the log.
    pub negative_tat_rows: usize,
    pub tat_mean: f64,
    /// Deployment date of the triage device and the mean TAT reduction of
    /// positive exams from that date on.
    pub ai_deployed_on: Option<NaiveDate>,
    pub positive_tat_shift: f64,
    pub n_residents: u32,
    pub n_staff: u32,
}

impl Default for ExamLogSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2019, 1, 7).expect("valid date"),
            n_days: 60,
            utc_offset_secs: -6 * 3600,
            work_interarrival: 2.17,
            off_interarrival: 3.19,
            daily_relative_sd: 0.0,
            max_rows: None,
            n_positive: None,
            positive_fraction: 0.15,
            negative_tat_rows: 0,
            tat_mean: 45.0,
            ai_deployed_on: None,
            positive_tat_shift: 0.0,
            n_residents: 12,
            n_staff: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureLogSpec {
    pub start: NaiveDate,
    pub n_days: u32,
    pub utc_offset_secs: i32,
    pub n_residents: u32,
    pub n_staff: u32,
    /// Probability that a resident reads on a given day.
    pub attendance: f64,
    /// Closures per regular reading day, inclusive range.
    pub closures_per_day: (usize, usize),
    /// Mean read times indexed like [`ExamClass::ALL`].
    pub read_means: [f64; 3],
    /// Class mix of closures, indexed like [`ExamClass::ALL`].
    pub class_mix: [f64; 3],
    /// Fraction of resident reader-days with fewer than 30 closures whose
    /// reads are `decoy_read_factor` times slower.
    pub short_day_fraction: f64,
    pub decoy_read_factor: f64,
    /// Chance that a break longer than an hour precedes a closure.
    pub break_probability: f64,
    /// Pad with staff closures until the log holds this many rows.
    pub total_closures: Option<usize>,
}

impl Default for ClosureLogSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2019, 1, 7).expect("valid date"),
            n_days: 60,
            utc_offset_secs: -6 * 3600,
            n_residents: 12,
            n_staff: 4,
            attendance: 0.8,
            closures_per_day: (35, 60),
            read_means: [12.1, 11.4, 6.1],
            class_mix: [0.02, 0.06, 0.92],
            short_day_fraction: 0.1,
            decoy_read_factor: 3.0,
            break_probability: 0.02,
            total_closures: None,
        }
    }
}

pub fn resident_id(i: u32) -> String {
    format!("RES{i:03}")
}

pub fn staff_id(i: u32) -> String {
    format!("STF{i:03}")
}

fn offset(secs: i32) -> FixedOffset {
    FixedOffset::east_opt(secs).expect("offset within a day")
}

fn at(day: NaiveDate, minutes: f64, tz: &FixedOffset) -> Timestamp {
    let base = tz.from_local_datetime(&day.and_time(NaiveTime::MIN)).single().expect("fixed offsets are unambiguous");
    base + Duration::microseconds((minutes * 60e6).round() as i64)
}

/// Minute-of-day windows `[lo, hi)` of each cohort block of a day.
fn blocks(day: NaiveDate, cal: &Calendar) -> Vec<(f64, f64, Cohort)> {
    let minutes = |t: NaiveTime| f64::from(t.signed_duration_since(NaiveTime::MIN).num_seconds() as i32) / 60.0;
    if cal.is_workday(day) {
        let (s, e) = (minutes(cal.work_start), minutes(cal.work_end));
        vec![(0.0, s, Cohort::OffHour), (s, e, Cohort::WorkHour), (e, 1440.0, Cohort::OffHour)]
    } else {
        vec![(0.0, 1440.0, Cohort::OffHour)]
    }
}

fn choose_class<R: Rng>(mix: &[f64; 3], rng: &mut R) -> ExamClass {
    let total: f64 = mix.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in mix.iter().enumerate() {
        if u < w {
            return ExamClass::ALL[i];
        }
        u -= w;
    }
    ExamClass::OutOfScope
}

/// Poisson arrivals per cohort block; each arrival becomes one exam row.
pub fn generate_exam_log(spec: &ExamLogSpec, calendar: &Calendar, seed: u64) -> Vec<ExamRecord> {
    let mut rng = trial_rng(seed, 0);
    let tz = offset(spec.utc_offset_secs);
    let mut scans = Vec::new();
    for d in 0..spec.n_days {
        let day = spec.start + Duration::days(i64::from(d));
        for (lo, hi, cohort) in blocks(day, calendar) {
            let base = match cohort {
                Cohort::WorkHour => spec.work_interarrival,
                Cohort::OffHour => spec.off_interarrival,
            };
            let mean = if spec.daily_relative_sd > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                (base * (1.0 + spec.daily_relative_sd * z)).max(0.2 * base)
            } else {
                base
            };
            let mut t = lo + mean * unit_exponential(&mut rng);
            while t < hi {
                scans.push(at(day, t, &tz));
                t += mean * unit_exponential(&mut rng);
            }
        }
    }
    if let Some(max) = spec.max_rows {
        scans.truncate(max);
    }
    let n = scans.len();
    let positive: Vec<bool> = match spec.n_positive {
        Some(k) => {
            let mut flags: Vec<bool> = (0..n).map(|i| i < k.min(n)).collect();
            flags.shuffle(&mut rng);
            flags
        }
        None => (0..n).map(|_| rng.random::<f64>() < spec.positive_fraction).collect(),
    };
    let readers: Vec<(String, ReaderRole)> = (0..spec.n_residents)
        .map(|i| (resident_id(i), ReaderRole::Resident))
        .chain((0..spec.n_staff).map(|i| (staff_id(i), ReaderRole::Staff)))
        .collect();
    let locations = [Location::Emergency, Location::Inpatient, Location::Outpatient];
    let make = |i: usize, scan: Timestamp, positive: bool, negative_tat: bool, rng: &mut ChaCha8Rng| {
        let diagnosis = if positive {
            Diagnosis::Positive
        } else if rng.random::<f64>() < 0.05 {
            Diagnosis::Indeterminate
        } else {
            Diagnosis::Negative
        };
        let mut tat = 1.0 + spec.tat_mean * unit_exponential(rng);
        // Positive exams before deployment wait exactly `positive_tat_shift`
        // longer on average than after.
        let before = spec.ai_deployed_on.is_some_and(|d| scan.naive_local().date() < d);
        if positive && before {
            tat += spec.positive_tat_shift;
        }
        if negative_tat {
            tat = -(1.0 + 120.0 * rng.random::<f64>());
        }
        let (reader_id, reader_role) = readers[rng.random_range(0..readers.len())].clone();
        ExamRecord {
            exam_id: format!("EX{i:07}"),
            scan_completed_at: scan,
            report_signed_at: scan + Duration::microseconds((tat * 60e6).round() as i64),
            reader_id,
            reader_role,
            diagnosis,
            location: locations[rng.random_range(0..locations.len())],
        }
    };
    let mut out: Vec<ExamRecord> =
        scans.iter().zip(&positive).enumerate().map(|(i, (&s, &p))| make(i, s, p, false, &mut rng)).collect();
    if n > 0 {
        for j in 0..spec.negative_tat_rows {
            let s = scans[rng.random_range(0..n)];
            out.push(make(n + j, s, false, true, &mut rng));
        }
    }
    out.sort_by(|a, b| a.scan_completed_at.cmp(&b.scan_completed_at).then(a.exam_id.cmp(&b.exam_id)));
    out
}

/// Consecutive reading sessions of residents plus decoy staff closures.
pub fn generate_closure_log(spec: &ClosureLogSpec, seed: u64) -> Vec<ClosureRecord> {
    let mut rng = trial_rng(seed, 1);
    let tz = offset(spec.utc_offset_secs);
    let mut out = Vec::new();
    let session = |reader: String, day: NaiveDate, n: usize, read_factor: f64, rng: &mut ChaCha8Rng| {
        let mut t = 7.5 * 60.0 + 60.0 * rng.random::<f64>();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let class = choose_class(&spec.class_mix, rng);
            let idx = ExamClass::ALL.iter().position(|&c| c == class).expect("known class");
            if rng.random::<f64>() < spec.break_probability {
                t += 61.0 + 60.0 * rng.random::<f64>();
            }
            t += read_factor * spec.read_means[idx] * unit_exponential(rng);
            if t >= 1440.0 {
                break;
            }
            rows.push(ClosureRecord { reader_id: reader.clone(), closed_at: at(day, t, &tz), exam_class: class });
        }
        rows
    };
    for d in 0..spec.n_days {
        let day = spec.start + Duration::days(i64::from(d));
        for r in 0..spec.n_residents {
            if rng.random::<f64>() >= spec.attendance {
                continue;
            }
            let (n, factor) = if rng.random::<f64>() < spec.short_day_fraction {
                (rng.random_range(5..30), spec.decoy_read_factor)
            } else {
                (rng.random_range(spec.closures_per_day.0..=spec.closures_per_day.1), 1.0)
            };
            out.extend(session(resident_id(r), day, n, factor, &mut rng));
        }
        for s in 0..spec.n_staff {
            let n = rng.random_range(spec.closures_per_day.0..=spec.closures_per_day.1);
            out.extend(session(staff_id(s), day, n, 0.3, &mut rng));
        }
    }
    if let Some(total) = spec.total_closures {
        let mut k = 0u64;
        let padding_day = spec.start;
        while out.len() < total {
            let reader = staff_id(spec.n_staff + (k % 50) as u32);
            let minute = (k / 50) as f64 * 1e-3;
            let class = choose_class(&spec.class_mix, &mut rng);
            out.push(ClosureRecord { reader_id: reader, closed_at: at(padding_day, minute, &tz), exam_class: class });
            k += 1;
        }
        out.truncate(total);
    }
    out.sort_by(|a, b| a.reader_id.cmp(&b.reader_id).then(a.closed_at.cmp(&b.closed_at)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exam_log_has_requested_shape() {
        let spec = ExamLogSpec {
            n_days: 30,
            max_rows: Some(1000),
            n_positive: Some(150),
            negative_tat_rows: 37,
            ..ExamLogSpec::default()
        };
        let log = generate_exam_log(&spec, &Calendar::default(), 3);
        assert_eq!(log.len(), 1037);
        assert_eq!(log.iter().filter(|r| r.tat_minutes() < 0.0).count(), 37);
        assert_eq!(log.iter().filter(|r| r.tat_minutes() >= 0.0 && r.diagnosis.is_diseased()).count(), 150);
    }

    #[test]
    fn generators_are_deterministic() {
        let cal = Calendar::default();
        let spec = ExamLogSpec { n_days: 3, ..ExamLogSpec::default() };
        assert_eq!(generate_exam_log(&spec, &cal, 9), generate_exam_log(&spec, &cal, 9));
        let cspec = ClosureLogSpec { n_days: 3, ..ClosureLogSpec::default() };
        assert_eq!(generate_closure_log(&cspec, 9), generate_closure_log(&cspec, 9));
    }

    #[test]
    fn closure_padding_hits_total() {
        let spec = ClosureLogSpec { n_days: 2, total_closures: Some(5000), ..ClosureLogSpec::default() };
        assert_eq!(generate_closure_log(&spec, 1).len(), 5000);
    }
}
