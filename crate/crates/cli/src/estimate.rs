//! Workflow parameters from an exam log and an optional closure log.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use triage_core::estimation::{
    adjusted_fpf, daily_interarrival_fits, effective_nondiseased_read_time, estimate_read_times, ingest_closure_log,
    ingest_exam_log, queue_prevalence, DailyFits, ExamRecord, ReaderRole,
};
use triage_core::{Cohort, Error, ExamClass, Result};

use crate::config::Config;
use crate::output::{fmt, read_file, Table};
use crate::params::{Counts, InterarrivalSection, ParameterFile, ReadTimeSection, WorkflowSection, SCHEMA_VERSION};

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub params: ParameterFile,
    pub fits: DailyFits,
}

impl EstimateReport {
    /// One row per fitted day-cohort.
    pub fn fits_table(&self) -> Table {
        let mut t = Table::new(&["day", "cohort", "n_gaps", "fit_mean", "r2", "mle_mean"]);
        for f in &self.fits.fits {
            t.push(vec![
                f.day.to_string(),
                f.cohort.as_str().into(),
                f.n.to_string(),
                fmt(f.mean),
                fmt(f.r2),
                fmt(f.mle_mean),
            ]);
        }
        t
    }
}

fn stage(name: &str, e: Error) -> Error {
    match e {
        Error::InsufficientData(m) => Error::InsufficientData(format!("{name}: {m}")),
        Error::Format(m) => Error::Format(format!("{name}: {m}")),
        other => other,
    }
}

fn interarrival(fits: &DailyFits, cohort: Cohort) -> Result<InterarrivalSection> {
    let days: Vec<_> = fits.for_cohort(cohort).collect();
    let means: Vec<f64> = days.iter().map(|f| f.mean).collect();
    let s = triage_core::estimation::NormalSummary::from_values(&means).map_err(|_| {
        Error::InsufficientData(format!("{} cohort has {} fitted days, need 2", cohort.as_str(), days.len()))
    })?;
    let r2: Vec<f64> = days.iter().map(|f| f.r2).collect();
    let r2s = triage_core::estimation::NormalSummary::from_values(&r2)?;
    let mle = days.iter().map(|f| f.mle_mean).sum::<f64>() / days.len() as f64;
    Ok(InterarrivalSection {
        mean: s.mean,
        sigma: s.sigma,
        range68_low: s.range68.0,
        range68_high: s.range68.1,
        n_days: s.n,
        r2_mean: r2s.mean,
        r2_sd: r2s.sigma,
        mle_mean: mle,
    })
}

/// Run the whole estimation pipeline on in-memory logs.
pub fn estimate_from_readers<E: std::io::Read, C: std::io::Read>(
    exam_log: E,
    closure_log: Option<C>,
    cfg: &Config,
) -> Result<EstimateReport> {
    let calendar = cfg.calendar()?;
    let exams = ingest_exam_log(exam_log, cfg.delimiter()).map_err(|e| stage("exam log", e))?;
    if exams.records.is_empty() {
        return Err(Error::InsufficientData("exam log: no rows with nonnegative turnaround".into()));
    }
    let n_diseased = exams.records.iter().filter(|r| r.diagnosis.is_diseased()).count();
    let n_target = exams.records.len();

    let fits = daily_interarrival_fits(&exams.records, &calendar, &cfg.fit_options());
    let mut interarrival_map = BTreeMap::new();
    for cohort in [Cohort::WorkHour, Cohort::OffHour] {
        let s = interarrival(&fits, cohort).map_err(|e| stage("inter-arrival fits", e))?;
        interarrival_map.insert(cohort.as_str().to_string(), s);
    }

    let specificity = cfg.device.specificity;
    let mut workflow = WorkflowSection {
        prevalence: None,
        target_prevalence: Some(queue_prevalence(n_diseased as u64, n_target as u64)?),
        read_time_diseased: None,
        read_time_nondiseased_effective: None,
        tpf: cfg.device.sensitivity,
        specificity,
        ncct_to_npp_ratio: None,
        fpf_adjusted: None,
    };
    let mut counts = Counts {
        exam_rows: exams.n_rows,
        exam_rows_malformed: exams.row_errors.len(),
        exam_rows_negative_tat: exams.n_excluded_negative,
        target_exams: n_target,
        diseased_exams: n_diseased,
        ..Counts::default()
    };
    let mut read_times = BTreeMap::new();
    let mut exclusions = None;
    let mut missing = Vec::new();

    match closure_log {
        None => {
            log::warn!("no closure log: prevalence, read times and adjusted FPF are left out");
            missing.extend(
                [
                    "workflow.prevalence",
                    "workflow.read_time_diseased",
                    "workflow.read_time_nondiseased_effective",
                    "workflow.ncct_to_npp_ratio",
                    "workflow.fpf_adjusted",
                    "read_times",
                ]
                .map(String::from),
            );
        }
        Some(r) => {
            let closures = ingest_closure_log(r, cfg.delimiter()).map_err(|e| stage("closure log", e))?;
            let n_closures = closures.records.len();
            let n_of = |c: ExamClass| closures.records.iter().filter(|r| r.exam_class == c).count();
            let (n_pos, n_npp, n_ncct) =
                (n_of(ExamClass::DiseasedTarget), n_of(ExamClass::NonDiseasedTarget), n_of(ExamClass::OutOfScope));
            counts.closures = Some(n_closures);
            counts.closures_malformed = Some(closures.row_errors.len());
            counts.closures_duplicate = Some(closures.n_duplicates);
            counts.closures_diseased = Some(n_pos);
            counts.closures_nondiseased_target = Some(n_npp);
            counts.closures_out_of_scope = Some(n_ncct);
            if n_closures < n_diseased {
                return Err(Error::InsufficientData(format!(
                    "closure log: {n_closures} closures cannot hold {n_diseased} diseased exams"
                )));
            }
            workflow.prevalence = Some(queue_prevalence(n_diseased as u64, n_closures as u64)?);

            let roles = reader_roles(&exams.records);
            let summary = estimate_read_times(&closures.records, &roles, &cfg.read_time_options());
            for (class, c) in &summary.per_class {
                read_times.insert(
                    class.as_str().to_string(),
                    ReadTimeSection {
                        n_readers: c.n_readers,
                        average: c.average,
                        min: c.min,
                        max: c.max,
                        r2_mean: c.r2_mean,
                        r2_sd: c.r2_sd,
                        n_gaps: c.n_gaps,
                    },
                );
            }
            exclusions = Some(summary.exclusions);
            let avg = |c: ExamClass| summary.class(c).map(|s| s.average);
            workflow.read_time_diseased = avg(ExamClass::DiseasedTarget);
            if workflow.read_time_diseased.is_none() {
                missing.push("workflow.read_time_diseased".into());
            }
            let eff = match (avg(ExamClass::NonDiseasedTarget), avg(ExamClass::OutOfScope)) {
                (Some(a), Some(b)) => Some(effective_nondiseased_read_time(a, b, n_npp as u64, n_ncct as u64)?),
                (Some(a), None) if n_ncct == 0 => Some(a),
                (None, Some(b)) if n_npp == 0 => Some(b),
                _ => None,
            };
            workflow.read_time_nondiseased_effective = eff;
            if eff.is_none() {
                missing.push("workflow.read_time_nondiseased_effective".into());
            }
            if n_npp > 0 {
                workflow.ncct_to_npp_ratio = Some(n_ncct as f64 / n_npp as f64);
                workflow.fpf_adjusted = Some(adjusted_fpf(specificity, n_ncct as u64, n_npp as u64)?);
            } else {
                missing.extend(["workflow.ncct_to_npp_ratio", "workflow.fpf_adjusted"].map(String::from));
            }
        }
    }

    Ok(EstimateReport {
        params: ParameterFile {
            schema_version: SCHEMA_VERSION,
            workflow,
            interarrival: interarrival_map,
            read_times,
            counts,
            read_time_exclusions: exclusions,
            missing_fields: missing,
        },
        fits,
    })
}

/// Reader roles as recorded in the exam log; the first role seen wins.
pub fn reader_roles(records: &[ExamRecord]) -> HashMap<String, ReaderRole> {
    let mut roles = HashMap::new();
    for r in records {
        roles.entry(r.reader_id.clone()).or_insert(r.reader_role);
    }
    roles
}

pub fn estimate(exam_log: &Path, closure_log: Option<&Path>, cfg: &Config) -> Result<EstimateReport> {
    let exams = read_file(exam_log, "exam log")?;
    let closures = closure_log.map(|p| read_file(p, "closure log")).transpose()?;
    estimate_from_readers(std::io::BufReader::new(exams), closures.map(std::io::BufReader::new), cfg)
}
