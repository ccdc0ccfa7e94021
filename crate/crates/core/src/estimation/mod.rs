//! Workflow parameter estimation from exam-report and case-closure logs.

pub mod calendar;
pub mod fit;
pub mod logs;
pub mod readtime;

pub use calendar::{assign_cohort, Calendar};
pub use fit::{
    daily_interarrival_fits, daily_interarrival_fits_from_times, fit_exponential_histogram, summarize_interarrival,
    CurveFit, DailyFits, ExponentialFit, FitOptions, NormalSummary,
};
pub use logs::{
    ingest_closure_log, ingest_exam_log, ClosureIngest, ClosureRecord, Diagnosis, ExamIngest, ExamRecord, Location,
    ReaderRole, RowError, Timestamp,
};
pub use readtime::{estimate_read_times, ClassReadTime, ReadTimeOptions, ReadTimeSummary};

use crate::error::{Error, Result};
use crate::model::check_fraction;

/// Count-weighted mean read time of the two non-diseased exam types.
pub fn effective_nondiseased_read_time(mean_npp: f64, mean_ncct: f64, n_npp: u64, n_ncct: u64) -> Result<f64> {
    if n_npp == 0 && n_ncct == 0 {
        return Err(Error::param("effective read time needs at least one non-diseased exam"));
    }
    let (a, b) = (n_npp as f64, n_ncct as f64);
    // Skip a zero-weight term so a missing mean cannot poison the result.
    let term = |n: f64, m: f64| if n == 0.0 { 0.0 } else { n * m };
    Ok((term(a, mean_npp) + term(b, mean_ncct)) / (a + b))
}

/// False-positive fraction rescaled for exams the device never sees:
/// `(1 − specificity) / (1 + n_ncct / n_npp)`.
pub fn adjusted_fpf(specificity: f64, n_ncct: u64, n_npp: u64) -> Result<f64> {
    check_fraction("specificity", specificity)?;
    if n_npp == 0 {
        return Err(Error::param("adjusted FPF needs at least one non-diseased target exam"));
    }
    Ok(adjusted_fpf_from_ratio(specificity, n_ncct as f64 / n_npp as f64))
}

/// As [`adjusted_fpf`], given the out-of-scope to non-diseased ratio directly.
pub fn adjusted_fpf_from_ratio(specificity: f64, ncct_to_npp: f64) -> f64 {
    (1.0 - specificity) / (1.0 + ncct_to_npp)
}

/// Fraction of all queue exams that are diseased.
pub fn queue_prevalence(n_diseased: u64, n_queue_total: u64) -> Result<f64> {
    if n_queue_total == 0 {
        return Err(Error::param("queue prevalence needs a nonzero exam count"));
    }
    if n_diseased > n_queue_total {
        return Err(Error::param(format!("{n_diseased} diseased exceeds {n_queue_total} total")));
    }
    Ok(n_diseased as f64 / n_queue_total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_read_time() {
        assert_eq!(effective_nondiseased_read_time(11.4, 6.1, 100, 0).unwrap(), 11.4);
        assert_eq!(effective_nondiseased_read_time(10.0, 6.0, 50, 50).unwrap(), 8.0);
        assert!(effective_nondiseased_read_time(10.0, 6.0, 0, 0).is_err());
        assert_eq!(effective_nondiseased_read_time(f64::NAN, 6.0, 0, 3).unwrap(), 6.0);
    }

    #[test]
    fn effective_read_time_with_corpus_counts() {
        // 11,252 − 1,683 non-diseased target exams and 527,234 − 11,252
        // out-of-scope exams: (9569·11.4 + 515982·6.1) / 525551.
        let eff = effective_nondiseased_read_time(11.4, 6.1, 9_569, 515_982).unwrap();
        assert!((eff - 6.196_497).abs() < 1e-5, "{eff}");
        // The published 6.15 lies inside the envelope spanned by the
        // one-decimal rounding of the two input means.
        let lo = effective_nondiseased_read_time(11.35, 6.05, 9_569, 515_982).unwrap();
        let hi = effective_nondiseased_read_time(11.45, 6.15, 9_569, 515_982).unwrap();
        assert!(lo <= 6.15 && 6.15 <= hi, "[{lo}, {hi}]");
    }

    #[test]
    fn adjusted_fpf_values() {
        assert!((adjusted_fpf(0.899, 0, 10).unwrap() - 0.101).abs() < 1e-15);
        assert_eq!(adjusted_fpf(1.0, 40, 10).unwrap(), 0.0);
        assert!((adjusted_fpf_from_ratio(0.899, 48.0) - 0.00206).abs() < 5e-6);
        assert!(adjusted_fpf(0.9, 1, 0).is_err());
        assert!(adjusted_fpf(1.2, 1, 1).is_err());
    }

    #[test]
    fn prevalence_values() {
        assert!((queue_prevalence(1683, 527_234).unwrap() - 0.00319).abs() < 5e-6);
        assert!((queue_prevalence(1683, 11_252).unwrap() - 0.1496).abs() < 5e-5);
        assert_eq!(queue_prevalence(0, 100).unwrap(), 0.0);
        assert!(queue_prevalence(1, 0).is_err());
        assert!(queue_prevalence(5, 4).is_err());
    }
}
