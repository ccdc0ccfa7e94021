//! Observed turnaround of diseased exams before and after device deployment.

use chrono::NaiveDate;
use triage_core::estimation::{assign_cohort, Calendar, ExamRecord};
use triage_core::stats::{tat_summary, time_savings_test, SavingsTest, TatSummary};
use triage_core::{Cohort, Error, Result};

use crate::output::{fmt, Meta, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct CohortComparison {
    pub cohort: Cohort,
    pub pre: TatSummary,
    pub post: TatSummary,
    pub test: SavingsTest,
}

pub const COMPARE_COLUMNS: [&str; 19] = [
    "cohort",
    "pre_n",
    "pre_mean",
    "pre_ci_low",
    "pre_ci_high",
    "pre_p2_5",
    "pre_median",
    "pre_p97_5",
    "post_n",
    "post_mean",
    "post_ci_low",
    "post_ci_high",
    "post_p2_5",
    "post_median",
    "post_p97_5",
    "diff",
    "diff_ci_low",
    "diff_ci_high",
    "p_one_sided",
];

/// Split diseased exams by cohort and by scan date against `deployed_on`.
pub fn compare(records: &[ExamRecord], calendar: &Calendar, deployed_on: NaiveDate) -> Result<Vec<CohortComparison>> {
    let mut out = Vec::new();
    for cohort in [Cohort::WorkHour, Cohort::OffHour] {
        let (mut pre, mut post) = (Vec::new(), Vec::new());
        for r in records.iter().filter(|r| r.diagnosis.is_diseased()) {
            if assign_cohort(&r.scan_completed_at, calendar) != cohort {
                continue;
            }
            if r.scan_completed_at.naive_local().date() < deployed_on {
                pre.push(r.tat_minutes());
            } else {
                post.push(r.tat_minutes());
            }
        }
        let named = |period: &str, e: Error| match e {
            Error::InsufficientData(m) => {
                Error::InsufficientData(format!("{} cohort, {period} period: {m}", cohort.as_str()))
            }
            other => other,
        };
        let pre_s = tat_summary(&pre).map_err(|e| named("pre", e))?;
        let post_s = tat_summary(&post).map_err(|e| named("post", e))?;
        let test = time_savings_test(&pre, &post)?;
        out.push(CohortComparison { cohort, pre: pre_s, post: post_s, test });
    }
    Ok(out)
}

pub fn compare_table(rows: &[CohortComparison]) -> Table {
    let mut t = Table::new(&COMPARE_COLUMNS);
    let summary = |s: &TatSummary| {
        vec![
            s.n.to_string(),
            fmt(s.mean),
            fmt(s.ci95.0),
            fmt(s.ci95.1),
            fmt(s.percentiles.0),
            fmt(s.percentiles.1),
            fmt(s.percentiles.2),
        ]
    };
    for r in rows {
        let mut row = vec![r.cohort.as_str().to_string()];
        row.extend(summary(&r.pre));
        row.extend(summary(&r.post));
        row.extend([fmt(r.test.diff_of_means), fmt(r.test.ci95.0), fmt(r.test.ci95.1), fmt(r.test.p_one_sided)]);
        t.push(row);
    }
    t
}

pub fn compare_meta(deployed_on: NaiveDate) -> Meta {
    Meta::new("compare").with("ai_deployed_on", deployed_on.to_string())
}
