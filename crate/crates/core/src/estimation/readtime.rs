//! Read-time estimation from inter-case-closure gaps.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::estimation::fit::fit_exponential_histogram;
use crate::estimation::logs::{minutes_between, ClosureRecord, ReaderRole};
use crate::model::ExamClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadTimeOptions {
    /// Gaps longer than this (minutes) are not reads.
    pub max_gap: f64,
    /// Reader-days with fewer closures are dropped whole.
    pub min_closures_per_day: usize,
    /// Minimum gaps of a class before a reader gets a per-class estimate.
    pub min_exams_per_class: usize,
    pub bin_width: f64,
    pub weighted: bool,
}

impl Default for ReadTimeOptions {
    fn default() -> Self {
        Self { max_gap: 60.0, min_closures_per_day: 30, min_exams_per_class: 10, bin_width: 2.0, weighted: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderClassReadTime {
    pub reader_id: String,
    pub exam_class: ExamClass,
    /// Decay constant of the fitted curve; the sample mean when the binned
    /// density is flat.
    pub mean: f64,
    pub mle_mean: f64,
    pub n: usize,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReadTime {
    pub n_readers: usize,
    /// Average of the per-reader mean read times.
    pub average: f64,
    pub min: f64,
    pub max: f64,
    pub r2_mean: Option<f64>,
    pub r2_sd: Option<f64>,
    pub n_gaps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadTimeExclusions {
    pub closures_not_resident: usize,
    pub reader_days_dropped: usize,
    pub closures_in_dropped_days: usize,
    pub gaps_over_limit: usize,
    pub reader_classes_below_minimum: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadTimeSummary {
    pub per_reader: Vec<ReaderClassReadTime>,
    pub per_class: BTreeMap<ExamClass, ClassReadTime>,
    pub exclusions: ReadTimeExclusions,
}

impl ReadTimeSummary {
    pub fn class(&self, class: ExamClass) -> Option<&ClassReadTime> {
        self.per_class.get(&class)
    }
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(m), sd)
}

/// Estimate per-class read times of residents.
///
/// Closures are grouped by reader and local day. Days with too few closures
/// are dropped, gaps above `max_gap` are discarded, and each remaining gap is
/// attributed to the class of the exam closed at its end. Input order does
/// not matter.
pub fn estimate_read_times(
    closures: &[ClosureRecord],
    roles: &HashMap<String, ReaderRole>,
    opts: &ReadTimeOptions,
) -> ReadTimeSummary {
    let mut excl = ReadTimeExclusions::default();
    let mut by_reader_day: BTreeMap<(&str, NaiveDate), Vec<&ClosureRecord>> = BTreeMap::new();
    for c in closures {
        if roles.get(&c.reader_id) != Some(&ReaderRole::Resident) {
            excl.closures_not_resident += 1;
            continue;
        }
        by_reader_day.entry((c.reader_id.as_str(), c.closed_at.naive_local().date())).or_default().push(c);
    }

    let mut gaps: BTreeMap<(&str, ExamClass), Vec<f64>> = BTreeMap::new();
    for (_, mut day) in by_reader_day {
        if day.len() < opts.min_closures_per_day {
            excl.reader_days_dropped += 1;
            excl.closures_in_dropped_days += day.len();
            continue;
        }
        day.sort_by(|a, b| a.closed_at.cmp(&b.closed_at).then(a.exam_class.cmp(&b.exam_class)));
        for w in day.windows(2) {
            let gap = minutes_between(&w[0].closed_at, &w[1].closed_at);
            if gap > opts.max_gap {
                excl.gaps_over_limit += 1;
                continue;
            }
            gaps.entry((w[1].reader_id.as_str(), w[1].exam_class)).or_default().push(gap);
        }
    }

    let mut per_reader = Vec::new();
    for ((reader, class), g) in gaps {
        if g.len() < opts.min_exams_per_class {
            excl.reader_classes_below_minimum += 1;
            continue;
        }
        let fit = fit_exponential_histogram(&g, opts.bin_width, opts.weighted).expect("nonempty gaps");
        per_reader.push(ReaderClassReadTime {
            reader_id: reader.to_string(),
            exam_class: class,
            // The fitted decay is unaffected by the max_gap truncation.
            mean: if fit.r2.is_some() { fit.mean } else { fit.mle_mean },
            mle_mean: fit.mle_mean,
            n: g.len(),
            r2: fit.r2,
        });
    }

    let mut per_class = BTreeMap::new();
    for class in ExamClass::ALL {
        let rows: Vec<&ReaderClassReadTime> = per_reader.iter().filter(|r| r.exam_class == class).collect();
        if rows.is_empty() {
            continue;
        }
        let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
        let r2s: Vec<f64> = rows.iter().filter_map(|r| r.r2).collect();
        let (r2_mean, r2_sd) = mean_sd(&r2s);
        per_class.insert(
            class,
            ClassReadTime {
                n_readers: rows.len(),
                average: means.iter().sum::<f64>() / means.len() as f64,
                min: means.iter().copied().fold(f64::INFINITY, f64::min),
                max: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                r2_mean,
                r2_sd,
                n_gaps: rows.iter().map(|r| r.n).sum(),
            },
        );
    }
    log::info!(
        "read times: {} non-resident closures, {} reader-days dropped, {} gaps over {} min",
        excl.closures_not_resident,
        excl.reader_days_dropped,
        excl.gaps_over_limit,
        opts.max_gap
    );
    ReadTimeSummary { per_reader, per_class, exclusions: excl }
}
