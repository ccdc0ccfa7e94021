use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::logs::Timestamp;
use crate::model::Cohort;

/// Work-hour window and holiday list. Times are compared in each
/// timestamp's own local offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub holidays: BTreeSet<NaiveDate>,
    pub work_start: NaiveTime,
    pub work_end: NaiveTime,
}

impl Default for Calendar {
    fn default() -> Self {
        Self {
            holidays: BTreeSet::new(),
            work_start: NaiveTime::from_hms_opt(8, 0, 0).expect("valid time"),
            work_end: NaiveTime::from_hms_opt(17, 0, 0).expect("valid time"),
        }
    }
}

impl Calendar {
    pub fn new(
        holidays: impl IntoIterator<Item = NaiveDate>,
        work_start: NaiveTime,
        work_end: NaiveTime,
    ) -> Result<Self> {
        if work_start >= work_end {
            return Err(Error::param(format!("work window {work_start}..{work_end} is empty")));
        }
        Ok(Self { holidays: holidays.into_iter().collect(), work_start, work_end })
    }

    pub fn is_workday(&self, day: NaiveDate) -> bool {
        !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) && !self.holidays.contains(&day)
    }

    /// Contiguous cohort block a timestamp falls in: its local date plus an
    /// index (before, during, after the work window; 0 on non-workdays).
    pub fn block(&self, t: &Timestamp) -> (NaiveDate, Cohort, u8) {
        let local = t.naive_local();
        let (day, time) = (local.date(), local.time());
        if !self.is_workday(day) || time < self.work_start {
            (day, Cohort::OffHour, 0)
        } else if time < self.work_end {
            (day, Cohort::WorkHour, 1)
        } else {
            (day, Cohort::OffHour, 2)
        }
    }
}

/// Work hours are `[work_start, work_end)` on weekdays that are not holidays.
pub fn assign_cohort(t: &Timestamp, calendar: &Calendar) -> Cohort {
    calendar.block(t).1
}
