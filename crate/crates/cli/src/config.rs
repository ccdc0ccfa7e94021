//! Run configuration read from a TOML file. Every key is optional.

use std::path::Path;

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use triage_core::estimation::{Calendar, FitOptions, ReadTimeOptions};
use triage_core::{Error, Preemption, Result, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalendarConfig {
    pub holidays: Vec<NaiveDate>,
    /// `HH:MM` or `HH:MM:SS`, local to each timestamp.
    pub work_start: String,
    pub work_end: String,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        Self { holidays: Vec::new(), work_start: "08:00".into(), work_end: "17:00".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodConfig {
    /// First day of the post-deployment period.
    pub ai_deployed_on: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub interarrival_bin_width: f64,
    pub read_time_bin_width: f64,
    pub min_gaps_per_day: usize,
    pub max_closure_gap: f64,
    pub min_closures_per_day: usize,
    pub min_exams_per_reader_class: usize,
    pub weighted_fit: bool,
    pub delimiter: char,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        let rt = ReadTimeOptions::default();
        Self {
            interarrival_bin_width: fit.bin_width,
            read_time_bin_width: rt.bin_width,
            min_gaps_per_day: fit.min_gaps,
            max_closure_gap: rt.max_gap,
            min_closures_per_day: rt.min_closures_per_day,
            min_exams_per_reader_class: rt.min_exams_per_class,
            weighted_fit: false,
            delimiter: ',',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub sensitivity: f64,
    pub specificity: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self { sensitivity: 0.906, specificity: 0.899 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RocConfig {
    /// Bi-normal slope `b`.
    pub slope: f64,
}

impl Default for RocConfig {
    fn default() -> Self {
        Self { slope: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub priority: Preemption,
    /// Leading exams of each trial left out of the statistics.
    pub burn_in: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { priority: Preemption::PreemptiveResume, burn_in: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub calendar: CalendarConfig,
    pub periods: PeriodConfig,
    pub estimation: EstimationConfig,
    pub device: DeviceConfig,
    pub roc: RocConfig,
    pub simulation: SimulationConfig,
}

fn parse_time(field: &str, s: &str) -> Result<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|_| Error::Format(format!("{field}: expected HH:MM, got {s:?}")))
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.calendar()?;
        if !cfg.estimation.delimiter.is_ascii() {
            return Err(Error::Format("config: delimiter must be a single ASCII character".into()));
        }
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::from_toml(&std::fs::read_to_string(p)?),
        }
    }

    pub fn calendar(&self) -> Result<Calendar> {
        Calendar::new(
            self.calendar.holidays.iter().copied(),
            parse_time("calendar.work_start", &self.calendar.work_start)?,
            parse_time("calendar.work_end", &self.calendar.work_end)?,
        )
    }

    pub fn delimiter(&self) -> u8 {
        self.estimation.delimiter as u8
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            bin_width: self.estimation.interarrival_bin_width,
            min_gaps: self.estimation.min_gaps_per_day,
            weighted: self.estimation.weighted_fit,
        }
    }

    pub fn read_time_options(&self) -> ReadTimeOptions {
        ReadTimeOptions {
            max_gap: self.estimation.max_closure_gap,
            min_closures_per_day: self.estimation.min_closures_per_day,
            min_exams_per_class: self.estimation.min_exams_per_reader_class,
            bin_width: self.estimation.read_time_bin_width,
            weighted: self.estimation.weighted_fit,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig { preemption: self.simulation.priority, burn_in: self.simulation.burn_in, ..SimConfig::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = Config::from_toml(
            r#"
            [calendar]
            holidays = ["2019-12-25"]
            work_start = "07:30"
            [periods]
            ai_deployed_on = "2019-06-01"
            [simulation]
            priority = "non_preemptive"
            "#,
        )
        .unwrap();
        let cal = cfg.calendar().unwrap();
        assert_eq!(cal.work_start, NaiveTime::from_hms_opt(7, 30, 0).unwrap());
        assert!(!cal.is_workday(NaiveDate::from_ymd_opt(2019, 12, 25).unwrap()));
        assert_eq!(cfg.periods.ai_deployed_on, NaiveDate::from_ymd_opt(2019, 6, 1));
        assert_eq!(cfg.sim_config().preemption, Preemption::NonPreemptive);
    }

    #[test]
    fn bad_documents_are_format_errors() {
        for text in ["[calendar]\nwork_start = \"8am\"", "bogus = 1", "[device]\nsensitivity = \"high\""] {
            assert_eq!(Config::from_toml(text).unwrap_err().exit_code(), 2, "{text}");
        }
    }
}
