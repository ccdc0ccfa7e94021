//! The parameter file written by `estimate` and read by the prediction
//! commands.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use triage_core::estimation::readtime::ReadTimeExclusions;
use triage_core::{DeviceOperatingPoint, Error, Result, WorkflowParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowSection {
    /// Diseased exams over every exam in the reading queue.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prevalence: Option<f64>,
    /// Diseased exams over target exams only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_prevalence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub read_time_diseased: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub read_time_nondiseased_effective: Option<f64>,
    pub tpf: f64,
    pub specificity: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ncct_to_npp_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fpf_adjusted: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterarrivalSection {
    /// Mean of the daily fitted means.
    pub mean: f64,
    pub sigma: f64,
    pub range68_low: f64,
    pub range68_high: f64,
    pub n_days: usize,
    pub r2_mean: f64,
    pub r2_sd: f64,
    /// Mean of the daily sample means.
    pub mle_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadTimeSection {
    pub n_readers: usize,
    pub average: f64,
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r2_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r2_sd: Option<f64>,
    pub n_gaps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub exam_rows: usize,
    pub exam_rows_malformed: usize,
    pub exam_rows_negative_tat: usize,
    /// Retained target exams.
    pub target_exams: usize,
    pub diseased_exams: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closures: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closures_malformed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closures_duplicate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closures_diseased: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closures_nondiseased_target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closures_out_of_scope: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFile {
    pub schema_version: u32,
    pub workflow: WorkflowSection,
    /// Keyed by cohort name.
    #[serde(default)]
    pub interarrival: BTreeMap<String, InterarrivalSection>,
    /// Keyed by exam class name.
    #[serde(default)]
    pub read_times: BTreeMap<String, ReadTimeSection>,
    #[serde(default)]
    pub counts: Counts,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub read_time_exclusions: Option<ReadTimeExclusions>,
    /// Fields that could not be estimated from the supplied logs.
    #[serde(default)]
    pub missing_fields: Vec<String>,
}

impl ParameterFile {
    /// Inputs of the published work-hour and off-hour predictions.
    pub fn published() -> Self {
        let cohort = |mean: f64| InterarrivalSection {
            mean,
            sigma: 0.0,
            range68_low: mean,
            range68_high: mean,
            n_days: 0,
            r2_mean: 0.0,
            r2_sd: 0.0,
            mle_mean: mean,
        };
        Self {
            schema_version: SCHEMA_VERSION,
            workflow: WorkflowSection {
                prevalence: Some(0.00319),
                target_prevalence: None,
                read_time_diseased: Some(12.1),
                read_time_nondiseased_effective: Some(6.15),
                tpf: 0.906,
                specificity: 0.899,
                ncct_to_npp_ratio: Some(48.0),
                fpf_adjusted: Some(0.00206),
            },
            interarrival: BTreeMap::from([("work_hour".into(), cohort(2.17)), ("off_hour".into(), cohort(3.19))]),
            read_times: BTreeMap::new(),
            counts: Counts::default(),
            read_time_exclusions: None,
            missing_fields: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: ParameterFile = toml::from_str(text).map_err(|e| Error::Format(format!("parameter file: {e}")))?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "parameter file schema {} is not the supported {SCHEMA_VERSION}",
                p.schema_version
            )));
        }
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameter file serializes")
    }

    /// The published inputs when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::published()),
            Some(p) => Self::from_toml(&std::fs::read_to_string(p)?),
        }
    }

    fn require(&self, name: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::Parameter(format!("parameter file has no {name}")))
    }

    pub fn ncct_to_npp_ratio(&self) -> Result<f64> {
        self.require("workflow.ncct_to_npp_ratio", self.workflow.ncct_to_npp_ratio)
    }

    pub fn device(&self) -> Result<DeviceOperatingPoint> {
        let fpf = self.require("workflow.fpf_adjusted", self.workflow.fpf_adjusted)?;
        DeviceOperatingPoint::new(self.workflow.tpf, fpf)
    }

    pub fn workflow(&self, mean_interarrival: f64, n_radiologists: u32) -> Result<WorkflowParams> {
        let w = &self.workflow;
        WorkflowParams::new(
            self.require("workflow.prevalence", w.prevalence)?,
            mean_interarrival,
            n_radiologists,
            self.require("workflow.read_time_diseased", w.read_time_diseased)?,
            self.require("workflow.read_time_nondiseased_effective", w.read_time_nondiseased_effective)?,
            self.device()?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = ParameterFile::published();
        assert_eq!(ParameterFile::from_toml(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn missing_field_is_named() {
        let mut p = ParameterFile::published();
        p.workflow.prevalence = None;
        let p = ParameterFile::from_toml(&p.to_toml()).unwrap();
        let err = p.workflow(2.17, 3).unwrap_err().to_string();
        assert!(err.contains("workflow.prevalence"), "{err}");
    }

    #[test]
    fn schema_version_is_checked() {
        let text = ParameterFile::published().to_toml().replace("schema_version = 1", "schema_version = 9");
        assert_eq!(ParameterFile::from_toml(&text).unwrap_err().exit_code(), 2);
    }
}
