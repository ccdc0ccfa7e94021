//! Named synthetic corpora for demos and end-to-end tests.

use std::path::Path;

use chrono::{Duration, NaiveDate};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use triage_core::estimation::logs::{write_closure_log, write_exam_log};
use triage_core::synthetic::{generate_closure_log, generate_exam_log, ClosureLogSpec, ExamLogSpec};
use triage_core::Result;

use crate::config::Config;
use crate::output::Meta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Two months of logs for checking parameter recovery.
    Recovery,
    /// Row counts of the original study corpus.
    StudyScale,
    /// Four months with a 20-minute TAT drop for diseased exams halfway.
    PrePost,
}

pub const STUDY_EXAM_ROWS: usize = 16_579;
pub const STUDY_NEGATIVE_TAT_ROWS: usize = 5_327;
pub const STUDY_POSITIVE_EXAMS: usize = 1_683;
pub const STUDY_CLOSURES: usize = 527_234;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 7).expect("valid date")
}

impl Preset {
    pub fn exam_spec(self) -> ExamLogSpec {
        match self {
            Preset::Recovery => ExamLogSpec { n_days: 60, daily_relative_sd: 0.05, ..ExamLogSpec::default() },
            Preset::StudyScale => ExamLogSpec {
                n_days: 30,
                max_rows: Some(STUDY_EXAM_ROWS - STUDY_NEGATIVE_TAT_ROWS),
                n_positive: Some(STUDY_POSITIVE_EXAMS),
                negative_tat_rows: STUDY_NEGATIVE_TAT_ROWS,
                ..ExamLogSpec::default()
            },
            Preset::PrePost => ExamLogSpec {
                n_days: 120,
                positive_fraction: 0.15,
                ai_deployed_on: Some(start() + Duration::days(60)),
                positive_tat_shift: 20.0,
                ..ExamLogSpec::default()
            },
        }
    }

    pub fn closure_spec(self) -> Option<ClosureLogSpec> {
        match self {
            Preset::Recovery => {
                Some(ClosureLogSpec { n_days: 60, class_mix: [0.1, 0.2, 0.7], ..ClosureLogSpec::default() })
            }
            Preset::StudyScale => {
                let n_npp = (STUDY_EXAM_ROWS - STUDY_NEGATIVE_TAT_ROWS - STUDY_POSITIVE_EXAMS) as f64;
                let n_ncct = (STUDY_CLOSURES - STUDY_EXAM_ROWS + STUDY_NEGATIVE_TAT_ROWS) as f64;
                Some(ClosureLogSpec {
                    n_days: 30,
                    class_mix: [STUDY_POSITIVE_EXAMS as f64, n_npp, n_ncct],
                    total_closures: Some(STUDY_CLOSURES),
                    ..ClosureLogSpec::default()
                })
            }
            Preset::PrePost => None,
        }
    }

    /// Config matching the preset's calendar and deployment date.
    pub fn config(self) -> Config {
        let mut cfg = Config::default();
        cfg.periods.ai_deployed_on = self.exam_spec().ai_deployed_on;
        cfg
    }
}

/// Write `exam_log.csv`, `closure_log.csv` when the preset has one, and
/// `synth.meta.json` describing the generator settings.
pub fn write_corpus(preset: Preset, seed: u64, cfg: &Config, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let exam_spec = preset.exam_spec();
    let exams = generate_exam_log(&exam_spec, &cfg.calendar()?, seed);
    write_exam_log(std::fs::File::create(dir.join("exam_log.csv"))?, &exams, cfg.delimiter())?;
    let closure_spec = preset.closure_spec();
    if let Some(spec) = &closure_spec {
        let closures = generate_closure_log(spec, seed);
        write_closure_log(std::fs::File::create(dir.join("closure_log.csv"))?, &closures, cfg.delimiter())?;
    }
    let meta = Meta::new("synth")
        .with("seed", seed)
        .with("preset", serde_json::to_value(preset).expect("serializable"))
        .with("exam_log", serde_json::to_value(&exam_spec).expect("serializable"))
        .with("closure_log", serde_json::to_value(&closure_spec).expect("serializable"));
    std::fs::write(dir.join("synth.meta.json"), meta.to_json())?;
    Ok(())
}
