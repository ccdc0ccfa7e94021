//! Exam-report and case-closure log records and their ingestion.

use std::io::Read;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExamClass;

pub type Timestamp = DateTime<FixedOffset>;

pub const EXAM_LOG_COLUMNS: [&str; 7] =
    ["exam_id", "scan_completed_at", "report_signed_at", "reader_id", "reader_role", "diagnosis", "location"];

pub const CLOSURE_LOG_COLUMNS: [&str; 3] = ["reader_id", "closed_at", "exam_class"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReaderRole {
    Resident,
    Staff,
    Fellow,
    EmergencyPhysician,
}

impl ReaderRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ReaderRole::Resident => "resident",
            ReaderRole::Staff => "staff",
            ReaderRole::Fellow => "fellow",
            ReaderRole::EmergencyPhysician => "emergency_physician",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalize(s).as_str() {
            "resident" => Some(ReaderRole::Resident),
            "staff" => Some(ReaderRole::Staff),
            "fellow" => Some(ReaderRole::Fellow),
            "emergency_physician" => Some(ReaderRole::EmergencyPhysician),
            _ => None,
        }
    }
}

/// Final diagnosis pick-list value. Only `Positive` counts as diseased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnosis {
    Positive,
    Negative,
    Indeterminate,
}

impl Diagnosis {
    pub fn as_str(self) -> &'static str {
        match self {
            Diagnosis::Positive => "positive",
            Diagnosis::Negative => "negative",
            Diagnosis::Indeterminate => "indeterminate",
        }
    }

    /// Accepts `positive` as well as pick-list spellings like `PE: Positive`.
    pub fn parse(s: &str) -> Option<Self> {
        let n = normalize(s);
        let n = n.strip_prefix("pe:").unwrap_or(&n).trim_start_matches('_');
        match n {
            "positive" => Some(Diagnosis::Positive),
            "negative" => Some(Diagnosis::Negative),
            "indeterminate" => Some(Diagnosis::Indeterminate),
            _ => None,
        }
    }

    pub fn is_diseased(self) -> bool {
        self == Diagnosis::Positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    #[serde(rename = "ed")]
    Emergency,
    Inpatient,
    Outpatient,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Emergency => "ed",
            Location::Inpatient => "inpatient",
            Location::Outpatient => "outpatient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalize(s).as_str() {
            "ed" | "emergency" | "emergency_department" => Some(Location::Emergency),
            "inpatient" => Some(Location::Inpatient),
            "outpatient" => Some(Location::Outpatient),
            _ => None,
        }
    }
}

fn normalize(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace([' ', '-'], "_")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamRecord {
    pub exam_id: String,
    pub scan_completed_at: Timestamp,
    pub report_signed_at: Timestamp,
    pub reader_id: String,
    pub reader_role: ReaderRole,
    pub diagnosis: Diagnosis,
    pub location: Location,
}

impl ExamRecord {
    /// Report turnaround time in minutes.
    pub fn tat_minutes(&self) -> f64 {
        minutes_between(&self.scan_completed_at, &self.report_signed_at)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureRecord {
    pub reader_id: String,
    pub closed_at: Timestamp,
    pub exam_class: ExamClass,
}

/// `to - from` in minutes at microsecond resolution.
pub fn minutes_between(from: &Timestamp, to: &Timestamp) -> f64 {
    let d = to.signed_duration_since(*from);
    d.num_microseconds().map(|us| us as f64 / 60e6).unwrap_or_else(|| d.num_milliseconds() as f64 / 60e3)
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    DateTime::parse_from_rfc3339(s.trim()).ok()
}

/// A row that could not be parsed. Ingestion keeps going past these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExamIngest {
    pub records: Vec<ExamRecord>,
    pub n_rows: usize,
    pub n_excluded_negative: usize,
    pub row_errors: Vec<RowError>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClosureIngest {
    pub records: Vec<ClosureRecord>,
    pub n_rows: usize,
    pub n_duplicates: usize,
    pub row_errors: Vec<RowError>,
}

fn open_table<R: Read>(input: R, delimiter: u8, expected: &[&str], what: &str) -> Result<Option<csv::Reader<R>>> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::Format(format!("{what}: unreadable header: {e}")))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Ok(None);
    }
    let got: Vec<String> = header.iter().map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase()).collect();
    if got != expected {
        return Err(Error::Format(format!(
            "{what}: expected columns [{}], found [{}]",
            expected.join(", "),
            got.join(", ")
        )));
    }
    Ok(Some(rdr))
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str) -> std::result::Result<&'a str, String> {
    rec.get(i).ok_or_else(|| format!("missing column {name}"))
}

fn parse_exam_row(rec: &csv::StringRecord) -> std::result::Result<ExamRecord, String> {
    if rec.len() != EXAM_LOG_COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", EXAM_LOG_COLUMNS.len(), rec.len()));
    }
    let ts = |i: usize| {
        let raw = field(rec, i, EXAM_LOG_COLUMNS[i])?;
        parse_timestamp(raw).ok_or_else(|| format!("bad timestamp in {}: {raw:?}", EXAM_LOG_COLUMNS[i]))
    };
    let exam_id = field(rec, 0, "exam_id")?.to_string();
    if exam_id.is_empty() {
        return Err("empty exam_id".into());
    }
    let role = field(rec, 4, "reader_role")?;
    let diagnosis = field(rec, 5, "diagnosis")?;
    let location = field(rec, 6, "location")?;
    Ok(ExamRecord {
        exam_id,
        scan_completed_at: ts(1)?,
        report_signed_at: ts(2)?,
        reader_id: field(rec, 3, "reader_id")?.to_string(),
        reader_role: ReaderRole::parse(role).ok_or_else(|| format!("unknown reader_role {role:?}"))?,
        diagnosis: Diagnosis::parse(diagnosis).ok_or_else(|| format!("unknown diagnosis {diagnosis:?}"))?,
        location: Location::parse(location).ok_or_else(|| format!("unknown location {location:?}"))?,
    })
}

/// Read an exam-report log. Rows with a negative turnaround time are dropped
/// and counted; malformed rows are reported with their line number.
pub fn ingest_exam_log<R: Read>(input: R, delimiter: u8) -> Result<ExamIngest> {
    let Some(mut rdr) = open_table(input, delimiter, &EXAM_LOG_COLUMNS, "exam log")? else {
        return Ok(ExamIngest::default());
    };
    let mut out = ExamIngest::default();
    for row in rdr.records() {
        out.n_rows += 1;
        let parsed = row.map_err(|e| (e.position().map_or(0, |p| p.line()), e.to_string())).and_then(|rec| {
            let line = rec.position().map_or(0, |p| p.line());
            parse_exam_row(&rec).map_err(|m| (line, m))
        });
        match parsed {
            Ok(rec) if rec.tat_minutes() < 0.0 => out.n_excluded_negative += 1,
            Ok(rec) => out.records.push(rec),
            Err((line, message)) => {
                log::warn!("exam log line {line}: {message}");
                out.row_errors.push(RowError { line, message });
            }
        }
    }
    Ok(out)
}

fn parse_closure_row(rec: &csv::StringRecord) -> std::result::Result<ClosureRecord, String> {
    if rec.len() != CLOSURE_LOG_COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", CLOSURE_LOG_COLUMNS.len(), rec.len()));
    }
    let reader_id = field(rec, 0, "reader_id")?.to_string();
    if reader_id.is_empty() {
        return Err("empty reader_id".into());
    }
    let raw_ts = field(rec, 1, "closed_at")?;
    let raw_class = field(rec, 2, "exam_class")?;
    Ok(ClosureRecord {
        reader_id,
        closed_at: parse_timestamp(raw_ts).ok_or_else(|| format!("bad timestamp in closed_at: {raw_ts:?}"))?,
        exam_class: ExamClass::parse(raw_class).ok_or_else(|| format!("unknown exam_class {raw_class:?}"))?,
    })
}

/// Read a case-closure log. Records come back sorted by reader and time with
/// repeated `(reader, time)` entries removed (first occurrence kept).
pub fn ingest_closure_log<R: Read>(input: R, delimiter: u8) -> Result<ClosureIngest> {
    let Some(mut rdr) = open_table(input, delimiter, &CLOSURE_LOG_COLUMNS, "closure log")? else {
        return Ok(ClosureIngest::default());
    };
    let mut out = ClosureIngest::default();
    for row in rdr.records() {
        out.n_rows += 1;
        let parsed = row.map_err(|e| (e.position().map_or(0, |p| p.line()), e.to_string())).and_then(|rec| {
            let line = rec.position().map_or(0, |p| p.line());
            parse_closure_row(&rec).map_err(|m| (line, m))
        });
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err((line, message)) => {
                log::warn!("closure log line {line}: {message}");
                out.row_errors.push(RowError { line, message });
            }
        }
    }
    let before = out.records.len();
    sort_and_dedup_closures(&mut out.records);
    out.n_duplicates = before - out.records.len();
    Ok(out)
}

pub fn sort_and_dedup_closures(records: &mut Vec<ClosureRecord>) {
    records.sort_by(|a, b| a.reader_id.cmp(&b.reader_id).then(a.closed_at.cmp(&b.closed_at)));
    records.dedup_by(|b, a| a.reader_id == b.reader_id && a.closed_at == b.closed_at);
}

pub fn write_exam_log<W: std::io::Write>(out: W, records: &[ExamRecord], delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    w.write_record(EXAM_LOG_COLUMNS).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.exam_id.as_str(),
            &r.scan_completed_at.to_rfc3339(),
            &r.report_signed_at.to_rfc3339(),
            &r.reader_id,
            r.reader_role.as_str(),
            r.diagnosis.as_str(),
            r.location.as_str(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_closure_log<W: std::io::Write>(out: W, records: &[ClosureRecord], delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    w.write_record(CLOSURE_LOG_COLUMNS).map_err(csv_io)?;
    for r in records {
        w.write_record([r.reader_id.as_str(), &r.closed_at.to_rfc3339(), r.exam_class.as_str()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
