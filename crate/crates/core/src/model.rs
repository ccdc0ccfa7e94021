//! Shared domain types, parameter validation and the stochastic primitives
//! the simulator is built on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three kinds of exam sharing a reading queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExamClass {
    /// Target exam with the disease present.
    #[serde(rename = "pe_positive")]
    DiseasedTarget,
    /// Target exam without the disease (negative or indeterminate).
    #[serde(rename = "non_pe_positive")]
    NonDiseasedTarget,
    /// Exam the triage device never analyzes.
    #[serde(rename = "non_chest_ct")]
    OutOfScope,
}

impl ExamClass {
    pub const ALL: [ExamClass; 3] = [ExamClass::DiseasedTarget, ExamClass::NonDiseasedTarget, ExamClass::OutOfScope];

    pub fn as_str(self) -> &'static str {
        match self {
            ExamClass::DiseasedTarget => "pe_positive",
            ExamClass::NonDiseasedTarget => "non_pe_positive",
            ExamClass::OutOfScope => "non_chest_ct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pe_positive" => Some(ExamClass::DiseasedTarget),
            "non_pe_positive" => Some(ExamClass::NonDiseasedTarget),
            "non_chest_ct" => Some(ExamClass::OutOfScope),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    WorkHour,
    OffHour,
}

impl Cohort {
    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::WorkHour => "work_hour",
            Cohort::OffHour => "off_hour",
        }
    }
}

/// True- and false-positive fractions of the triage device as fed to the
/// queue model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceOperatingPoint {
    tpf: f64,
    fpf_adjusted: f64,
}

impl DeviceOperatingPoint {
    pub fn new(tpf: f64, fpf_adjusted: f64) -> Result<Self> {
        check_fraction("tpf", tpf)?;
        check_fraction("fpf_adjusted", fpf_adjusted)?;
        Ok(Self { tpf, fpf_adjusted })
    }

    /// A device that never flags anything.
    pub fn disabled() -> Self {
        Self { tpf: 0.0, fpf_adjusted: 0.0 }
    }

    pub fn tpf(&self) -> f64 {
        self.tpf
    }

    pub fn fpf_adjusted(&self) -> f64 {
        self.fpf_adjusted
    }

    /// Probability that an arbitrary queue exam is flagged.
    pub fn flag_rate(&self, prevalence: f64) -> f64 {
        prevalence * self.tpf + (1.0 - prevalence) * self.fpf_adjusted
    }
}

pub(crate) fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Everything the queue model needs to describe one stationary workload.
///
/// Construction fails unless the per-radiologist utilization is below one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkflowParams {
    prevalence: f64,
    mean_interarrival: f64,
    n_radiologists: u32,
    read_time_diseased: f64,
    read_time_nondiseased_effective: f64,
    device: DeviceOperatingPoint,
}

impl WorkflowParams {
    pub fn new(
        prevalence: f64,
        mean_interarrival: f64,
        n_radiologists: u32,
        read_time_diseased: f64,
        read_time_nondiseased_effective: f64,
        device: DeviceOperatingPoint,
    ) -> Result<Self> {
        check_fraction("prevalence", prevalence)?;
        check_positive("mean_interarrival", mean_interarrival)?;
        check_positive("read_time_diseased", read_time_diseased)?;
        check_positive("read_time_nondiseased_effective", read_time_nondiseased_effective)?;
        if n_radiologists == 0 {
            return Err(Error::param("n_radiologists must be at least 1"));
        }
        let params = Self {
            prevalence,
            mean_interarrival,
            n_radiologists,
            read_time_diseased,
            read_time_nondiseased_effective,
            device,
        };
        let rho = params.utilization();
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(params)
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    pub fn mean_interarrival(&self) -> f64 {
        self.mean_interarrival
    }

    pub fn n_radiologists(&self) -> u32 {
        self.n_radiologists
    }

    pub fn read_time_diseased(&self) -> f64 {
        self.read_time_diseased
    }

    pub fn read_time_nondiseased_effective(&self) -> f64 {
        self.read_time_nondiseased_effective
    }

    pub fn device(&self) -> DeviceOperatingPoint {
        self.device
    }

    pub fn arrival_rate(&self) -> f64 {
        1.0 / self.mean_interarrival
    }

    /// Offered load per radiologist.
    pub fn utilization(&self) -> f64 {
        mean_service_time(self) / self.mean_interarrival / f64::from(self.n_radiologists)
    }

    /// Smallest mean inter-arrival time this staffing level can sustain.
    pub fn min_stable_interarrival(&self) -> f64 {
        mean_service_time(self) / f64::from(self.n_radiologists)
    }

    pub fn with_interarrival(&self, mean_interarrival: f64) -> Result<Self> {
        Self::new(
            self.prevalence,
            mean_interarrival,
            self.n_radiologists,
            self.read_time_diseased,
            self.read_time_nondiseased_effective,
            self.device,
        )
    }

    pub fn with_radiologists(&self, n_radiologists: u32) -> Result<Self> {
        Self::new(
            self.prevalence,
            self.mean_interarrival,
            n_radiologists,
            self.read_time_diseased,
            self.read_time_nondiseased_effective,
            self.device,
        )
    }

    pub fn with_device(&self, device: DeviceOperatingPoint) -> Self {
        Self { device, ..*self }
    }
}

/// Reading order of the queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueDiscipline {
    /// Strict arrival order, no triage device in use.
    Fifo,
    /// Flagged exams ahead of every unflagged exam, FIFO within each group.
    AiPriority,
}

/// Whether a flagged arrival may interrupt a read of an unflagged exam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preemption {
    /// A started read always runs to completion.
    #[default]
    NonPreemptive,
    /// A flagged arrival interrupts the most recently arrived unflagged exam
    /// in service; the interrupted read later resumes where it stopped.
    PreemptiveResume,
}

impl Preemption {
    pub fn as_str(self) -> &'static str {
        match self {
            Preemption::NonPreemptive => "non_preemptive",
            Preemption::PreemptiveResume => "preemptive_resume",
        }
    }
}

/// Expected read time of an arbitrary exam in the queue.
pub fn mean_service_time(params: &WorkflowParams) -> f64 {
    params.prevalence * params.read_time_diseased + (1.0 - params.prevalence) * params.read_time_nondiseased_effective
}

/// Draw from an exponential distribution with the given mean.
pub fn sample_exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64> {
    check_positive("exponential mean", mean)?;
    Ok(mean * unit_exponential(rng))
}

/// Exp(1) by inversion. Uses `1 - u` with `u` in `[0, 1)` so the draw is
/// always finite and strictly positive.
pub(crate) fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let x = -(1.0 - u).ln();
        if x > 0.0 {
            return x;
        }
    }
}

/// Draw disease status and device flag for one exam.
///
/// Both are thresholded uniforms, so raising `tpf` or `fpf_adjusted` on a
/// fixed stream only ever adds flags.
pub fn label_exam<R: Rng + ?Sized>(params: &WorkflowParams, rng: &mut R) -> (bool, bool) {
    let u_disease: f64 = rng.random();
    let u_flag: f64 = rng.random();
    let diseased = u_disease < params.prevalence;
    let threshold = if diseased { params.device.tpf } else { params.device.fpf_adjusted };
    (diseased, u_flag < threshold)
}

/// Independent generator for one trial. Streams for distinct trial indices
/// never overlap, so trials can be run in any order or in parallel.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}
