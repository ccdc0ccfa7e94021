//! Reading-queue simulation and workflow estimation for AI-triage devices.
//!
//! The crate predicts how much sooner diseased exams are reported once a
//! triage device reorders a radiologist reading queue, and estimates every
//! workflow input of that prediction from raw timestamp logs.

pub mod error;
pub mod estimation;
pub mod model;
pub mod normal;
pub mod oracle;
pub mod roc;
pub mod sim;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use model::{
    label_exam, mean_service_time, sample_exponential, Cohort, DeviceOperatingPoint, ExamClass, Preemption,
    QueueDiscipline, WorkflowParams,
};
pub use sim::{run_replications, simulate_trial, SavingsEstimate, SimConfig, TrialStats};
