//! Experiment harness behind the `triage` command: parameter estimation,
//! prediction sweeps, queueing-oracle checks and observed-TAT comparison.

pub mod compare;
pub mod config;
pub mod estimate;
pub mod oracle;
pub mod output;
pub mod params;
pub mod sweep;
pub mod synth;

pub use config::Config;
pub use params::ParameterFile;
