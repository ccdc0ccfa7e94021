//! Analytic queueing values for an equal-service-mean load, optionally
//! checked against a matched simulation.

use serde::{Deserialize, Serialize};
use triage_core::oracle::analytic_time_savings;
use triage_core::sim::{paired_trial, BatchMean};
use triage_core::{DeviceOperatingPoint, Error, Preemption, Result, SimConfig, WorkflowParams};

use crate::output::{fmt, fmt_opt, Meta, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub n_radiologists: u32,
    /// Offered load per radiologist.
    pub rho: f64,
    /// Fraction of exams in the priority class.
    pub flag_fraction: f64,
    pub service_mean: f64,
    pub preemption: Preemption,
}

impl LoadSpec {
    /// Flagged exams play the role of diseased exams: every diseased exam
    /// is flagged and nothing else is.
    pub fn workflow(&self) -> Result<WorkflowParams> {
        if !(self.rho > 0.0) || !(self.service_mean > 0.0) || self.n_radiologists == 0 {
            return Err(Error::Parameter("oracle load needs rho > 0, service mean > 0 and c >= 1".into()));
        }
        let interarrival = self.service_mean / (f64::from(self.n_radiologists) * self.rho);
        WorkflowParams::new(
            self.flag_fraction,
            interarrival,
            self.n_radiologists,
            self.service_mean,
            self.service_mean,
            DeviceOperatingPoint::new(1.0, 0.0)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub quantity: &'static str,
    pub analytic: f64,
    pub simulated: Option<BatchMean>,
}

impl OracleRow {
    pub fn z(&self) -> Option<f64> {
        self.simulated.filter(|s| s.se > 0.0).map(|s| (s.mean - self.analytic) / s.se)
    }
}

pub const ORACLE_COLUMNS: [&str; 5] = ["quantity", "analytic", "simulated", "se", "z"];

/// Analytic waits and savings; with `compare`, one paired simulation of
/// `n_patients` exams supplies batch-means estimates of the same values.
pub fn oracle(load: &LoadSpec, compare: Option<(usize, u64)>, burn_in: usize) -> Result<Vec<OracleRow>> {
    let params = load.workflow()?;
    let a = analytic_time_savings(&params, load.service_mean, load.preemption)?;
    let mut rows = vec![
        OracleRow { quantity: "fifo_wait", analytic: a.fifo_wait, simulated: None },
        OracleRow { quantity: "flagged_wait", analytic: a.flagged_wait, simulated: None },
        OracleRow { quantity: "unflagged_wait", analytic: a.unflagged_wait, simulated: None },
        OracleRow { quantity: "savings", analytic: a.savings, simulated: None },
    ];
    if let Some((n_patients, seed)) = compare {
        let cfg = SimConfig { preemption: load.preemption, burn_in, ..SimConfig::default() };
        let t = paired_trial(&params, n_patients, seed, 0, &cfg)?;
        rows[0].simulated = Some(t.fifo.wait_all);
        rows[1].simulated = t.priority.wait_flagged;
        rows[2].simulated = t.priority.wait_unflagged;
        rows[3].simulated = Some(t.diseased_wait_savings);
    }
    Ok(rows)
}

pub fn oracle_table(rows: &[OracleRow]) -> Table {
    let mut t = Table::new(&ORACLE_COLUMNS);
    for r in rows {
        t.push(vec![
            r.quantity.into(),
            fmt(r.analytic),
            fmt_opt(r.simulated.map(|s| s.mean)),
            fmt_opt(r.simulated.map(|s| s.se)),
            fmt_opt(r.z()),
        ]);
    }
    t
}

pub fn oracle_meta(load: &LoadSpec, compare: Option<(usize, u64)>, burn_in: usize) -> Meta {
    let m = Meta::new("oracle")
        .with("n_radiologists", load.n_radiologists)
        .with("rho", load.rho)
        .with("flag_fraction", load.flag_fraction)
        .with("service_mean", load.service_mean)
        .with("priority", load.preemption.as_str());
    match compare {
        Some((n, seed)) => m.with("n_patients", n).with("seed", seed).with("burn_in", burn_in),
        None => m,
    }
}
