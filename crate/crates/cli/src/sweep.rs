//! Time-savings predictions over workload and device operating-point grids.

use serde::{Deserialize, Serialize};
use triage_core::estimation::adjusted_fpf_from_ratio;
use triage_core::roc::BinormalRoc;
use triage_core::{run_replications, DeviceOperatingPoint, Error, Result, SavingsEstimate, SimConfig};

use crate::output::{fmt, Meta, Table};
use crate::params::ParameterFile;

/// Simulation effort per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effort {
    pub n_trials: usize,
    pub n_patients: usize,
}

impl Effort {
    pub const FULL: Effort = Effort { n_trials: 100, n_patients: 100_000 };
    pub const QUICK: Effort = Effort { n_trials: 20, n_patients: 20_000 };

    pub fn select(quick: bool) -> Self {
        if quick {
            Self::QUICK
        } else {
            Self::FULL
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub interarrival_grid: Vec<f64>,
    pub radiologist_grid: Vec<u32>,
    pub effort: Effort,
    pub master_seed: u64,
}

/// `1.25, 1.50, ..., 4.00`.
pub fn default_interarrival_grid() -> Vec<f64> {
    (0..=11).map(|i| 1.25 + 0.25 * f64::from(i)).collect()
}

impl SweepSpec {
    pub fn new(master_seed: u64, quick: bool) -> Self {
        Self {
            interarrival_grid: default_interarrival_grid(),
            radiologist_grid: vec![2, 3, 4, 5],
            effort: Effort::select(quick),
            master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub interarrival: f64,
    pub n_radiologists: u32,
    pub feasible: bool,
    /// `None` exactly when infeasible.
    pub estimate: Option<SavingsEstimate>,
}

pub const SWEEP_COLUMNS: [&str; 7] =
    ["interarrival", "n_radiologists", "feasible", "mean_savings", "range95_low", "range95_high", "se"];

fn savings_cells(e: Option<&SavingsEstimate>) -> Vec<String> {
    match e {
        Some(e) => vec![fmt(e.mean_savings), fmt(e.range95.0), fmt(e.range95.1), fmt(e.standard_error())],
        None => vec![String::new(); 4],
    }
}

/// Every grid point shares `master_seed`, so neighbouring points are
/// compared on common random numbers.
pub fn sweep(params: &ParameterFile, spec: &SweepSpec, sim: &SimConfig) -> Result<Vec<SweepRow>> {
    if spec.interarrival_grid.is_empty() || spec.radiologist_grid.is_empty() {
        return Err(Error::Parameter("sweep grids must not be empty".into()));
    }
    let mut rows = Vec::new();
    let mut min_rho = f64::INFINITY;
    for &c in &spec.radiologist_grid {
        for &ia in &spec.interarrival_grid {
            match params.workflow(ia, c) {
                Ok(p) => {
                    log::info!("sweep point interarrival={ia} c={c} rho={:.3}", p.utilization());
                    let e = run_replications(&p, spec.effort.n_trials, spec.effort.n_patients, spec.master_seed, sim)?;
                    rows.push(SweepRow { interarrival: ia, n_radiologists: c, feasible: true, estimate: Some(e) });
                }
                Err(Error::Unstable { rho }) => {
                    min_rho = min_rho.min(rho);
                    rows.push(SweepRow { interarrival: ia, n_radiologists: c, feasible: false, estimate: None });
                }
                Err(e) => return Err(e),
            }
        }
    }
    if rows.iter().all(|r| !r.feasible) {
        log::error!("every grid point is unstable; add radiologists or lengthen the inter-arrival times");
        return Err(Error::Unstable { rho: min_rho });
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_COLUMNS);
    for r in rows {
        let mut row = vec![fmt(r.interarrival), r.n_radiologists.to_string(), r.feasible.to_string()];
        row.extend(savings_cells(r.estimate.as_ref()));
        t.push(row);
    }
    t
}

pub fn sweep_meta(spec: &SweepSpec, sim: &SimConfig) -> Meta {
    Meta::new("sweep")
        .with("seed", spec.master_seed)
        .with("interarrival_grid", spec.interarrival_grid.clone())
        .with("radiologist_grid", spec.radiologist_grid.clone())
        .with("n_trials", spec.effort.n_trials)
        .with("n_patients", spec.effort.n_patients)
        .with("priority", sim.preemption.as_str())
        .with("burn_in", sim.burn_in)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSweepSpec {
    pub n_points: usize,
    pub n_radiologists: u32,
    pub interarrival: f64,
    /// Out-of-scope to non-diseased target ratio applied to each raw FPF.
    pub ncct_to_npp_ratio: f64,
    pub slope: f64,
    pub effort: Effort,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub fpf_raw: f64,
    pub fpf_adjusted: f64,
    pub tpf: f64,
    pub estimate: SavingsEstimate,
}

pub const ROC_COLUMNS: [&str; 7] =
    ["fpf_raw", "fpf_adjusted", "tpf", "mean_savings", "range95_low", "range95_high", "se"];

/// Savings along the bi-normal curve through the parameter file's device
/// operating point.
pub fn roc_sweep(params: &ParameterFile, spec: &RocSweepSpec, sim: &SimConfig) -> Result<Vec<RocRow>> {
    let curve = BinormalRoc::fit_from_point(params.workflow.tpf, 1.0 - params.workflow.specificity, spec.slope)?;
    let base = params.workflow(spec.interarrival, spec.n_radiologists)?;
    let mut rows = Vec::with_capacity(spec.n_points);
    for (fpf_raw, tpf) in curve.sample_operating_points(spec.n_points)? {
        let fpf_adjusted = adjusted_fpf_from_ratio(1.0 - fpf_raw, spec.ncct_to_npp_ratio);
        let p = base.with_device(DeviceOperatingPoint::new(tpf, fpf_adjusted)?);
        let estimate = run_replications(&p, spec.effort.n_trials, spec.effort.n_patients, spec.master_seed, sim)?;
        log::info!("roc point fpf={fpf_raw:.4} tpf={tpf:.4} savings={:.3}", estimate.mean_savings);
        rows.push(RocRow { fpf_raw, fpf_adjusted, tpf, estimate });
    }
    Ok(rows)
}

pub fn roc_table(rows: &[RocRow]) -> Table {
    let mut t = Table::new(&ROC_COLUMNS);
    for r in rows {
        let mut row = vec![fmt(r.fpf_raw), fmt(r.fpf_adjusted), fmt(r.tpf)];
        row.extend(savings_cells(Some(&r.estimate)));
        t.push(row);
    }
    t
}

pub fn roc_meta(spec: &RocSweepSpec, sim: &SimConfig) -> Meta {
    Meta::new("roc-sweep")
        .with("seed", spec.master_seed)
        .with("n_points", spec.n_points)
        .with("n_radiologists", spec.n_radiologists)
        .with("interarrival", spec.interarrival)
        .with("ncct_to_npp_ratio", spec.ncct_to_npp_ratio)
        .with("slope", spec.slope)
        .with("n_trials", spec.effort.n_trials)
        .with("n_patients", spec.effort.n_patients)
        .with("priority", sim.preemption.as_str())
        .with("burn_in", sim.burn_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_range() {
        let g = default_interarrival_grid();
        assert_eq!(g.len(), 12);
        assert_eq!((g[0], g[11]), (1.25, 4.0));
    }

    #[test]
    fn infeasible_rows_are_blank() {
        let spec = SweepSpec {
            interarrival_grid: vec![1.25, 4.0],
            radiologist_grid: vec![2],
            effort: Effort { n_trials: 2, n_patients: 2_000 },
            master_seed: 1,
        };
        let rows = sweep(&ParameterFile::published(), &spec, &SimConfig::default()).unwrap();
        assert!(!rows[0].feasible && rows[0].estimate.is_none());
        assert!(rows[1].feasible);
        let csv = sweep_table(&rows).to_csv();
        assert!(csv.lines().nth(1).unwrap().ends_with("false,,,,"), "{csv}");
    }

    #[test]
    fn all_infeasible_is_an_instability_error() {
        let spec = SweepSpec {
            interarrival_grid: vec![1.25],
            radiologist_grid: vec![2],
            effort: Effort { n_trials: 2, n_patients: 100 },
            master_seed: 1,
        };
        let err = sweep(&ParameterFile::published(), &spec, &SimConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
