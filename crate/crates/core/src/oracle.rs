//! Closed-form M/M/c results used to check the simulator.
//!
//! Everything here assumes a single exponential service rate shared by all
//! classes, the only case where the priority formulas are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Preemption, WorkflowParams};

/// Probability that an arrival has to wait in an M/M/c queue with offered
/// load `a = λ/μ`.
///
/// Computed from the Erlang-B recurrence `B_k = a B_{k-1} / (k + a B_{k-1})`,
/// which stays well conditioned for large `c`.
pub fn erlang_c(c: u32, offered_load: f64) -> Result<f64> {
    if c == 0 {
        return Err(Error::param("server count must be at least 1"));
    }
    if !(offered_load >= 0.0) {
        return Err(Error::param(format!("offered load must be nonnegative, got {offered_load}")));
    }
    let rho = offered_load / f64::from(c);
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let mut b = 1.0;
    for k in 1..=c {
        b = offered_load * b / (f64::from(k) + offered_load * b);
    }
    Ok(b / (1.0 - rho * (1.0 - b)))
}

/// Mean time in queue for FIFO M/M/c.
pub fn mmc_fifo_wait(lambda: f64, mu: f64, c: u32) -> Result<f64> {
    check_rates(lambda, mu)?;
    let pw = erlang_c(c, lambda / mu)?;
    Ok(pw / (f64::from(c) * mu - lambda))
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("arrival rate must be nonnegative, got {lambda}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("service rate must be positive, got {mu}")));
    }
    Ok(())
}

/// Per-class arrival rates (class 0 served first) sharing one service rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityLoad {
    class_rates: Vec<f64>,
    mu: f64,
    servers: u32,
}

impl PriorityLoad {
    pub fn new(class_rates: Vec<f64>, mu: f64, servers: u32) -> Result<Self> {
        if class_rates.is_empty() {
            return Err(Error::param("at least one priority class is required"));
        }
        for &l in &class_rates {
            check_rates(l, mu)?;
        }
        if servers == 0 {
            return Err(Error::param("server count must be at least 1"));
        }
        let load = Self { class_rates, mu, servers };
        let rho = load.utilization();
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(load)
    }

    pub fn total_rate(&self) -> f64 {
        self.class_rates.iter().sum()
    }

    pub fn utilization(&self) -> f64 {
        self.total_rate() / (f64::from(self.servers) * self.mu)
    }

    pub fn class_rates(&self) -> &[f64] {
        &self.class_rates
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }
}

/// Cobham's non-preemptive priority waits:
/// `Wq_k = W0 / ((1 - σ_{k-1})(1 - σ_k))` with `W0 = C(c, λ/μ) / (cμ)`.
pub fn mmc_priority_wait(load: &PriorityLoad) -> Result<Vec<f64>> {
    let cmu = f64::from(load.servers) * load.mu;
    let w0 = erlang_c(load.servers, load.total_rate() / load.mu)? / cmu;
    let mut sigma_prev = 0.0;
    Ok(load
        .class_rates
        .iter()
        .map(|&l| {
            let sigma = sigma_prev + l / cmu;
            let w = w0 / ((1.0 - sigma_prev) * (1.0 - sigma));
            sigma_prev = sigma;
            w
        })
        .collect())
}

/// Preemptive-resume priority waits (time in system minus own service).
///
/// With a common exponential rate the classes `1..=k` together see a plain
/// M/M/c at rate `Λ_k`, so class `k` follows from the difference of two
/// FIFO sojourn totals. Classes with zero rate get `NaN`.
pub fn mmc_preemptive_priority_wait(load: &PriorityLoad) -> Result<Vec<f64>> {
    let service = 1.0 / load.mu;
    let mut cumulative = 0.0;
    let mut total_prev = 0.0;
    let mut waits = Vec::with_capacity(load.class_rates.len());
    for &l in &load.class_rates {
        cumulative += l;
        let total = cumulative * (mmc_fifo_wait(cumulative, load.mu, load.servers)? + service);
        waits.push(if l > 0.0 { (total - total_prev) / l - service } else { f64::NAN });
        total_prev = total;
    }
    Ok(waits)
}

/// Per-class waits for the requested preemption rule.
pub fn priority_wait(load: &PriorityLoad, preemption: Preemption) -> Result<Vec<f64>> {
    match preemption {
        Preemption::NonPreemptive => mmc_priority_wait(load),
        Preemption::PreemptiveResume => mmc_preemptive_priority_wait(load),
    }
}

/// Two-class load induced by a workflow: flagged exams first, then the rest.
pub fn flag_classes(params: &WorkflowParams, equal_service_mean: f64) -> Result<PriorityLoad> {
    let lambda = params.arrival_rate();
    let flagged = lambda * params.device().flag_rate(params.prevalence());
    PriorityLoad::new(vec![flagged, lambda - flagged], 1.0 / equal_service_mean, params.n_radiologists())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSavings {
    pub fifo_wait: f64,
    pub flagged_wait: f64,
    pub unflagged_wait: f64,
    /// Mean wait of diseased exams under AI priority.
    pub diseased_wait: f64,
    pub savings: f64,
}

/// Expected diseased-exam savings when every exam is read at the same mean
/// rate. Diseased exams are flagged with probability `tpf`, so their wait is
/// the `tpf`-weighted mixture of the two class waits.
pub fn analytic_time_savings(
    params: &WorkflowParams,
    equal_service_mean: f64,
    preemption: Preemption,
) -> Result<AnalyticSavings> {
    if !(equal_service_mean > 0.0) {
        return Err(Error::param("service mean must be positive"));
    }
    let load = flag_classes(params, equal_service_mean)?;
    let fifo_wait = mmc_fifo_wait(load.total_rate(), load.mu, load.servers)?;
    let waits = priority_wait(&load, preemption)?;
    let tpf = params.device().tpf();
    // A class with zero rate contributes nothing to the mixture.
    let pick = |w: f64, weight: f64| if weight == 0.0 { 0.0 } else { weight * w };
    let diseased_wait = pick(waits[0], tpf) + pick(waits[1], 1.0 - tpf);
    Ok(AnalyticSavings {
        fifo_wait,
        flagged_wait: waits[0],
        unflagged_wait: waits[1],
        diseased_wait,
        savings: fifo_wait - diseased_wait,
    })
}
