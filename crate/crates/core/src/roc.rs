//! Bi-normal ROC curve completed from a single device operating point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// `TPF = Φ(a + b·Φ⁻¹(FPF))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinormalRoc {
    pub a: f64,
    pub b: f64,
}

impl BinormalRoc {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) || !a.is_finite() {
            return Err(Error::param(format!("bi-normal curve needs finite a and b > 0, got a={a} b={b}")));
        }
        Ok(Self { a, b })
    }

    /// Fit through `(fpf, tpf)` with the slope fixed at `b` (1 for the
    /// equal-variance curve).
    pub fn fit_from_point(tpf: f64, fpf: f64, b: f64) -> Result<Self> {
        for (name, v) in [("tpf", tpf), ("fpf", fpf)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(format!("{name} must lie strictly inside (0, 1), got {v}")));
            }
        }
        Self::new(normal::quantile(tpf) - b * normal::quantile(fpf), b)
    }

    pub fn tpf(&self, fpf: f64) -> f64 {
        if fpf <= 0.0 {
            0.0
        } else if fpf >= 1.0 {
            1.0
        } else {
            normal::cdf(self.a + self.b * normal::quantile(fpf))
        }
    }

    pub fn auc(&self) -> f64 {
        normal::cdf(self.a / (1.0 + self.b * self.b).sqrt())
    }

    /// `n` points with FPF evenly spaced over `[0, 1]`, endpoints included.
    pub fn sample_operating_points(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        if n < 2 {
            return Err(Error::param("need at least 2 operating points"));
        }
        Ok((0..n)
            .map(|i| {
                let fpf = if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
                (fpf, self.tpf(fpf))
            })
            .collect())
    }
}

pub fn fit_from_point(tpf: f64, fpf: f64) -> Result<BinormalRoc> {
    BinormalRoc::fit_from_point(tpf, fpf, 1.0)
}

pub fn roc_tpf(curve: &BinormalRoc, fpf: f64) -> f64 {
    curve.tpf(fpf)
}

pub fn auc(curve: &BinormalRoc) -> f64 {
    curve.auc()
}

pub fn sample_operating_points(curve: &BinormalRoc, n: usize) -> Result<Vec<(f64, f64)>> {
    curve.sample_operating_points(n)
}
