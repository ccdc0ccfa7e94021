//! Descriptive statistics and two-sample tests for turnaround times.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Percentile `q` (0..=100) of an already sorted slice, linear interpolation
/// between closest ranks.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn t_quantile(df: f64, p: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TatSummary {
    pub n: usize,
    pub mean: f64,
    pub ci95: (f64, f64),
    /// 2.5th, 50th and 97.5th percentiles.
    pub percentiles: (f64, f64, f64),
}

/// Mean with a t-based 95% confidence interval and the three reporting
/// percentiles.
pub fn tat_summary(tats: &[f64]) -> Result<TatSummary> {
    let n = tats.len();
    if n < 2 {
        return Err(Error::insufficient(format!("TAT summary needs at least 2 values, got {n}")));
    }
    let m = mean(tats);
    let se = (sample_variance(tats) / n as f64).sqrt();
    let half = t_quantile((n - 1) as f64, 0.975) * se;
    let mut sorted = tats.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(TatSummary {
        n,
        mean: m,
        ci95: (m - half, m + half),
        percentiles: (percentile(&sorted, 2.5), percentile(&sorted, 50.0), percentile(&sorted, 97.5)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavingsTest {
    /// mean(pre) - mean(post)
    pub diff_of_means: f64,
    pub ci95: (f64, f64),
    /// One-sided p-value for a positive difference.
    pub p_one_sided: f64,
    pub df: f64,
}

/// Welch two-sample comparison of pre- and post-deployment TATs.
pub fn time_savings_test(pre: &[f64], post: &[f64]) -> Result<SavingsTest> {
    if pre.len() < 2 || post.len() < 2 {
        return Err(Error::insufficient(format!(
            "Welch test needs at least 2 values per group, got {} and {}",
            pre.len(),
            post.len()
        )));
    }
    let (n1, n2) = (pre.len() as f64, post.len() as f64);
    let (v1, v2) = (sample_variance(pre) / n1, sample_variance(post) / n2);
    let diff = mean(pre) - mean(post);
    let se = (v1 + v2).sqrt();
    if se == 0.0 {
        let p = match diff.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Less) => 1.0,
            _ => 0.5,
        };
        return Ok(SavingsTest { diff_of_means: diff, ci95: (diff, diff), p_one_sided: p, df: n1 + n2 - 2.0 });
    }
    let df = (v1 + v2).powi(2) / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    let t = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let half = t.inverse_cdf(0.975) * se;
    Ok(SavingsTest { diff_of_means: diff, ci95: (diff - half, diff + half), p_one_sided: t.sf(diff / se), df })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StdDiffInput {
    Continuous { mean1: f64, sd1: f64, mean2: f64, sd2: f64 },
    Proportion { p1: f64, p2: f64 },
}

/// Standardized difference between two groups (group 2 minus group 1) using
/// the pooled root-mean-square spread.
pub fn standardized_difference(input: StdDiffInput) -> Result<f64> {
    let (num, pooled_var) = match input {
        StdDiffInput::Continuous { mean1, sd1, mean2, sd2 } => {
            if !(sd1 > 0.0 && sd2 > 0.0) {
                return Err(Error::param("standard deviations must be positive"));
            }
            (mean2 - mean1, (sd1 * sd1 + sd2 * sd2) / 2.0)
        }
        StdDiffInput::Proportion { p1, p2 } => {
            crate::model::check_fraction("p1", p1)?;
            crate::model::check_fraction("p2", p2)?;
            (p2 - p1, (p1 * (1.0 - p1) + p2 * (1.0 - p2)) / 2.0)
        }
    };
    if pooled_var <= 0.0 {
        return Err(Error::Undefined("pooled spread is zero".into()));
    }
    Ok(num / pooled_var.sqrt())
}
