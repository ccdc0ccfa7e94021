//! Exponential curve fits to binned gap distributions.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::calendar::Calendar;
use crate::estimation::logs::{minutes_between, ExamRecord, Timestamp};
use crate::model::Cohort;

/// Least-squares fit of `amplitude · exp(−t / mean)` to a density-normalized
/// histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub mean: f64,
    pub amplitude: f64,
    /// Coefficient of determination over all bins up to the largest sample.
    /// `None` when the binned density is flat.
    pub r2: Option<f64>,
    /// Sample mean, the maximum-likelihood exponential mean.
    pub mle_mean: f64,
    pub n: usize,
}

/// Fit an exponential curve to the histogram of `samples`.
///
/// With `weighted` the bins get Poisson weights `1 / max(count, 1)`.
/// Returns `None` for an empty sample or a nonpositive bin width.
pub fn fit_exponential_histogram(samples: &[f64], bin_width: f64, weighted: bool) -> Option<CurveFit> {
    if samples.is_empty() || !(bin_width > 0.0) {
        return None;
    }
    let n = samples.len();
    let max = samples.iter().copied().fold(0.0, f64::max);
    let bins = (max / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let k = ((s.max(0.0) / bin_width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let norm = n as f64 * bin_width;
    let xs: Vec<f64> = (0..bins).map(|k| (k as f64 + 0.5) * bin_width).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| c as f64 / norm).collect();
    let ws: Vec<f64> = counts.iter().map(|&c| if weighted { 1.0 / (c.max(1) as f64) } else { 1.0 }).collect();

    // For a fixed mean the best amplitude is linear; profile it out.
    let profile = |m: f64| -> (f64, f64) {
        let (mut sye, mut see) = (0.0, 0.0);
        for ((&x, &y), &w) in xs.iter().zip(&ys).zip(&ws) {
            let e = (-x / m).exp();
            sye += w * y * e;
            see += w * e * e;
        }
        let amp = if see > 0.0 { sye / see } else { 0.0 };
        let sse: f64 = xs.iter().zip(&ys).zip(&ws).map(|((&x, &y), &w)| w * (y - amp * (-x / m).exp()).powi(2)).sum();
        (sse, amp)
    };

    let mle_mean = samples.iter().sum::<f64>() / n as f64;
    let lo = (bin_width / 50.0).ln();
    let hi = ((max.max(bin_width)) * 50.0).ln();
    let grid = 400;
    let at = |i: usize| (lo + (hi - lo) * i as f64 / grid as f64).exp();
    let best = (0..=grid).min_by(|&i, &j| profile(at(i)).0.total_cmp(&profile(at(j)).0)).expect("nonempty grid");
    let (mut a, mut b) = (at(best.saturating_sub(1)).ln(), at((best + 1).min(grid)).ln());
    // Golden-section refinement in log space.
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..100 {
        if profile(c.exp()).0 < profile(d.exp()).0 {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let mean = ((a + b) / 2.0).exp();
    let (_, amplitude) = profile(mean);

    let y_bar = ys.iter().sum::<f64>() / bins as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_bar).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (y - amplitude * (-x / mean).exp()).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Some(CurveFit { mean, amplitude, r2, mle_mean, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bin_width: f64,
    pub min_gaps: usize,
    pub weighted: bool,
}

impl Default for FitOptions {
    /// Two-minute bins: one-minute bins on days of a few hundred gaps cap the
    /// expected R² near 0.98 from counting noise alone.
    fn default() -> Self {
        Self { bin_width: 2.0, min_gaps: 5, weighted: false }
    }
}

/// Inter-arrival fit for one cohort on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub day: NaiveDate,
    pub cohort: Cohort,
    pub mean: f64,
    pub r2: f64,
    pub mle_mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailyFits {
    pub fits: Vec<ExponentialFit>,
    /// Day-cohorts below the minimum gap count, with their gap counts.
    pub skipped: Vec<(NaiveDate, Cohort, usize)>,
}

impl DailyFits {
    pub fn for_cohort(&self, cohort: Cohort) -> impl Iterator<Item = &ExponentialFit> {
        self.fits.iter().filter(move |f| f.cohort == cohort)
    }
}

/// Gaps between consecutive arrivals, grouped by day and cohort. A gap is
/// only counted when both arrivals fall in the same contiguous cohort block
/// of the same local day.
pub fn gaps_by_day_cohort(times: &[Timestamp], calendar: &Calendar) -> BTreeMap<(NaiveDate, Cohort), Vec<f64>> {
    let mut sorted = times.to_vec();
    sorted.sort();
    let mut out: BTreeMap<(NaiveDate, Cohort), Vec<f64>> = BTreeMap::new();
    for w in sorted.windows(2) {
        let (ba, bb) = (calendar.block(&w[0]), calendar.block(&w[1]));
        if ba == bb {
            out.entry((ba.0, ba.1)).or_default().push(minutes_between(&w[0], &w[1]));
        }
    }
    // Make sure every observed day-cohort shows up, even without gaps.
    for t in &sorted {
        let (day, cohort, _) = calendar.block(t);
        out.entry((day, cohort)).or_default();
    }
    out
}

pub fn daily_interarrival_fits_from_times(times: &[Timestamp], calendar: &Calendar, opts: &FitOptions) -> DailyFits {
    let mut result = DailyFits::default();
    for ((day, cohort), gaps) in gaps_by_day_cohort(times, calendar) {
        if gaps.len() < opts.min_gaps.max(1) {
            log::debug!("skipping {day} {}: {} gaps", cohort.as_str(), gaps.len());
            result.skipped.push((day, cohort, gaps.len()));
            continue;
        }
        let Some(fit) = fit_exponential_histogram(&gaps, opts.bin_width, opts.weighted) else {
            result.skipped.push((day, cohort, gaps.len()));
            continue;
        };
        result.fits.push(ExponentialFit {
            day,
            cohort,
            mean: fit.mean,
            r2: fit.r2.unwrap_or(0.0),
            mle_mean: fit.mle_mean,
            n: fit.n,
        });
    }
    result
}

/// Per-day exponential fits of exam inter-arrival times.
pub fn daily_interarrival_fits(records: &[ExamRecord], calendar: &Calendar, opts: &FitOptions) -> DailyFits {
    let times: Vec<Timestamp> = records.iter().map(|r| r.scan_completed_at).collect();
    daily_interarrival_fits_from_times(&times, calendar, opts)
}

/// Mean and 1σ spread of a set of values, described as a normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSummary {
    pub mean: f64,
    pub sigma: f64,
    pub range68: (f64, f64),
    pub n: usize,
}

impl NormalSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::insufficient(format!("need at least 2 values, got {}", values.len())));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sigma = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if sigma == 0.0 {
            log::warn!("all {} values equal {mean}; spread is zero", values.len());
        }
        Ok(Self { mean, sigma, range68: (mean - sigma, mean + sigma), n: values.len() })
    }
}

/// Normal description of the daily fitted means of one cohort.
pub fn summarize_interarrival<'a>(
    fits: impl IntoIterator<Item = &'a ExponentialFit>,
    cohort: Cohort,
) -> Result<NormalSummary> {
    let means: Vec<f64> = fits.into_iter().filter(|f| f.cohort == cohort).map(|f| f.mean).collect();
    NormalSummary::from_values(&means)
        .map_err(|_| Error::insufficient(format!("{} cohort has {} daily fits, need 2", cohort.as_str(), means.len())))
}
