use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::special::t_quantile;
use super::StatsError;

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub median: f64,
    pub ci95_mean: (f64, f64),
    /// Percentile bootstrap interval for the median.
    pub ci95_median: (f64, f64),
    pub bootstrap_seed: u64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    libm::sqrt(ss / (values.len() - 1) as f64)
}

fn sort(values: &mut [f64]) {
    values.sort_by(|a, b| a.total_cmp(b));
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median; averages the two middle values for an even count. NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    sort(&mut v);
    median_sorted(&v)
}

/// Linear-interpolation percentile of sorted data, `p` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap_median_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = values.len();
    let mut buf = Vec::with_capacity(n);
    let mut medians = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        buf.clear();
        buf.extend((0..n).map(|_| values[rng.random_range(0..n)]));
        sort(&mut buf);
        medians.push(median_sorted(&buf));
    }
    sort(&mut medians);
    (percentile_sorted(&medians, 0.025), percentile_sorted(&medians, 0.975))
}

pub fn descriptive(values: &[f64], bootstrap_seed: u64) -> Result<Descriptive, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewSubjects);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = values.len();
    let m = mean(values);
    let sd = sample_sd(values);
    let half = t_quantile(0.975, (n - 1) as f64) * sd / libm::sqrt(n as f64);
    Ok(Descriptive {
        n,
        mean: m,
        sd,
        median: median(values),
        ci95_mean: (m - half, m + half),
        ci95_median: bootstrap_median_ci(values, BOOTSTRAP_RESAMPLES, bootstrap_seed),
        bootstrap_seed,
    })
}
