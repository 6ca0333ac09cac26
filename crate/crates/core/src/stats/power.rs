//! A-priori power for a single-group repeated-measures design with a
//! within-subject factor, under the noncentral F approximation:
//! `lambda = f^2 N m eps / (1 - rho)`, `df1 = (m - 1) eps`,
//! `df2 = (N - 1)(m - 1) eps`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::special::{f_critical, noncentral_f_cdf};
use super::StatsError;

pub const MAX_SAMPLE_SIZE: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerQuery {
    /// Cohen's f.
    pub f: f64,
    pub alpha: f64,
    pub power: f64,
    /// Number of repeated measurements.
    pub m: u32,
    /// Correlation among repeated measures.
    pub rho: f64,
    /// Nonsphericity correction.
    pub epsilon: f64,
}

impl Default for PowerQuery {
    fn default() -> Self {
        Self { f: 0.4, alpha: 0.05, power: 0.9, m: 5, rho: 0.5, epsilon: 1.0 }
    }
}

impl PowerQuery {
    pub fn validate(&self) -> Result<(), StatsError> {
        let ok = self.f > 0.0
            && self.f.is_finite()
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.power > 0.0
            && self.power < 1.0
            && self.m >= 2
            && self.rho >= 0.0
            && self.rho < 1.0
            && self.epsilon <= 1.0
            && self.epsilon >= 1.0 / (self.m - 1) as f64 - 1e-12;
        if ok {
            Ok(())
        } else {
            Err(StatsError::InvalidQuery)
        }
    }

    pub fn lambda(&self, n: u64) -> f64 {
        self.f * self.f * n as f64 * self.m as f64 * self.epsilon / (1.0 - self.rho)
    }

    pub fn dfs(&self, n: u64) -> (f64, f64) {
        let df1 = (self.m - 1) as f64 * self.epsilon;
        (df1, (n as f64 - 1.0) * df1)
    }
}

/// Power with an explicit noncentrality, for checking monotonicity in
/// lambda separately from N.
pub fn power_at(alpha: f64, df1: f64, df2: f64, lambda: f64) -> f64 {
    let crit = f_critical(alpha, df1, df2);
    1.0 - noncentral_f_cdf(crit, df1, df2, lambda)
}

pub fn achieved_power(q: &PowerQuery, n: u64) -> f64 {
    let (df1, df2) = q.dfs(n);
    power_at(q.alpha, df1, df2, q.lambda(n))
}

/// Smallest N >= 2 whose achieved power reaches `q.power`.
pub fn required_sample_size(q: &PowerQuery) -> Result<u64, StatsError> {
    q.validate()?;
    let reaches = |n: u64| achieved_power(q, n) >= q.power;
    if reaches(2) {
        return Ok(2);
    }
    let mut lo = 2;
    let mut hi = 4;
    while !reaches(hi) {
        lo = hi;
        if hi >= MAX_SAMPLE_SIZE {
            return Err(StatsError::Unreachable);
        }
        hi = (hi * 2).min(MAX_SAMPLE_SIZE);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSetting {
    pub m: u32,
    pub rho: f64,
    pub epsilon: f64,
    pub n: u64,
}

/// Required N for every admissible combination of measurement count,
/// correlation and epsilon, holding f, alpha and power fixed. Combinations
/// with `epsilon < 1/(m-1)` are skipped.
pub fn assumption_grid(base: &PowerQuery, ms: &[u32], rhos: &[f64], epsilons: &[f64]) -> Vec<AssumptionSetting> {
    let mut out = Vec::new();
    for &m in ms {
        for &rho in rhos {
            for &epsilon in epsilons {
                let q = PowerQuery { m, rho, epsilon, ..*base };
                if q.validate().is_err() {
                    continue;
                }
                if let Ok(n) = required_sample_size(&q) {
                    out.push(AssumptionSetting { m, rho, epsilon, n });
                }
            }
        }
    }
    out
}

/// Small grid over the sub-parameters a power calculator leaves implicit.
pub const SMALL_GRID_M: [u32; 4] = [2, 3, 5, 15];
pub const SMALL_GRID_RHO: [f64; 1] = [0.5];
pub const SMALL_GRID_EPSILON: [f64; 1] = [1.0];

/// Wider grid searched when the small grid has no match.
pub const WIDE_GRID_M: [u32; 14] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
pub const WIDE_GRID_RHO: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
pub const WIDE_GRID_EPSILON: [f64; 3] = [1.0, 0.75, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSearch {
    pub target: u64,
    pub small: Vec<AssumptionSetting>,
    /// Empty unless the small grid has no setting reaching `target`.
    pub wide: Vec<AssumptionSetting>,
}

impl AssumptionSearch {
    pub fn matches(&self) -> Vec<AssumptionSetting> {
        let hit = |s: &&AssumptionSetting| s.n == self.target;
        let small: Vec<_> = self.small.iter().filter(hit).copied().collect();
        if small.is_empty() {
            self.wide.iter().filter(hit).copied().collect()
        } else {
            small
        }
    }
}

/// Searches the small grid for settings giving `target`, then the wide
/// grid if the small one has none.
pub fn search_assumptions(base: &PowerQuery, target: u64) -> AssumptionSearch {
    let small = assumption_grid(base, &SMALL_GRID_M, &SMALL_GRID_RHO, &SMALL_GRID_EPSILON);
    let wide = if small.iter().any(|s| s.n == target) {
        Vec::new()
    } else {
        assumption_grid(base, &WIDE_GRID_M, &WIDE_GRID_RHO, &WIDE_GRID_EPSILON)
    };
    AssumptionSearch { target, small, wide }
}
