//! Fisher's LSD pairwise comparisons for within-subject factors.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::anova::rm_anova_one_way;
use super::descriptive::{mean, sample_sd};
use super::special::t_two_sided_p;
use super::StatsError;

pub const LSD_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFlag {
    /// The paired differences have zero variance; p is a limit value
    /// (1 when the mean difference is zero, 0 otherwise).
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub i: usize,
    pub j: usize,
    /// Mean of level i minus mean of level j.
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub flag: Option<PairFlag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsdErrorTerm {
    /// Separate paired t-test per pair.
    PerPair,
    /// Pooled one-way residual mean square.
    Pooled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub pairs: Vec<PairComparison>,
    pub alpha: f64,
    pub error_term: LsdErrorTerm,
}

impl PairwiseResult {
    /// Comparison oriented as level `i` minus level `j`.
    pub fn get(&self, i: usize, j: usize) -> Option<PairComparison> {
        self.pairs.iter().find_map(|c| {
            if c.i == i && c.j == j {
                Some(*c)
            } else if c.i == j && c.j == i {
                Some(PairComparison { i, j, mean_diff: -c.mean_diff, t: -c.t, ..*c })
            } else {
                None
            }
        })
    }

    pub fn p(&self, i: usize, j: usize) -> Option<f64> {
        self.get(i, j).map(|c| c.p)
    }

    /// True when level `i` is significantly lower than level `j`.
    pub fn significantly_lower(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some_and(|c| c.p < self.alpha && c.mean_diff < 0.0)
    }
}

/// Significance marker: `***` p < .001, `**` p < .01, `*` p < .05, else `ns`.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "ns"
    }
}

fn validate(values: &[Vec<f64>]) -> Result<usize, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewSubjects);
    }
    let k = values[0].len();
    if k < 2 {
        return Err(StatsError::TooFewLevels);
    }
    if values.iter().any(|r| r.len() != k) {
        return Err(StatsError::Ragged);
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(k)
}

fn comparison(i: usize, j: usize, mean_diff: f64, se: f64, df: f64, scale: f64) -> PairComparison {
    if se <= 1e-14 * scale || se == 0.0 {
        let (t, p) =
            if mean_diff.abs() <= 1e-14 * scale { (0.0, 1.0) } else { (f64::INFINITY.copysign(mean_diff), 0.0) };
        return PairComparison { i, j, mean_diff, t, df, p, flag: Some(PairFlag::Degenerate) };
    }
    let t = mean_diff / se;
    PairComparison { i, j, mean_diff, t, df, p: t_two_sided_p(t, df), flag: None }
}

/// All pairwise paired t-tests, uncorrected (`values[subject][level]`).
pub fn lsd_pairwise(values: &[Vec<f64>]) -> Result<PairwiseResult, StatsError> {
    let k = validate(values)?;
    let n = values.len();
    let scale = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let d: Vec<f64> = values.iter().map(|r| r[i] - r[j]).collect();
            let se = sample_sd(&d) / libm::sqrt(n as f64);
            pairs.push(comparison(i, j, mean(&d), se, (n - 1) as f64, scale));
        }
    }
    Ok(PairwiseResult { pairs, alpha: LSD_ALPHA, error_term: LsdErrorTerm::PerPair })
}

/// Pairwise comparisons against the pooled residual mean square of the
/// one-way repeated-measures ANOVA.
pub fn lsd_pairwise_pooled(values: &[Vec<f64>]) -> Result<PairwiseResult, StatsError> {
    let k = validate(values)?;
    let n = values.len();
    let anova = rm_anova_one_way(values)?;
    let ms_error = anova.effect.ss_error / anova.effect.df2;
    let se = libm::sqrt(2.0 * ms_error / n as f64);
    let scale = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let level_means: Vec<f64> = (0..k).map(|j| values.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            pairs.push(comparison(i, j, level_means[i] - level_means[j], se, anova.effect.df2, scale));
        }
    }
    Ok(PairwiseResult { pairs, alpha: LSD_ALPHA, error_term: LsdErrorTerm::Pooled })
}
