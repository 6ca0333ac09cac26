//! One- and two-way repeated-measures ANOVA with Greenhouse-Geisser
//! correction.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::StatsError;

/// Sums of squares below this fraction of the total are treated as zero.
const ZERO_SS_REL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectFlag {
    /// The effect sum of squares is zero: F = 0, p = 1.
    NoEffect,
    /// The error term is zero while the effect is not: F is infinite and p
    /// is reported as its limit 0.
    ZeroError,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectResult {
    pub ss_effect: f64,
    pub ss_error: f64,
    pub df1: f64,
    pub df2: f64,
    pub epsilon_gg: f64,
    /// Set when the covariance used for epsilon had zero trace.
    pub epsilon_degenerate: bool,
    pub f: f64,
    pub p: f64,
    pub eta_p_sq: f64,
    pub flag: Option<EffectFlag>,
}

impl EffectResult {
    pub fn df1_adj(&self) -> f64 {
        self.df1 * self.epsilon_gg
    }

    pub fn df2_adj(&self) -> f64 {
        self.df2 * self.epsilon_gg
    }

    fn build(ss_effect: f64, ss_error: f64, df1: f64, df2: f64, eps: Epsilon, ss_total: f64) -> Self {
        let tiny = ZERO_SS_REL * ss_total;
        let ss_effect = if ss_effect <= tiny { 0.0 } else { ss_effect };
        let ss_error = if ss_error <= tiny { 0.0 } else { ss_error };
        let (f, p, flag) = if ss_effect == 0.0 {
            (0.0, 1.0, Some(EffectFlag::NoEffect))
        } else if ss_error == 0.0 {
            (f64::INFINITY, 0.0, Some(EffectFlag::ZeroError))
        } else {
            let f = (ss_effect / df1) / (ss_error / df2);
            (f, f_sf(f, df1 * eps.value, df2 * eps.value), None)
        };
        let eta_p_sq = if ss_effect == 0.0 { 0.0 } else { ss_effect / (ss_effect + ss_error) };
        Self {
            ss_effect,
            ss_error,
            df1,
            df2,
            epsilon_gg: eps.value,
            epsilon_degenerate: eps.degenerate,
            f,
            p,
            eta_p_sq,
            flag,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epsilon {
    pub value: f64,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneWayResult {
    pub effect: EffectResult,
    pub ss_subjects: f64,
    pub ss_total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoWayResult {
    pub a: EffectResult,
    pub b: EffectResult,
    pub ab: EffectResult,
    pub ss_subjects: f64,
    pub ss_total: f64,
}

fn check_matrix(values: &[Vec<f64>]) -> Result<usize, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewSubjects);
    }
    let k = values[0].len();
    if k < 2 {
        return Err(StatsError::TooFewLevels);
    }
    for row in values {
        if row.len() != k {
            return Err(StatsError::Ragged);
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
    }
    Ok(k)
}

/// Sample covariance matrix of the columns.
pub fn covariance(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = values.len();
    let k = values[0].len();
    let means: Vec<f64> = (0..k).map(|j| values.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = values.iter().map(|r| (r[i] - means[i]) * (r[j] - means[j])).sum();
            cov[i][j] = s / (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

fn trace_and_trace_sq(m: &[Vec<f64>]) -> (f64, f64) {
    let tr = (0..m.len()).map(|i| m[i][i]).sum();
    // tr(M^2) = sum of squared entries for symmetric M.
    let tr2 = m.iter().flat_map(|r| r.iter()).map(|v| v * v).sum();
    (tr, tr2)
}

fn epsilon_from(tr: f64, tr2: f64, p: usize) -> Epsilon {
    if p == 1 {
        return Epsilon { value: 1.0, degenerate: false };
    }
    let scale = tr.abs().max(libm::sqrt(tr2));
    if !(tr > 1e-300) || tr2 <= 0.0 || tr <= 1e-14 * scale {
        return Epsilon { value: 1.0, degenerate: true };
    }
    let lower = 1.0 / p as f64;
    Epsilon { value: (tr * tr / (p as f64 * tr2)).clamp(lower, 1.0), degenerate: false }
}

/// Greenhouse-Geisser epsilon from the double-centered covariance of the
/// level scores (`values[subject][level]`).
pub fn gg_epsilon_detail(values: &[Vec<f64>]) -> Result<Epsilon, StatsError> {
    let k = check_matrix(values)?;
    if k == 2 {
        return Ok(Epsilon { value: 1.0, degenerate: false });
    }
    let cov = covariance(values);
    let row_means: Vec<f64> = cov.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let grand = row_means.iter().sum::<f64>() / k as f64;
    let centered: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| cov[i][j] - row_means[i] - row_means[j] + grand).collect()).collect();
    let (tr, tr2) = trace_and_trace_sq(&centered);
    Ok(epsilon_from(tr, tr2, k - 1))
}

pub fn gg_epsilon(values: &[Vec<f64>]) -> Result<f64, StatsError> {
    gg_epsilon_detail(values).map(|e| e.value)
}

/// Orthonormal Helmert contrasts: `k - 1` rows of length `k`.
pub fn helmert(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|i| {
            let norm = libm::sqrt((i * (i + 1)) as f64);
            (0..k)
                .map(|j| {
                    if j < i {
                        1.0 / norm
                    } else if j == i {
                        -(i as f64) / norm
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Epsilon from scores on a set of orthonormal contrasts
/// (`scores[subject][contrast]`).
pub fn epsilon_from_contrast_scores(scores: &[Vec<f64>]) -> Epsilon {
    let p = scores[0].len();
    let (tr, tr2) = trace_and_trace_sq(&covariance(scores));
    epsilon_from(tr, tr2, p)
}

pub fn rm_anova_one_way(values: &[Vec<f64>]) -> Result<OneWayResult, StatsError> {
    let k = check_matrix(values)?;
    let n = values.len();
    let nf = n as f64;
    let kf = k as f64;
    let grand = values.iter().flatten().sum::<f64>() / (nf * kf);
    let subj: Vec<f64> = values.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let level: Vec<f64> = (0..k).map(|j| values.iter().map(|r| r[j]).sum::<f64>() / nf).collect();

    let ss_total: f64 = values.iter().flatten().map(|v| (v - grand) * (v - grand)).sum();
    let ss_subjects = kf * subj.iter().map(|s| (s - grand) * (s - grand)).sum::<f64>();
    let ss_effect = nf * level.iter().map(|l| (l - grand) * (l - grand)).sum::<f64>();
    let mut ss_error = 0.0;
    for (s, row) in values.iter().enumerate() {
        for j in 0..k {
            let r = row[j] - subj[s] - level[j] + grand;
            ss_error += r * r;
        }
    }
    let eps = gg_epsilon_detail(values)?;
    let df1 = kf - 1.0;
    let df2 = (kf - 1.0) * (nf - 1.0);
    Ok(OneWayResult {
        effect: EffectResult::build(ss_effect, ss_error, df1, df2, eps, ss_total),
        ss_subjects,
        ss_total,
    })
}

fn check_cube(values: &[Vec<Vec<f64>>]) -> Result<(usize, usize), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewSubjects);
    }
    let a = values[0].len();
    if a < 2 {
        return Err(StatsError::TooFewLevels);
    }
    let b = values[0][0].len();
    if b < 2 {
        return Err(StatsError::TooFewLevels);
    }
    for s in values {
        if s.len() != a || s.iter().any(|r| r.len() != b) {
            return Err(StatsError::Ragged);
        }
        if s.iter().flatten().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
    }
    Ok((a, b))
}

/// Two-way fully within-subject ANOVA on `values[subject][a][b]`. Each
/// effect is tested against its own effect-by-subject interaction.
pub fn rm_anova_two_way(values: &[Vec<Vec<f64>>]) -> Result<TwoWayResult, StatsError> {
    let (a, b) = check_cube(values)?;
    let n = values.len();
    let (nf, af, bf) = (n as f64, a as f64, b as f64);

    let grand = values.iter().flatten().flatten().sum::<f64>() / (nf * af * bf);
    let s_mean: Vec<f64> = values.iter().map(|s| s.iter().flatten().sum::<f64>() / (af * bf)).collect();
    let sa: Vec<Vec<f64>> = values.iter().map(|s| s.iter().map(|r| r.iter().sum::<f64>() / bf).collect()).collect();
    let sb: Vec<Vec<f64>> =
        values.iter().map(|s| (0..b).map(|j| s.iter().map(|r| r[j]).sum::<f64>() / af).collect()).collect();
    let cell: Vec<Vec<f64>> =
        (0..a).map(|i| (0..b).map(|j| values.iter().map(|s| s[i][j]).sum::<f64>() / nf).collect()).collect();
    let a_mean: Vec<f64> = (0..a).map(|i| cell[i].iter().sum::<f64>() / bf).collect();
    let b_mean: Vec<f64> = (0..b).map(|j| cell.iter().map(|r| r[j]).sum::<f64>() / af).collect();

    let sq = |x: f64| x * x;
    let ss_total: f64 = values.iter().flatten().flatten().map(|v| sq(v - grand)).sum();
    let ss_subjects = af * bf * s_mean.iter().map(|m| sq(m - grand)).sum::<f64>();
    let ss_a = nf * bf * a_mean.iter().map(|m| sq(m - grand)).sum::<f64>();
    let ss_b = nf * af * b_mean.iter().map(|m| sq(m - grand)).sum::<f64>();
    let mut ss_ab = 0.0;
    for i in 0..a {
        for j in 0..b {
            ss_ab += sq(cell[i][j] - a_mean[i] - b_mean[j] + grand);
        }
    }
    ss_ab *= nf;
    let (mut ss_as, mut ss_bs, mut ss_abs) = (0.0, 0.0, 0.0);
    for s in 0..n {
        for i in 0..a {
            ss_as += sq(sa[s][i] - s_mean[s] - a_mean[i] + grand);
        }
        for j in 0..b {
            ss_bs += sq(sb[s][j] - s_mean[s] - b_mean[j] + grand);
        }
        for i in 0..a {
            for j in 0..b {
                ss_abs +=
                    sq(values[s][i][j] - sa[s][i] - sb[s][j] - cell[i][j] + s_mean[s] + a_mean[i] + b_mean[j] - grand);
            }
        }
    }
    ss_as *= bf;
    ss_bs *= af;

    let eps_a = gg_epsilon_detail(&sa)?;
    let eps_b = gg_epsilon_detail(&sb)?;
    let eps_ab = interaction_epsilon(values, a, b);

    let dn = nf - 1.0;
    Ok(TwoWayResult {
        a: EffectResult::build(ss_a, ss_as, af - 1.0, (af - 1.0) * dn, eps_a, ss_total),
        b: EffectResult::build(ss_b, ss_bs, bf - 1.0, (bf - 1.0) * dn, eps_b, ss_total),
        ab: EffectResult::build(ss_ab, ss_abs, (af - 1.0) * (bf - 1.0), (af - 1.0) * (bf - 1.0) * dn, eps_ab, ss_total),
        ss_subjects,
        ss_total,
    })
}

fn interaction_epsilon(values: &[Vec<Vec<f64>>], a: usize, b: usize) -> Epsilon {
    let ha = helmert(a);
    let hb = helmert(b);
    let scores: Vec<Vec<f64>> = values
        .iter()
        .map(|s| {
            let mut out = Vec::with_capacity((a - 1) * (b - 1));
            for ca in &ha {
                for cb in &hb {
                    let mut v = 0.0;
                    for i in 0..a {
                        for j in 0..b {
                            v += ca[i] * cb[j] * s[i][j];
                        }
                    }
                    out.push(v);
                }
            }
            out
        })
        .collect();
    epsilon_from_contrast_scores(&scores)
}

/// One-way ANOVA on factor A at each level of B.
pub fn simple_effects_a(values: &[Vec<Vec<f64>>]) -> Result<Vec<OneWayResult>, StatsError> {
    let (_, b) = check_cube(values)?;
    (0..b).map(|j| rm_anova_one_way(&slice_at_b(values, j))).collect()
}

/// One-way ANOVA on factor B at each level of A.
pub fn simple_effects_b(values: &[Vec<Vec<f64>>]) -> Result<Vec<OneWayResult>, StatsError> {
    let (a, _) = check_cube(values)?;
    (0..a).map(|i| rm_anova_one_way(&slice_at_a(values, i))).collect()
}

/// `values[s][*][j]` as a subject-by-A matrix.
pub fn slice_at_b(values: &[Vec<Vec<f64>>], j: usize) -> Vec<Vec<f64>> {
    values.iter().map(|s| s.iter().map(|r| r[j]).collect()).collect()
}

/// `values[s][i][*]` as a subject-by-B matrix.
pub fn slice_at_a(values: &[Vec<Vec<f64>>], i: usize) -> Vec<Vec<f64>> {
    values.iter().map(|s| s[i].clone()).collect()
}

/// Subject-by-A matrix of means over B.
pub fn collapse_b(values: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    values.iter().map(|s| s.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()).collect()
}

/// Subject-by-B matrix of means over A.
pub fn collapse_a(values: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    values
        .iter()
        .map(|s| {
            let b = s[0].len();
            (0..b).map(|j| s.iter().map(|r| r[j]).sum::<f64>() / s.len() as f64).collect()
        })
        .collect()
}
