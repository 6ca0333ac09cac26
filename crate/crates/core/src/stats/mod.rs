//! Analysis statistics: descriptives, repeated-measures ANOVA, LSD
//! comparisons and power.

pub mod anova;
pub mod descriptive;
pub mod pairwise;
pub mod power;
pub mod special;

use core::fmt;

pub use anova::{gg_epsilon, rm_anova_one_way, rm_anova_two_way, EffectFlag, EffectResult, OneWayResult, TwoWayResult};
pub use descriptive::{descriptive, median, Descriptive};
pub use pairwise::{lsd_pairwise, stars, PairComparison, PairwiseResult};
pub use power::{achieved_power, required_sample_size, PowerQuery};
pub use special::noncentral_f_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsError {
    TooFewSubjects,
    TooFewLevels,
    Ragged,
    NonFinite,
    InvalidQuery,
    /// No sample size up to the search cap reaches the requested power.
    Unreachable,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatsError::TooFewSubjects => "at least two subjects are required",
            StatsError::TooFewLevels => "at least two levels are required",
            StatsError::Ragged => "data is not rectangular",
            StatsError::NonFinite => "data contains non-finite values",
            StatsError::InvalidQuery => "invalid power query",
            StatsError::Unreachable => "no sample size up to 10^6 reaches the requested power",
        };
        f.write_str(s)
    }
}

impl core::error::Error for StatsError {}
