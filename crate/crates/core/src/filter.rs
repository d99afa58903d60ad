//! Intensity-filter readout mitigation.
//!
//! Outcome probabilities are read as grayscale pixel intensities in `[0, 1]`
//! and passed through a clipped linear contrast stretch from an input range
//! `[low, high]` onto `[0, 1]`. Weak (noisy) outcomes below `low` go dark,
//! strong ones above `high` saturate, and the survivors are renormalized and
//! turned back into counts at the original shot total.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{counts_to_probs, largest_remainder, BitString, Counts, DistError, ProbDist};

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("invalid intensity range ({low}, {high}): need 0 <= low < high <= 1")]
    InvalidRange { low: f64, high: f64 },
    #[error("cannot parse intensity range {0:?}: expected `low,high` or `k%`")]
    Parse(String),
    #[error("filter annihilated distribution: every probability is at or below {range}; retry with a narrower range")]
    Annihilated { range: IntensityRange },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Input intensity window of the contrast stretch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "RangeRepr")]
pub struct IntensityRange {
    low: f64,
    high: f64,
}

#[derive(Serialize, Deserialize)]
struct RangeRepr {
    low: f64,
    high: f64,
}

impl TryFrom<RangeRepr> for IntensityRange {
    type Error = FilterError;

    fn try_from(r: RangeRepr) -> Result<Self, Self::Error> {
        Self::new(r.low, r.high)
    }
}

impl From<IntensityRange> for RangeRepr {
    fn from(r: IntensityRange) -> Self {
        RangeRepr { low: r.low, high: r.high }
    }
}

impl IntensityRange {
    pub fn new(low: f64, high: f64) -> Result<Self, FilterError> {
        if !(low.is_finite() && high.is_finite() && 0.0 <= low && low < high && high <= 1.0) {
            return Err(FilterError::InvalidRange { low, high });
        }
        Ok(Self { low, high })
    }

    /// `k%` shorthand: `(k/100, 1 − k/100)`.
    pub fn percent(k: f64) -> Result<Self, FilterError> {
        Self::new(k / 100.0, 1.0 - k / 100.0)
    }

    /// The full range; the filter is then the identity.
    pub fn identity() -> Self {
        Self { low: 0.0, high: 1.0 }
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    /// Maps one intensity through the clipped stretch.
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v.clamp(self.low, self.high) - self.low) / (self.high - self.low)
    }
}

impl Default for IntensityRange {
    fn default() -> Self {
        Self { low: 0.01, high: 0.99 }
    }
}

impl fmt::Display for IntensityRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.low, self.high)
    }
}

impl FromStr for IntensityRange {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(k) = t.strip_suffix('%') {
            let k: f64 = k.trim().parse().map_err(|_| FilterError::Parse(s.to_string()))?;
            return Self::percent(k);
        }
        let t = t.trim_start_matches('(').trim_end_matches(')');
        let (lo, hi) = t.split_once(',').ok_or_else(|| FilterError::Parse(s.to_string()))?;
        let lo: f64 = lo.trim().parse().map_err(|_| FilterError::Parse(s.to_string()))?;
        let hi: f64 = hi.trim().parse().map_err(|_| FilterError::Parse(s.to_string()))?;
        Self::new(lo, hi)
    }
}

/// Everything one filter pass produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub range: IntensityRange,
    pub input: ProbDist,
    /// Stretched intensities before renormalization.
    pub rescaled: IndexMap<BitString, f64>,
    pub output: ProbDist,
    pub counts: Counts,
    /// Outcomes whose stretched intensity is zero.
    pub zeroed: Vec<BitString>,
    pub elapsed_ms: f64,
}

/// Applies the clipped stretch to every entry; key order is preserved.
pub fn rescale_intensity(p: &ProbDist, range: IntensityRange) -> IndexMap<BitString, f64> {
    p.iter().map(|(k, v)| (*k, range.apply(v))).collect()
}

/// Counts → probabilities → stretch → renormalize → counts at the same shots.
/// The output distribution and counts hold only the surviving outcomes.
pub fn mitigate_counts(counts: &Counts, range: IntensityRange) -> Result<FilterReport, FilterError> {
    let start = Instant::now();
    let input = counts_to_probs(counts)?;
    let mut rescaled = input.entries().clone();
    rescaled.values_mut().for_each(|v| *v = range.apply(*v));
    let total: f64 = rescaled.values().sum();
    if total <= 0.0 {
        return Err(FilterError::Annihilated { range });
    }
    // Zeroed outcomes are listed in the report and left out of the output.
    let normalized: IndexMap<BitString, f64> =
        rescaled.iter().filter(|(_, &v)| v > 0.0).map(|(k, &v)| (*k, v / total)).collect();
    let output = ProbDist::new(normalized)?;
    let keys: Vec<&BitString> = output.entries().keys().collect();
    let tallies = largest_remainder(output.entries().values().copied(), &keys, counts.shots());
    let mitigated = Counts::new(keys.into_iter().copied().zip(tallies).collect(), counts.shots())?;
    let zeroed = rescaled.iter().filter(|(_, &v)| v == 0.0).map(|(k, _)| *k).collect();
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(FilterReport { range, input, rescaled, output, counts: mitigated, zeroed, elapsed_ms })
}
