//! Uniform front for the three counts post-processing choices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{counts_to_probs, BitString, Counts, DistError, ProbDist, QuasiDist};
use crate::filter::{mitigate_counts, FilterError, IntensityRange};
use crate::m3::{mitigate_m3, quasi_to_nearest_probs, M3Error, M3Method, QubitCalibration};

#[derive(Debug, Error, PartialEq)]
pub enum MitigationError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    M3(#[from] M3Error),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("m3 mitigation needs a readout calibration")]
    MissingCalibration,
    #[error("unknown mitigator {0:?}: expected raw, filter[:<low,high|k%>] or m3[:direct|iterative]")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MitigatorSpec {
    Raw,
    Filter { range: IntensityRange },
    M3 { method: M3Method },
}

impl MitigatorSpec {
    pub fn needs_calibration(&self) -> bool {
        matches!(self, Self::M3 { .. })
    }

    pub fn apply(&self, counts: &Counts, cal: Option<&[QubitCalibration]>) -> Result<Mitigated, MitigationError> {
        match self {
            Self::Raw => Ok(Mitigated::Probs(counts_to_probs(counts)?)),
            Self::Filter { range } => Ok(Mitigated::Probs(mitigate_counts(counts, *range)?.output)),
            Self::M3 { method } => {
                let cal = cal.ok_or(MitigationError::MissingCalibration)?;
                Ok(Mitigated::Quasi(mitigate_m3(counts, cal, *method)?))
            }
        }
    }
}

impl fmt::Display for MitigatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Raw => f.write_str("raw"),
            Self::Filter { range } => write!(f, "filter:{},{}", range.low(), range.high()),
            Self::M3 { method } => write!(f, "m3:{method}"),
        }
    }
}

impl FromStr for MitigatorSpec {
    type Err = MitigationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("raw" | "none", None) => Ok(Self::Raw),
            ("filter", None) => Ok(Self::Filter { range: IntensityRange::default() }),
            ("filter", Some(r)) => Ok(Self::Filter { range: r.parse()? }),
            ("m3", None) => Ok(Self::M3 { method: M3Method::Direct }),
            ("m3", Some(m)) => Ok(Self::M3 { method: m.parse()? }),
            _ => Err(MitigationError::Parse(s.to_string())),
        }
    }
}

/// Output of a mitigator.
#[derive(Clone, Debug, PartialEq)]
pub enum Mitigated {
    Probs(ProbDist),
    Quasi(QuasiDist),
}

impl Mitigated {
    /// Parity expectation; quasi-distributions are used as-is.
    pub fn parity_expectation(&self, mask: &BitString) -> Result<f64, DistError> {
        match self {
            Self::Probs(p) => crate::dist::parity_expectation(p, mask),
            Self::Quasi(q) => q.parity_expectation(mask),
        }
    }

    /// A proper distribution for metrics (negatives clipped for M3 output).
    pub fn into_probs(self) -> Result<ProbDist, MitigationError> {
        match self {
            Self::Probs(p) => Ok(p),
            Self::Quasi(q) => Ok(quasi_to_nearest_probs(&q)?),
        }
    }
}
