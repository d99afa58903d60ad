//! What to run: experiment id, noise source, shots, seed, mitigators and
//! the per-experiment knobs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qmitigate_core::sim::NoiseProfile;
use qmitigate_core::MitigatorSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const PAPER_LIKE: &str = include_str!("../../../profiles/paper-like.json");
const NOISELESS: &str = include_str!("../../../profiles/noiseless.json");

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("unknown experiment {0:?}; expected one of {ids}", ids = ExperimentId::ALL.map(|i| i.as_str()).join(", "))]
    UnknownExperiment(String),
    #[error("at least one mitigator is required")]
    NoMitigators,
    #[error("shots must be at least 1")]
    ZeroShots,
    #[error("invalid parameter {name}: {reason}")]
    Param { name: &'static str, reason: String },
    #[error("cannot load noise profile {source_name}: {reason}")]
    Noise { source_name: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    GhzDemo,
    Probs,
    BvSweep,
    DynamicBv,
    Trotter,
    VqeBasic,
    HeisenbergVqe,
}

impl ExperimentId {
    pub const ALL: [Self; 7] =
        [Self::GhzDemo, Self::Probs, Self::BvSweep, Self::DynamicBv, Self::Trotter, Self::VqeBasic, Self::HeisenbergVqe];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GhzDemo => "ghz-demo",
            Self::Probs => "probs",
            Self::BvSweep => "bv-sweep",
            Self::DynamicBv => "dynamic-bv",
            Self::Trotter => "trotter",
            Self::VqeBasic => "vqe-basic",
            Self::HeisenbergVqe => "heisenberg-vqe",
        }
    }

    pub fn default_shots(self) -> u64 {
        match self {
            Self::DynamicBv => 10_000,
            _ => 2048,
        }
    }

    /// Mitigators used when the caller names none.
    pub fn default_mitigators(self) -> Vec<MitigatorSpec> {
        let parse = |s: &str| s.parse::<MitigatorSpec>().expect("built-in mitigator");
        match self {
            Self::GhzDemo | Self::Probs => vec![parse("raw"), parse("filter:3%"), parse("m3")],
            Self::BvSweep => vec![parse("raw"), parse("filter:1%"), parse("filter:2%"), parse("m3")],
            _ => vec![parse("raw"), parse("filter:1%"), parse("m3")],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| SpecError::UnknownExperiment(s.to_string()))
    }
}

/// Where the noise profile comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSource {
    PaperLike,
    Noiseless,
    File(PathBuf),
}

impl NoiseSource {
    pub fn load(&self) -> Result<NoiseProfile, SpecError> {
        let loaded = match self {
            Self::PaperLike => NoiseProfile::from_json_str(PAPER_LIKE),
            Self::Noiseless => NoiseProfile::from_json_str(NOISELESS),
            Self::File(path) => NoiseProfile::load(path),
        };
        loaded.map_err(|e| SpecError::Noise { source_name: self.to_string(), reason: e.to_string() })
    }
}

impl fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PaperLike => f.write_str("paper-like"),
            Self::Noiseless => f.write_str("noiseless"),
            Self::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for NoiseSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "paper-like" => Self::PaperLike,
            "noiseless" => Self::Noiseless,
            path => Self::File(path.into()),
        })
    }
}

/// Experiment-specific knobs. Unset fields take per-experiment defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Sweep widths for the BV experiments.
    pub widths: Option<Vec<usize>>,
    /// Paired-seed repetitions per sweep point.
    pub trials: Option<usize>,
    /// Trotter step counts.
    pub steps: Option<Vec<usize>>,
    /// Trotter total evolution time.
    pub time: Option<f64>,
    /// Qubits in the GHZ experiments and the Heisenberg ring.
    pub qubits: Option<usize>,
    pub max_iters: Option<usize>,
    pub calibration_shots: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub noise: NoiseSource,
    pub shots: u64,
    pub seed: u64,
    pub mitigators: Vec<MitigatorSpec>,
    #[serde(default)]
    pub params: ExperimentParams,
}

impl ExperimentSpec {
    /// A spec with the experiment's defaults and the paper-like noise profile.
    pub fn new(id: ExperimentId) -> Self {
        Self {
            id,
            noise: NoiseSource::PaperLike,
            shots: id.default_shots(),
            seed: 0,
            mitigators: id.default_mitigators(),
            params: ExperimentParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.mitigators.is_empty() {
            return Err(SpecError::NoMitigators);
        }
        if self.shots == 0 {
            return Err(SpecError::ZeroShots);
        }
        let p = &self.params;
        if p.trials == Some(0) {
            return Err(param("trials", "must be at least 1"));
        }
        if p.max_iters == Some(0) {
            return Err(param("max_iters", "must be at least 1"));
        }
        if p.calibration_shots == Some(0) {
            return Err(param("calibration_shots", "must be at least 1"));
        }
        if let Some(t) = p.time {
            if !t.is_finite() || t < 0.0 {
                return Err(param("time", "must be finite and non-negative"));
            }
        }
        if let Some(w) = &p.widths {
            if w.is_empty() || w.contains(&0) {
                return Err(param("widths", "must be a non-empty list of positive widths"));
            }
        }
        if let Some(s) = &p.steps {
            if s.is_empty() || s.contains(&0) {
                return Err(param("steps", "must be a non-empty list of positive step counts"));
            }
        }
        Ok(())
    }

    pub fn trials(&self) -> usize {
        let paired = matches!(self.id, ExperimentId::BvSweep | ExperimentId::DynamicBv | ExperimentId::Trotter | ExperimentId::VqeBasic);
        self.params.trials.unwrap_or(if paired { 10 } else { 1 })
    }

    pub fn widths(&self) -> Vec<usize> {
        self.params.widths.clone().unwrap_or_else(|| match self.id {
            ExperimentId::DynamicBv => (2..=15).collect(),
            _ => (3..=7).collect(),
        })
    }

    pub fn steps(&self) -> Vec<usize> {
        self.params.steps.clone().unwrap_or_else(|| vec![1, 2, 4, 8])
    }

    pub fn time(&self) -> f64 {
        self.params.time.unwrap_or(1.0)
    }

    pub fn qubits(&self) -> usize {
        self.params.qubits.unwrap_or(match self.id {
            ExperimentId::Probs => 5,
            _ => 3,
        })
    }

    pub fn max_iters(&self) -> usize {
        self.params.max_iters.unwrap_or(100)
    }

    pub fn calibration_shots(&self) -> u64 {
        self.params.calibration_shots.unwrap_or(10_000)
    }
}

fn param(name: &'static str, reason: &str) -> SpecError {
    SpecError::Param { name, reason: reason.to_string() }
}

/// Parses `3-7`, `2,4,8` or a single number.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    let bad = |_| format!("expected a number, a range a-b or a comma list, got {s:?}");
    if let Some((a, b)) = s.split_once('-') {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|part| part.trim().parse().map_err(bad)).collect()
}
