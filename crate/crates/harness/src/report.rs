//! Structured experiment results.

use indexmap::IndexMap;
use qmitigate_core::sim::NoiseProfile;
use serde::{Deserialize, Serialize};

use crate::spec::ExperimentSpec;

/// Mean of the per-trial samples of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub samples: Vec<f64>,
}

impl Summary {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let mean = if samples.is_empty() { f64::NAN } else { samples.iter().sum::<f64>() / samples.len() as f64 };
        Self { mean, samples }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ok { metrics: IndexMap<String, Summary> },
    Failed { reason: String },
}

/// Wall time summed over trials, in microseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub calibration_us: u64,
    pub correction_us: u64,
}

/// Results for one (mitigator, configuration) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub mitigator: String,
    /// Human-readable configuration label, e.g. `width=5`.
    pub config: String,
    /// Numeric sweep coordinate for plotting.
    pub x: f64,
    pub outcome: Outcome,
    pub timings: Timings,
}

impl ConfigResult {
    pub fn metric(&self, name: &str) -> Option<&Summary> {
        match &self.outcome {
            Outcome::Ok { metrics } => metrics.get(name),
            Outcome::Failed { .. } => None,
        }
    }
}

/// A labelled distribution, used for before/after charts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub label: String,
    pub values: IndexMap<String, f64>,
}

/// Energy per optimizer sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub label: String,
    pub energies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvStamp {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub unix_time: u64,
}

impl EnvStamp {
    pub fn current() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub noise: NoiseProfile,
    pub results: Vec<ConfigResult>,
    /// Reference values the metrics are judged against (exact energies etc).
    pub references: IndexMap<String, f64>,
    pub distributions: Vec<DistributionRecord>,
    pub traces: Vec<TraceRecord>,
    /// Outcomes the filter removed, per mitigator label.
    pub zeroed: IndexMap<String, Vec<String>>,
    /// Free-form caveats, e.g. stand-in models.
    pub notes: Vec<String>,
    pub env: EnvStamp,
}

impl ExperimentReport {
    /// The result for a mitigator label and configuration label.
    pub fn result(&self, mitigator: &str, config: &str) -> Option<&ConfigResult> {
        self.results.iter().find(|r| r.mitigator == mitigator && r.config == config)
    }

    pub fn mean(&self, mitigator: &str, config: &str, metric: &str) -> Option<f64> {
        self.result(mitigator, config)?.metric(metric).map(|s| s.mean)
    }

    /// Distinct configuration labels in first-seen order.
    pub fn configs(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.results {
            if !seen.contains(&r.config.as_str()) {
                seen.push(&r.config);
            }
        }
        seen
    }

    /// Distinct mitigator labels in first-seen order.
    pub fn mitigators(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.results {
            if !seen.contains(&r.mitigator.as_str()) {
                seen.push(&r.mitigator);
            }
        }
        seen
    }

    /// Metric names in first-seen order.
    pub fn metric_names(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.results {
            if let Outcome::Ok { metrics } = &r.outcome {
                for name in metrics.keys() {
                    if !seen.contains(&name.as_str()) {
                        seen.push(name);
                    }
                }
            }
        }
        seen
    }

    /// The same report with all wall-clock fields zeroed, for comparing
    /// runs.
    pub fn without_timings(&self) -> Self {
        let mut copy = self.clone();
        for r in &mut copy.results {
            r.timings = Timings::default();
        }
        copy.env = EnvStamp { unix_time: 0, ..copy.env };
        copy
    }
}
