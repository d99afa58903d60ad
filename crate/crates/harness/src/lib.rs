//! Experiment runner for the readout-mitigation comparisons: builds
//! circuits, samples them under a noise profile, applies each mitigator to
//! the same counts and reports metrics, timings and charts.

pub mod emit;
pub mod experiments;
pub mod report;
pub mod spec;

pub use emit::{emit_report, Format};
pub use experiments::{run_experiment, ExperimentError};
pub use report::ExperimentReport;
pub use spec::{ExperimentId, ExperimentSpec, NoiseSource};
