//! Readout-error mitigation for quantum measurement counts.
//!
//! The main tool is an intensity filter ([`filter`]) that treats outcome
//! probabilities as grayscale pixels and applies a clipped contrast stretch.
//! Around it sit a reduced-subspace confusion-matrix baseline ([`m3`]), a
//! small noisy statevector simulator ([`sim`]), the circuit families used in
//! experiments ([`circuits`]), and a VQE driver ([`vqe`]).

pub mod circuits;
pub mod dist;
pub mod filter;
pub mod m3;
pub mod mitigation;
pub mod seeds;
pub mod sim;
pub mod vqe;

pub use dist::{BitString, Counts, ProbDist, QuasiDist};
pub use filter::{mitigate_counts, FilterReport, IntensityRange};
pub use mitigation::{Mitigated, MitigatorSpec};
pub use sim::{Circuit, NoiseProfile};
