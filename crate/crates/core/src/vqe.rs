//! Energy estimation from (mitigated) counts and the Nakanishi-Fujii-Todo
//! sequential optimizer.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::circuits::{
    basis_rotation, efficient_su2, efficient_su2_param_count, two_local, two_local_param_count, CircuitError,
    Hamiltonian, PauliTerm,
};
use crate::dist::DistError;
use crate::m3::{calibrate, M3Error, QubitCalibration};
use crate::mitigation::{MitigationError, MitigatorSpec};
use crate::seeds::derive_seed;
use crate::sim::{run_shots, Circuit, NoiseProfile, SimError};

/// Largest width `exact_ground_energy` will diagonalize.
pub const MAX_EXACT_WIDTH: usize = 12;
/// Sweep improvement below which NFT stops.
pub const NFT_TOLERANCE: f64 = 1e-6;
/// Amplitude below which a coordinate's sinusoid is treated as flat.
pub const NFT_FLAT: f64 = 1e-12;
/// Shots used to calibrate readout for the M3 mitigator inside VQE.
pub const CALIBRATION_SHOTS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum VqeError {
    #[error("ansatz has {ansatz} qubits but the Hamiltonian has {hamiltonian}")]
    WidthMismatch { ansatz: usize, hamiltonian: usize },
    #[error("exact diagonalization supports at most {MAX_EXACT_WIDTH} qubits, got {0}")]
    TooWide(usize),
    #[error("mitigation failed on term {term}: {source}")]
    Mitigation { term: String, source: MitigationError },
    #[error("invalid vqe config: {0}")]
    Config(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    M3(#[from] M3Error),
}

/// `Σ coeff·⟨term⟩`, one measurement circuit per term. Term `i` samples
/// with the seed `derive_seed(seed, "term", i)`.
pub fn estimate_energy(
    h: &Hamiltonian,
    ansatz: &Circuit,
    noise: &NoiseProfile,
    shots: u64,
    mitigator: &MitigatorSpec,
    cal: Option<&[QubitCalibration]>,
    seed: u64,
) -> Result<f64, VqeError> {
    let mut unused = Duration::ZERO;
    estimate_energy_timed(h, ansatz, noise, shots, mitigator, cal, seed, &mut unused)
}

#[allow(clippy::too_many_arguments)]
fn estimate_energy_timed(
    h: &Hamiltonian,
    ansatz: &Circuit,
    noise: &NoiseProfile,
    shots: u64,
    mitigator: &MitigatorSpec,
    cal: Option<&[QubitCalibration]>,
    seed: u64,
    mitigation_time: &mut Duration,
) -> Result<f64, VqeError> {
    if ansatz.num_qubits() != h.width() {
        return Err(VqeError::WidthMismatch { ansatz: ansatz.num_qubits(), hamiltonian: h.width() });
    }
    let mut energy = 0.0;
    for (i, term) in h.terms().iter().enumerate() {
        let seed = derive_seed(seed, "term", i as u64);
        energy += term.coefficient * term_expectation(term, ansatz, noise, shots, mitigator, cal, seed, mitigation_time)?;
    }
    Ok(energy)
}

#[allow(clippy::too_many_arguments)]
fn term_expectation(
    term: &PauliTerm,
    ansatz: &Circuit,
    noise: &NoiseProfile,
    shots: u64,
    mitigator: &MitigatorSpec,
    cal: Option<&[QubitCalibration]>,
    seed: u64,
    mitigation_time: &mut Duration,
) -> Result<f64, VqeError> {
    if term.support().is_empty() {
        return Ok(1.0);
    }
    let mut circuit = ansatz.clone();
    circuit.append(&basis_rotation(term.paulis())?)?;
    circuit.measure_all();
    let counts = run_shots(&circuit, noise, shots, seed)?;
    let start = Instant::now();
    let mitigated = mitigator
        .apply(&counts, cal)
        .map_err(|source| VqeError::Mitigation { term: term.to_string(), source })?;
    let value = mitigated.parity_expectation(&term.mask())?;
    *mitigation_time += start.elapsed();
    Ok(value)
}

/// Noiseless, infinite-shot energy `⟨ψ|H|ψ⟩` of the ansatz state.
pub fn exact_energy(h: &Hamiltonian, ansatz: &Circuit) -> Result<f64, VqeError> {
    if ansatz.num_qubits() != h.width() {
        return Err(VqeError::WidthMismatch { ansatz: ansatz.num_qubits(), hamiltonian: h.width() });
    }
    Ok(h.expectation(&ansatz.statevector()?))
}

/// Smallest eigenvalue of the dense Hamiltonian matrix.
pub fn exact_ground_energy(h: &Hamiltonian) -> Result<f64, VqeError> {
    if h.width() > MAX_EXACT_WIDTH {
        return Err(VqeError::TooWide(h.width()));
    }
    let eig = h.to_matrix().symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub final_energy: f64,
    pub final_params: Vec<f64>,
    /// Cost at the initial point, then after every sweep.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Cyclic coordinate minimization for costs that are 2π-periodic sinusoids
/// in each parameter.
///
/// For coordinate `j` at `θ` the cost is sampled at `θ`, `θ + π/2` and
/// `θ − π/2`, fitted as `c0 + R·cos(θ − φ)`, and `θ` jumps to the fitted
/// minimum `φ + π`. One iteration is a full sweep; the loop stops after
/// `max_iters` sweeps or when a sweep improves the cost by less than
/// [`NFT_TOLERANCE`].
pub fn nft_minimize<F, E>(mut cost: F, init: &[f64], max_iters: usize) -> Result<VqeResult, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    let mut params = init.to_vec();
    let mut evaluations = 0;
    let mut eval = |p: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        cost(p)
    };
    let mut current = eval(&params, &mut evaluations)?;
    let mut trace = vec![current];
    for _ in 0..max_iters {
        for j in 0..params.len() {
            let theta = params[j];
            let mut probe = params.clone();
            let e0 = eval(&probe, &mut evaluations)?;
            probe[j] = theta + PI / 2.0;
            let e_plus = eval(&probe, &mut evaluations)?;
            probe[j] = theta - PI / 2.0;
            let e_minus = eval(&probe, &mut evaluations)?;
            let c0 = 0.5 * (e_plus + e_minus);
            let (a, b) = (e0 - c0, 0.5 * (e_plus - e_minus));
            if a.hypot(b) < NFT_FLAT {
                continue;
            }
            params[j] = (theta + b.atan2(a) + PI).rem_euclid(TAU);
        }
        let next = eval(&params, &mut evaluations)?;
        trace.push(next);
        let improvement = current - next;
        current = next;
        if improvement < NFT_TOLERANCE {
            break;
        }
    }
    Ok(VqeResult { final_energy: current, final_params: params, trace, evaluations })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ansatz {
    TwoLocal,
    EfficientSu2 { reps: usize },
}

impl Ansatz {
    pub fn param_count(&self, n: usize) -> usize {
        match self {
            Self::TwoLocal => two_local_param_count(n),
            Self::EfficientSu2 { reps } => efficient_su2_param_count(n, *reps),
        }
    }

    pub fn build(&self, n: usize, params: &[f64]) -> Result<Circuit, CircuitError> {
        match self {
            Self::TwoLocal => two_local(n, params),
            Self::EfficientSu2 { reps } => efficient_su2(n, *reps, params),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    #[serde(serialize_with = "ser_hamiltonian", deserialize_with = "de_hamiltonian")]
    pub hamiltonian: Hamiltonian,
    pub ansatz: Ansatz,
    pub initial_params: Vec<f64>,
    /// Shots per term per evaluation; `None` evaluates the exact
    /// noiseless expectation instead of sampling.
    pub shots: Option<u64>,
    /// Device noise when sampling; `None` means noiseless.
    #[serde(default)]
    pub noise: Option<NoiseProfile>,
    pub mitigator: MitigatorSpec,
    pub max_iters: usize,
    pub seed: u64,
}

fn ser_hamiltonian<S: Serializer>(h: &Hamiltonian, s: S) -> Result<S::Ok, S::Error> {
    let pairs: Vec<(f64, &str)> = h.terms().iter().map(|t| (t.coefficient, t.paulis())).collect();
    pairs.serialize(s)
}

fn de_hamiltonian<'de, D: Deserializer<'de>>(d: D) -> Result<Hamiltonian, D::Error> {
    let pairs: Vec<(f64, String)> = Vec::deserialize(d)?;
    let refs: Vec<(f64, &str)> = pairs.iter().map(|(c, p)| (*c, p.as_str())).collect();
    Hamiltonian::from_pairs(&refs).map_err(serde::de::Error::custom)
}

impl VqeConfig {
    pub fn validate(&self) -> Result<(), VqeError> {
        let n = self.hamiltonian.width();
        let expected = self.ansatz.param_count(n);
        if self.initial_params.len() != expected {
            return Err(VqeError::Config(format!(
                "{} initial parameters for a {expected}-parameter ansatz",
                self.initial_params.len()
            )));
        }
        if self.shots == Some(0) {
            return Err(VqeError::Config("shots must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(VqeError::Config("max_iters must be at least 1".into()));
        }
        if self.shots.is_none() && (self.noise.is_some() || self.mitigator != MitigatorSpec::Raw) {
            return Err(VqeError::Config("exact evaluation takes no noise profile or mitigator".into()));
        }
        Ok(())
    }
}

/// Wall time spent outside the circuit simulation during a VQE run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VqeTimings {
    pub calibration: Duration,
    /// Mitigation plus expectation arithmetic, summed over all evaluations.
    pub mitigation: Duration,
}

/// NFT over the configured energy estimator. Evaluation `k` samples with
/// `derive_seed(seed, "vqe-eval", k)`, so runs are bit-reproducible.
pub fn run_vqe(config: &VqeConfig) -> Result<VqeResult, VqeError> {
    run_vqe_timed(config).map(|(result, _)| result)
}

/// [`run_vqe`] that also reports calibration and mitigation time.
pub fn run_vqe_timed(config: &VqeConfig) -> Result<(VqeResult, VqeTimings), VqeError> {
    config.validate()?;
    let h = &config.hamiltonian;
    let n = h.width();
    let mut timings = VqeTimings::default();
    let Some(shots) = config.shots else {
        let result =
            nft_minimize(|p| exact_energy(h, &config.ansatz.build(n, p)?), &config.initial_params, config.max_iters)?;
        return Ok((result, timings));
    };
    let noise = config.noise.clone().unwrap_or_else(|| NoiseProfile::noiseless(n));
    let cal = if config.mitigator.needs_calibration() {
        let start = Instant::now();
        let cal = calibrate(&noise, n, CALIBRATION_SHOTS, derive_seed(config.seed, "vqe-calibration", 0))?;
        timings.calibration = start.elapsed();
        Some(cal)
    } else {
        None
    };
    let mut counter = 0u64;
    let mitigation = &mut timings.mitigation;
    let result = nft_minimize(
        |p| {
            let seed = derive_seed(config.seed, "vqe-eval", counter);
            counter += 1;
            let ansatz = config.ansatz.build(n, p)?;
            estimate_energy_timed(h, &ansatz, &noise, shots, &config.mitigator, cal.as_deref(), seed, mitigation)
        },
        &config.initial_params,
        config.max_iters,
    )?;
    Ok((result, timings))
}
