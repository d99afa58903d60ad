//! Statevector simulation with per-shot stochastic Pauli noise and readout
//! flips.
//!
//! Qubit `k` is bit `k` of the amplitude index. Each shot runs its own
//! trajectory from a counter-derived random stream, so results are identical
//! whether shots execute sequentially or in parallel.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{BitString, Counts, ProbDist};
use crate::m3::QubitCalibration;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

const SHOT_CHUNK: u64 = 2048;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("classical bit {index} out of range for {num_clbits} bits")]
    ClbitIndex { index: usize, num_clbits: usize },
    #[error("{gate} expects {expected} target(s), got {found}")]
    Arity { gate: GateKind, expected: usize, found: usize },
    #[error("{gate} targets must be distinct")]
    RepeatedTarget { gate: GateKind },
    #[error("{gate} {}", if *.needs { "requires an angle" } else { "takes no angle" })]
    Angle { gate: GateKind, needs: bool },
    #[error("circuit has mid-circuit measurement, reset, or classical conditions; use run_shots")]
    Unsupported,
    #[error("circuit measures no qubits")]
    NoMeasurements,
    #[error("noise profile covers {profile} qubits but circuit has {circuit}")]
    ProfileTooSmall { profile: usize, circuit: usize },
    #[error("gate error probability {0} outside [0, 0.75]")]
    GateErrorRate(f64),
    #[error("invalid readout calibration for qubit {qubit}: {reason}")]
    Readout { qubit: usize, reason: String },
    #[error("shots must be positive")]
    ZeroShots,
    #[error("noise profile i/o: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Z,
    S,
    Sdg,
    CX,
    RX,
    RY,
    RZ,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CX => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::CX => "cx",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// For `CX`: `[control, target]`.
    pub targets: Vec<usize>,
    pub angle: Option<f64>,
    /// Apply only when this classical bit reads 1.
    pub condition: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: &[usize], angle: Option<f64>) -> Self {
        Self { kind, targets: targets.to_vec(), angle, condition: None }
    }

    pub fn conditioned_on(mut self, clbit: usize) -> Self {
        self.condition = Some(clbit);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Measure { qubit: usize, clbit: usize },
    Reset { qubit: usize },
    Barrier,
}

/// Ordered instruction list over `num_qubits` qubits and `num_clbits`
/// classical bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    num_clbits: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize, num_clbits: usize) -> Result<Self, SimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(SimError::QubitCount(num_qubits));
        }
        Ok(Self { num_qubits, num_clbits, instructions: Vec::new() })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_clbits(&self) -> usize {
        self.num_clbits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    fn check_qubit(&self, index: usize) -> Result<(), SimError> {
        if index >= self.num_qubits {
            return Err(SimError::QubitIndex { index, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    fn check_clbit(&self, index: usize) -> Result<(), SimError> {
        if index >= self.num_clbits {
            return Err(SimError::ClbitIndex { index, num_clbits: self.num_clbits });
        }
        Ok(())
    }

    /// Validates and appends an instruction.
    pub fn push(&mut self, instr: Instruction) -> Result<&mut Self, SimError> {
        match &instr {
            Instruction::Gate(g) => {
                if g.targets.len() != g.kind.arity() {
                    return Err(SimError::Arity {
                        gate: g.kind,
                        expected: g.kind.arity(),
                        found: g.targets.len(),
                    });
                }
                for &t in &g.targets {
                    self.check_qubit(t)?;
                }
                if g.targets.len() == 2 && g.targets[0] == g.targets[1] {
                    return Err(SimError::RepeatedTarget { gate: g.kind });
                }
                if g.kind.is_rotation() != g.angle.is_some() {
                    return Err(SimError::Angle { gate: g.kind, needs: g.kind.is_rotation() });
                }
                if let Some(c) = g.condition {
                    self.check_clbit(c)?;
                }
            }
            Instruction::Measure { qubit, clbit } => {
                self.check_qubit(*qubit)?;
                self.check_clbit(*clbit)?;
            }
            Instruction::Reset { qubit } => self.check_qubit(*qubit)?,
            Instruction::Barrier => {}
        }
        self.instructions.push(instr);
        Ok(self)
    }

    fn gate(&mut self, kind: GateKind, targets: &[usize], angle: Option<f64>) -> &mut Self {
        self.push(Instruction::Gate(Gate::new(kind, targets, angle)))
            .unwrap_or_else(|e| panic!("invalid gate: {e}"))
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::H, &[q], None)
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::X, &[q], None)
    }

    pub fn z(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::Z, &[q], None)
    }

    pub fn s(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::S, &[q], None)
    }

    pub fn sdg(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::Sdg, &[q], None)
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate(GateKind::CX, &[control, target], None)
    }

    pub fn rx(&mut self, q: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::RX, &[q], Some(theta))
    }

    pub fn ry(&mut self, q: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::RY, &[q], Some(theta))
    }

    pub fn rz(&mut self, q: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::RZ, &[q], Some(theta))
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> &mut Self {
        self.push(Instruction::Measure { qubit, clbit })
            .unwrap_or_else(|e| panic!("invalid measure: {e}"))
    }

    /// Measures qubit `k` into classical bit `k` for every qubit, growing the
    /// classical register if needed.
    pub fn measure_all(&mut self) -> &mut Self {
        self.num_clbits = self.num_clbits.max(self.num_qubits);
        for q in 0..self.num_qubits {
            self.measure(q, q);
        }
        self
    }

    pub fn reset(&mut self, qubit: usize) -> &mut Self {
        self.push(Instruction::Reset { qubit }).unwrap_or_else(|e| panic!("invalid reset: {e}"))
    }

    pub fn barrier(&mut self) -> &mut Self {
        self.instructions.push(Instruction::Barrier);
        self
    }

    /// Appends every instruction of `other`, which must fit this register.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self, SimError> {
        if other.num_qubits > self.num_qubits {
            return Err(SimError::QubitIndex { index: other.num_qubits - 1, num_qubits: self.num_qubits });
        }
        self.num_clbits = self.num_clbits.max(other.num_clbits);
        for instr in &other.instructions {
            self.push(instr.clone())?;
        }
        Ok(self)
    }

    /// True when measurements are terminal and nothing is classically
    /// conditioned or reset.
    pub fn is_terminal(&self) -> bool {
        let mut measured = false;
        for instr in &self.instructions {
            match instr {
                Instruction::Gate(g) => {
                    if measured || g.condition.is_some() {
                        return false;
                    }
                }
                Instruction::Measure { .. } => measured = true,
                Instruction::Reset { .. } => return false,
                Instruction::Barrier => {}
            }
        }
        true
    }

    fn measurements(&self) -> Vec<(usize, usize)> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Measure { qubit, clbit } => Some((*qubit, *clbit)),
                _ => None,
            })
            .collect()
    }

    fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.instructions.iter().filter_map(|i| match i {
            Instruction::Gate(g) => Some(g),
            _ => None,
        })
    }

    /// Noiseless final state of the unitary part; measurements are ignored.
    pub fn statevector(&self) -> Result<StateVector, SimError> {
        if !self.is_terminal() {
            return Err(SimError::Unsupported);
        }
        let mut state = StateVector::zero(self.num_qubits);
        for g in self.gates() {
            apply_gate(&mut state, g.kind, &g.targets, g.angle);
        }
        Ok(state)
    }
}

/// Dense `2^n` amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&num_qubits), "qubit count {num_qubits} out of range");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        let n = amps.len().trailing_zeros() as usize;
        assert!(amps.len().is_power_of_two() && (1..=MAX_QUBITS).contains(&n));
        Self { num_qubits: n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_x(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    fn apply_phase(&mut self, q: usize, phase: Complex64) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= phase;
            }
        }
    }

    fn apply_pauli(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::X => self.apply_x(q),
            Pauli::Z => self.apply_phase(q, Complex64::new(-1.0, 0.0)),
            Pauli::Y => {
                // Y = i·X·Z
                self.apply_phase(q, Complex64::new(-1.0, 0.0));
                self.apply_x(q);
                let i = Complex64::new(0.0, 1.0);
                self.amps.iter_mut().for_each(|a| *a *= i);
            }
        }
    }

    fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes.
    fn collapse(&mut self, q: usize, outcome: bool, prob: f64) {
        let bit = 1usize << q;
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn measure<R: Rng>(&mut self, q: usize, rng: &mut R) -> bool {
        let p1 = self.prob_one(q).clamp(0.0, 1.0);
        let outcome = rng.random::<f64>() < p1;
        let p = if outcome { p1 } else { 1.0 - p1 };
        self.collapse(q, outcome, p);
        outcome
    }

    fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return i;
            }
        }
        // Rounding left `acc` a hair below 1.
        self.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Applies one gate in place. `targets` is `[control, target]` for `CX`.
pub fn apply_gate(state: &mut StateVector, kind: GateKind, targets: &[usize], angle: Option<f64>) {
    let q = targets[0];
    match kind {
        GateKind::H => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            state.apply_1q(q, [[h, h], [h, -h]]);
        }
        GateKind::X => state.apply_x(q),
        GateKind::Z => state.apply_phase(q, c(-1.0, 0.0)),
        GateKind::S => state.apply_phase(q, c(0.0, 1.0)),
        GateKind::Sdg => state.apply_phase(q, c(0.0, -1.0)),
        GateKind::CX => {
            let (cbit, tbit) = (1usize << targets[0], 1usize << targets[1]);
            for i in 0..state.amps.len() {
                if i & cbit != 0 && i & tbit == 0 {
                    state.amps.swap(i, i | tbit);
                }
            }
        }
        GateKind::RX | GateKind::RY | GateKind::RZ => {
            let theta = angle.expect("rotation gate needs an angle");
            let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let m = match kind {
                GateKind::RX => [[c(cos, 0.0), c(0.0, -sin)], [c(0.0, -sin), c(cos, 0.0)]],
                GateKind::RY => [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]],
                _ => [[c(cos, -sin), c(0.0, 0.0)], [c(0.0, 0.0), c(cos, sin)]],
            };
            state.apply_1q(q, m);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn random<R: Rng>(rng: &mut R) -> Self {
        match rng.random_range(0..3) {
            0 => Pauli::X,
            1 => Pauli::Y,
            _ => Pauli::Z,
        }
    }
}

/// Readout and gate-error description of a noisy device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub readout: Vec<QubitCalibration>,
    /// Depolarizing probability per qubit after each single-qubit gate.
    pub p1: f64,
    /// Depolarizing probability per touched qubit after each two-qubit gate.
    pub p2: f64,
}

impl NoiseProfile {
    pub fn new(readout: Vec<QubitCalibration>, p1: f64, p2: f64) -> Result<Self, SimError> {
        let profile = Self { readout, p1, p2 };
        profile.validate()?;
        Ok(profile)
    }

    pub fn noiseless(num_qubits: usize) -> Self {
        Self { readout: vec![QubitCalibration::ideal(); num_qubits], p1: 0.0, p2: 0.0 }
    }

    /// Same readout error on every qubit.
    pub fn uniform(num_qubits: usize, e01: f64, e10: f64, p1: f64, p2: f64) -> Result<Self, SimError> {
        let cal = QubitCalibration::new(e01, e10)
            .map_err(|e| SimError::Readout { qubit: 0, reason: e.to_string() })?;
        Self::new(vec![cal; num_qubits], p1, p2)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for p in [self.p1, self.p2] {
            if !(0.0..=0.75).contains(&p) {
                return Err(SimError::GateErrorRate(p));
            }
        }
        for (qubit, cal) in self.readout.iter().enumerate() {
            QubitCalibration::new(cal.e01, cal.e10)
                .map_err(|e| SimError::Readout { qubit, reason: e.to_string() })?;
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.readout.iter().all(|c| c.e01 == 0.0 && c.e10 == 0.0)
    }

    pub fn from_json_str(s: &str) -> Result<Self, SimError> {
        let profile: Self = serde_json::from_str(s).map_err(|e| SimError::Io(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(e.to_string()))?;
        Self::from_json_str(&text)
    }

    fn gate_error_rate(&self, kind: GateKind) -> f64 {
        if kind.arity() == 2 {
            self.p2
        } else {
            self.p1
        }
    }

    fn readout_flip<R: Rng>(&self, qubit: usize, bit: bool, rng: &mut R) -> bool {
        let cal = &self.readout[qubit];
        let e = if bit { cal.e10 } else { cal.e01 };
        if e > 0.0 && rng.random::<f64>() < e {
            !bit
        } else {
            bit
        }
    }
}

/// Exact outcome distribution of a circuit with terminal measurements.
pub fn ideal_probabilities(circuit: &Circuit) -> Result<ProbDist, SimError> {
    let measurements = circuit.measurements();
    if measurements.is_empty() {
        return Err(SimError::NoMeasurements);
    }
    let state = circuit.statevector()?;
    let mut weights: HashMap<u64, f64> = HashMap::new();
    for (idx, p) in state.probabilities().into_iter().enumerate() {
        if p > 0.0 {
            *weights.entry(classical_word(idx, &measurements)).or_insert(0.0) += p;
        }
    }
    let mut keys: Vec<u64> = weights.keys().copied().filter(|k| weights[k] > 1e-14).collect();
    keys.sort_unstable();
    let entries: IndexMap<BitString, f64> = keys
        .into_iter()
        .map(|k| (BitString::from_index(k as usize, circuit.num_clbits), weights[&k]))
        .collect();
    Ok(ProbDist::normalized(entries).expect("statevector has unit norm"))
}

fn classical_word(basis_index: usize, measurements: &[(usize, usize)]) -> u64 {
    let mut word = 0u64;
    for &(q, c) in measurements {
        let bit = (basis_index >> q) & 1 == 1;
        word = (word & !(1 << c)) | (u64::from(bit) << c);
    }
    word
}

/// Key of the base generator; each shot reseeds from it with its own stream.
fn base_key(seed: u64) -> [u8; 32] {
    ChaCha8Rng::seed_from_u64(seed).get_seed()
}

fn shot_rng(key: [u8; 32], shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(shot);
    rng
}

/// Precomputed data for circuits whose measurements are all terminal.
struct TerminalPlan<'a> {
    gates: Vec<&'a Gate>,
    measurements: Vec<(usize, usize)>,
    ideal_cdf: Vec<f64>,
}

impl<'a> TerminalPlan<'a> {
    fn new(circuit: &'a Circuit) -> Self {
        let gates: Vec<&Gate> = circuit.gates().collect();
        let mut state = StateVector::zero(circuit.num_qubits);
        for g in &gates {
            apply_gate(&mut state, g.kind, &g.targets, g.angle);
        }
        let mut acc = 0.0;
        let ideal_cdf = state
            .probabilities()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { gates, measurements: circuit.measurements(), ideal_cdf }
    }

    fn sample_ideal(&self, u: f64) -> usize {
        let total = *self.ideal_cdf.last().expect("non-empty");
        let i = self.ideal_cdf.partition_point(|&c| c <= u * total);
        i.min(self.ideal_cdf.len() - 1)
    }
}

fn run_terminal_shot<R: Rng>(
    plan: &TerminalPlan<'_>,
    circuit: &Circuit,
    noise: &NoiseProfile,
    rng: &mut R,
) -> u64 {
    // Draw every gate-error event up front; error-free shots then sample the
    // cached ideal distribution instead of re-running the circuit.
    let mut faults: Vec<(usize, usize, Pauli)> = Vec::new();
    for (gi, g) in plan.gates.iter().enumerate() {
        let p = noise.gate_error_rate(g.kind);
        if p > 0.0 {
            for &q in &g.targets {
                if rng.random::<f64>() < p {
                    faults.push((gi, q, Pauli::random(rng)));
                }
            }
        }
    }
    let index = if faults.is_empty() {
        plan.sample_ideal(rng.random())
    } else {
        let mut state = StateVector::zero(circuit.num_qubits);
        let mut next = faults.iter().peekable();
        for (gi, g) in plan.gates.iter().enumerate() {
            apply_gate(&mut state, g.kind, &g.targets, g.angle);
            while let Some(&&(fi, q, pauli)) = next.peek() {
                if fi != gi {
                    break;
                }
                state.apply_pauli(q, pauli);
                next.next();
            }
        }
        state.sample_index(rng)
    };
    let mut word = 0u64;
    for &(q, c) in &plan.measurements {
        let bit = noise.readout_flip(q, (index >> q) & 1 == 1, rng);
        word = (word & !(1 << c)) | (u64::from(bit) << c);
    }
    word
}

fn run_dynamic_shot<R: Rng>(circuit: &Circuit, noise: &NoiseProfile, rng: &mut R) -> u64 {
    let mut state = StateVector::zero(circuit.num_qubits);
    let mut word = 0u64;
    for instr in &circuit.instructions {
        match instr {
            Instruction::Gate(g) => {
                if let Some(cbit) = g.condition {
                    if (word >> cbit) & 1 == 0 {
                        continue;
                    }
                }
                apply_gate(&mut state, g.kind, &g.targets, g.angle);
                let p = noise.gate_error_rate(g.kind);
                if p > 0.0 {
                    for &q in &g.targets {
                        if rng.random::<f64>() < p {
                            let pauli = Pauli::random(rng);
                            state.apply_pauli(q, pauli);
                        }
                    }
                }
            }
            Instruction::Measure { qubit, clbit } => {
                let outcome = state.measure(*qubit, rng);
                let bit = noise.readout_flip(*qubit, outcome, rng);
                word = (word & !(1 << clbit)) | (u64::from(bit) << clbit);
            }
            Instruction::Reset { qubit } => {
                if state.measure(*qubit, rng) {
                    state.apply_x(*qubit);
                }
            }
            Instruction::Barrier => {}
        }
    }
    word
}

/// Samples `shots` noisy executions. Deterministic for a fixed seed.
pub fn run_shots(circuit: &Circuit, noise: &NoiseProfile, shots: u64, seed: u64) -> Result<Counts, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    if noise.readout.len() < circuit.num_qubits {
        return Err(SimError::ProfileTooSmall { profile: noise.readout.len(), circuit: circuit.num_qubits });
    }
    noise.validate()?;
    if circuit.num_clbits == 0 {
        return Err(SimError::NoMeasurements);
    }
    let key = base_key(seed);
    let plan = circuit.is_terminal().then(|| TerminalPlan::new(circuit));
    let chunks: Vec<u64> = (0..shots.div_ceil(SHOT_CHUNK)).collect();
    let partials: Vec<HashMap<u64, u64>> = chunks
        .into_par_iter()
        .map(|ci| {
            let mut hist = HashMap::new();
            for shot in ci * SHOT_CHUNK..((ci + 1) * SHOT_CHUNK).min(shots) {
                let mut rng = shot_rng(key, shot);
                let word = match &plan {
                    Some(plan) => run_terminal_shot(plan, circuit, noise, &mut rng),
                    None => run_dynamic_shot(circuit, noise, &mut rng),
                };
                *hist.entry(word).or_insert(0u64) += 1;
            }
            hist
        })
        .collect();
    let mut total: HashMap<u64, u64> = HashMap::new();
    for part in partials {
        for (k, v) in part {
            *total.entry(k).or_insert(0) += v;
        }
    }
    let mut words: Vec<u64> = total.keys().copied().collect();
    words.sort_unstable();
    let entries = words
        .into_iter()
        .map(|w| (BitString::from_index(w as usize, circuit.num_clbits), total[&w]))
        .collect();
    Ok(Counts::new(entries, shots).expect("tallies sum to shots"))
}
