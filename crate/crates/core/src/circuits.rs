//! Circuit families used by the experiments, plus Pauli-sum Hamiltonians.
//!
//! Pauli strings follow the bitstring convention: the character at
//! position `k` from the right acts on qubit `k`, so `"ZI"` is `Z` on
//! qubit 1.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::dist::{BitString, ProbDist};
use crate::sim::{Circuit, SimError, StateVector};

/// Repetitions of the `two_local` ansatz (rotation layers = reps + 1).
pub const TWO_LOCAL_REPS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("GHZ needs at least 2 qubits, got {0}")]
    GhzTooSmall(usize),
    #[error("expected {expected} parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("invalid Pauli character {0:?}: expected one of I, X, Y, Z")]
    InvalidPauli(char),
    #[error("empty Pauli string")]
    EmptyPauli,
    #[error("term {0} acts on more than two qubits")]
    NonLocal(String),
    #[error("Hamiltonian terms have mixed widths ({expected} vs {found})")]
    MixedWidths { expected: usize, found: usize },
    #[error("Hamiltonian has no terms")]
    EmptyHamiltonian,
    #[error("cannot parse Hamiltonian line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("width {found} does not match the {expected}-qubit Hamiltonian")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `coefficient · P` for a Pauli string `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    paulis: String,
}

impl PauliTerm {
    pub fn new(coefficient: f64, paulis: &str) -> Result<Self, CircuitError> {
        if paulis.is_empty() {
            return Err(CircuitError::EmptyPauli);
        }
        if let Some(bad) = paulis.chars().find(|c| !matches!(c, 'I' | 'X' | 'Y' | 'Z')) {
            return Err(CircuitError::InvalidPauli(bad));
        }
        Ok(Self { coefficient, paulis: paulis.to_string() })
    }

    pub fn paulis(&self) -> &str {
        &self.paulis
    }

    pub fn width(&self) -> usize {
        self.paulis.len()
    }

    /// Pauli acting on qubit `k`.
    pub fn pauli_on(&self, k: usize) -> char {
        self.paulis.as_bytes()[self.paulis.len() - 1 - k] as char
    }

    /// `(qubit, pauli)` for every non-identity factor, qubit ascending.
    pub fn support(&self) -> Vec<(usize, char)> {
        (0..self.width()).map(|k| (k, self.pauli_on(k))).filter(|&(_, p)| p != 'I').collect()
    }

    /// Parity mask marking the non-identity positions.
    pub fn mask(&self) -> BitString {
        let bits: Vec<bool> = (0..self.width()).map(|k| self.pauli_on(k) != 'I').collect();
        BitString::from_bits(&bits)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.coefficient, self.paulis)
    }
}

/// Sum of equal-width Pauli terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self, CircuitError> {
        let first = terms.first().ok_or(CircuitError::EmptyHamiltonian)?.width();
        if let Some(t) = terms.iter().find(|t| t.width() != first) {
            return Err(CircuitError::MixedWidths { expected: first, found: t.width() });
        }
        Ok(Self { terms })
    }

    pub fn from_pairs(pairs: &[(f64, &str)]) -> Result<Self, CircuitError> {
        Self::new(pairs.iter().map(|&(c, p)| PauliTerm::new(c, p)).collect::<Result<_, _>>()?)
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn width(&self) -> usize {
        self.terms[0].width()
    }

    /// Same terms with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms =
            self.terms.iter().map(|t| PauliTerm { coefficient: t.coefficient * factor, ..t.clone() }).collect();
        Self { terms }
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.width();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            let support = term.support();
            for col in 0..dim {
                let mut row = col;
                let mut phase = Complex64::new(term.coefficient, 0.0);
                for &(q, p) in &support {
                    let bit = (col >> q) & 1 == 1;
                    match p {
                        'X' => row ^= 1 << q,
                        'Y' => {
                            row ^= 1 << q;
                            phase *= if bit { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
                        }
                        'Z'
                            if bit => {
                                phase = -phase;
                            }
                        _ => {}
                    }
                }
                m[(row, col)] += phase;
            }
        }
        m
    }

    /// `⟨ψ|H|ψ⟩` for a noiseless state.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let psi = DVector::from_column_slice(state.amplitudes());
        let h_psi = self.to_matrix() * &psi;
        psi.dotc(&h_psi).re
    }
}

impl FromStr for Hamiltonian {
    type Err = CircuitError;

    /// Lines of `<coeff> <paulistring>`; blank lines and `#` comments skipped.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut terms = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: &str| CircuitError::Parse { line: i + 1, reason: reason.to_string() };
            let mut parts = line.split_whitespace();
            let coeff: f64 = parts
                .next()
                .ok_or_else(|| parse_err("missing coefficient"))?
                .parse()
                .map_err(|_| parse_err("bad coefficient"))?;
            let paulis = parts.next().ok_or_else(|| parse_err("missing Pauli string"))?;
            if parts.next().is_some() {
                return Err(parse_err("trailing tokens"));
            }
            terms.push(PauliTerm::new(coeff, paulis)?);
        }
        Self::new(terms)
    }
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

/// `XX + YY + ZZ` on every nearest-neighbour pair of an `n`-site chain,
/// closed into a ring when `periodic` and `n ≥ 3`.
pub fn heisenberg(n: usize, periodic: bool) -> Result<Hamiltonian, CircuitError> {
    let mut edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if periodic && n >= 3 {
        edges.push((n - 1, 0));
    }
    let mut terms = Vec::new();
    for (a, b) in edges {
        for p in ['X', 'Y', 'Z'] {
            let s: String =
                (0..n).rev().map(|k| if k == a || k == b { p } else { 'I' }).collect();
            terms.push(PauliTerm::new(1.0, &s)?);
        }
    }
    Hamiltonian::new(terms)
}

/// `H` on qubit 0, then a CX chain `0→1→…→n−1`, all qubits measured.
pub fn ghz(n: usize) -> Result<Circuit, CircuitError> {
    if n < 2 {
        return Err(CircuitError::GhzTooSmall(n));
    }
    let mut c = Circuit::new(n, n)?;
    c.h(0);
    for q in 0..n - 1 {
        c.cx(q, q + 1);
    }
    c.measure_all();
    Ok(c)
}

/// Bernstein-Vazirani with `|secret|` data qubits and one ancilla (the last
/// qubit). Data qubit `k` is measured into classical bit `k`.
pub fn bv(secret: &BitString) -> Result<Circuit, CircuitError> {
    let n = secret.len();
    let anc = n;
    let mut c = Circuit::new(n + 1, n)?;
    c.x(anc).h(anc);
    for q in 0..n {
        c.h(q);
    }
    c.barrier();
    for q in (0..n).filter(|&q| secret.bit(q)) {
        c.cx(q, anc);
    }
    c.barrier();
    for q in 0..n {
        c.h(q);
    }
    for q in 0..n {
        c.measure(q, q);
    }
    Ok(c)
}

/// Bernstein-Vazirani on one reused data qubit (0) and an ancilla (1): each
/// round queries one secret bit, measures it mid-circuit, and resets.
pub fn dynamic_bv(secret: &BitString) -> Result<Circuit, CircuitError> {
    let n = secret.len();
    let mut c = Circuit::new(2, n)?;
    c.x(1).h(1);
    for k in 0..n {
        c.h(0);
        if secret.bit(k) {
            c.cx(0, 1);
        }
        c.h(0);
        c.measure(0, k);
        c.reset(0);
    }
    Ok(c)
}

/// Gates rotating each qubit's Pauli factor into the Z basis:
/// `X → H`, `Y → S†·H`, `Z`/`I` → nothing.
pub fn basis_rotation(pauli: &str) -> Result<Circuit, CircuitError> {
    let term = PauliTerm::new(1.0, pauli)?;
    let mut c = Circuit::new(term.width(), 0)?;
    for (q, p) in term.support() {
        match p {
            'X' => {
                c.h(q);
            }
            'Y' => {
                c.sdg(q).h(q);
            }
            _ => {}
        }
    }
    Ok(c)
}

fn undo_basis_rotation(c: &mut Circuit, q: usize, p: char) {
    match p {
        'X' => {
            c.h(q);
        }
        'Y' => {
            c.h(q).s(q);
        }
        _ => {}
    }
}

/// First-order Trotter circuit for `exp(−i·H·dt·steps)` applied to the basis
/// state `initial`, followed by measurement of every qubit.
pub fn trotter_step(h: &Hamiltonian, dt: f64, steps: usize, initial: &BitString) -> Result<Circuit, CircuitError> {
    let n = h.width();
    if initial.len() != n {
        return Err(CircuitError::WidthMismatch { expected: n, found: initial.len() });
    }
    if let Some(t) = h.terms().iter().find(|t| t.support().len() > 2) {
        return Err(CircuitError::NonLocal(t.paulis().to_string()));
    }
    let mut c = Circuit::new(n, n)?;
    for q in (0..n).filter(|&q| initial.bit(q)) {
        c.x(q);
    }
    for _ in 0..steps {
        for term in h.terms() {
            let theta = 2.0 * term.coefficient * dt;
            match term.support().as_slice() {
                [] => {}
                [(q, 'X')] => {
                    c.rx(*q, theta);
                }
                [(q, 'Y')] => {
                    c.ry(*q, theta);
                }
                [(q, _)] => {
                    c.rz(*q, theta);
                }
                [(a, pa), (b, pb)] => {
                    c.append(&basis_rotation(&term_fragment(n, &[(*a, *pa), (*b, *pb)]))?)?;
                    c.cx(*a, *b).rz(*b, theta).cx(*a, *b);
                    undo_basis_rotation(&mut c, *a, *pa);
                    undo_basis_rotation(&mut c, *b, *pb);
                }
                _ => unreachable!("locality checked above"),
            }
        }
    }
    c.measure_all();
    Ok(c)
}

fn term_fragment(n: usize, factors: &[(usize, char)]) -> String {
    (0..n).rev().map(|k| factors.iter().find(|f| f.0 == k).map_or('I', |f| f.1)).collect()
}

/// Exact Z-basis distribution of `exp(−i·H·t)|initial⟩` by dense
/// diagonalization.
pub fn exact_evolution(h: &Hamiltonian, time: f64, initial: &BitString) -> Result<ProbDist, CircuitError> {
    let n = h.width();
    if initial.len() != n {
        return Err(CircuitError::WidthMismatch { expected: n, found: initial.len() });
    }
    let eig = h.to_matrix().symmetric_eigen();
    let dim = 1usize << n;
    let start = initial.to_index() as usize;
    // ψ(t) = V · diag(e^{−iλt}) · V† · e_start
    let coeffs: Vec<Complex64> = (0..dim)
        .map(|j| eig.eigenvectors[(start, j)].conj() * Complex64::from_polar(1.0, -eig.eigenvalues[j] * time))
        .collect();
    let probs = (0..dim).map(|i| {
        let amp: Complex64 = (0..dim).map(|j| eig.eigenvectors[(i, j)] * coeffs[j]).sum();
        (BitString::from_index(i, n), amp.norm_sqr())
    });
    let entries = probs.filter(|(_, p)| *p > 1e-14).collect();
    Ok(ProbDist::normalized(entries).expect("unitary evolution keeps unit norm"))
}

pub fn two_local_param_count(n: usize) -> usize {
    n * (TWO_LOCAL_REPS + 1)
}

/// Real-amplitude two-local ansatz: an RY layer, then `TWO_LOCAL_REPS`
/// repetitions of a full-entanglement CX block (every pair `i < j`) followed
/// by another RY layer. No measurements.
pub fn two_local(n: usize, params: &[f64]) -> Result<Circuit, CircuitError> {
    let expected = two_local_param_count(n);
    if params.len() != expected {
        return Err(CircuitError::ParamCount { expected, found: params.len() });
    }
    let mut c = Circuit::new(n, 0)?;
    let mut next = params.iter();
    for layer in 0..=TWO_LOCAL_REPS {
        if layer > 0 {
            for i in 0..n {
                for j in i + 1..n {
                    c.cx(i, j);
                }
            }
        }
        for q in 0..n {
            c.ry(q, *next.next().expect("count checked"));
        }
    }
    Ok(c)
}

pub fn efficient_su2_param_count(n: usize, reps: usize) -> usize {
    2 * n * (reps + 1)
}

/// `reps + 1` layers of RY then RZ on every qubit, separated by
/// reverse-linear CX blocks (`n−2→n−1`, …, `0→1`). No measurements.
pub fn efficient_su2(n: usize, reps: usize, params: &[f64]) -> Result<Circuit, CircuitError> {
    let expected = efficient_su2_param_count(n, reps);
    if params.len() != expected {
        return Err(CircuitError::ParamCount { expected, found: params.len() });
    }
    let mut c = Circuit::new(n, 0)?;
    let mut next = params.iter();
    for layer in 0..=reps {
        if layer > 0 {
            for i in (0..n.saturating_sub(1)).rev() {
                c.cx(i, i + 1);
            }
        }
        for q in 0..n {
            c.ry(q, *next.next().expect("count checked"));
        }
        for q in 0..n {
            c.rz(q, *next.next().expect("count checked"));
        }
    }
    Ok(c)
}
