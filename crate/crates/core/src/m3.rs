//! Reduced-subspace confusion-matrix mitigation, the baseline the intensity
//! filter is compared against.
//!
//! Readout errors are modelled as independent per qubit. The assignment
//! matrix is restricted to the bitstrings actually observed and the
//! resulting square system is solved either densely (LU) or with a
//! matrix-free BiCGSTAB whose products are assembled on the fly from the
//! per-qubit factors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{counts_to_probs, BitString, Counts, DistError, ProbDist, QuasiDist};
use crate::seeds::derive_seed;
use crate::sim::{run_shots, Circuit, NoiseProfile, SimError};

pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum M3Error {
    #[error("invalid calibration: e01 = {e01}, e10 = {e10} (each must lie in [0, 0.5))")]
    InvalidCalibration { e01: f64, e10: f64 },
    #[error("calibration covers {calibrated} qubits but counts are {width} bits wide")]
    WidthMismatch { calibrated: usize, width: usize },
    #[error("reduced assignment matrix is singular; worst calibrated qubit {qubit} has e01 = {e01}, e10 = {e10}")]
    Singular { qubit: usize, e01: f64, e10: f64 },
    #[error("iterative solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unknown m3 method {0:?}: expected direct or iterative")]
    UnknownMethod(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Single-qubit readout confusion rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    /// P(read 1 | prepared 0).
    pub e01: f64,
    /// P(read 0 | prepared 1).
    pub e10: f64,
}

impl QubitCalibration {
    pub fn new(e01: f64, e10: f64) -> Result<Self, M3Error> {
        let ok = |e: f64| e.is_finite() && (0.0..0.5).contains(&e);
        if !(ok(e01) && ok(e10)) {
            return Err(M3Error::InvalidCalibration { e01, e10 });
        }
        Ok(Self { e01, e10 })
    }

    pub fn ideal() -> Self {
        Self { e01: 0.0, e10: 0.0 }
    }

    /// `P(read observed | prepared truth)`.
    #[inline]
    pub fn assignment(&self, observed: bool, truth: bool) -> f64 {
        match (observed, truth) {
            (false, false) => 1.0 - self.e01,
            (true, false) => self.e01,
            (false, true) => self.e10,
            (true, true) => 1.0 - self.e10,
        }
    }
}

/// Estimates per-qubit readout rates from the all-zeros and all-ones
/// preparation circuits run under `noise`.
pub fn calibrate(noise: &NoiseProfile, qubits: usize, shots: u64, seed: u64) -> Result<Vec<QubitCalibration>, M3Error> {
    let mut zeros = Circuit::new(qubits, qubits)?;
    zeros.measure_all();
    let mut ones = Circuit::new(qubits, qubits)?;
    for q in 0..qubits {
        ones.x(q);
    }
    ones.measure_all();
    let zero_counts = run_shots(&zeros, noise, shots, derive_seed(seed, "m3-cal-zeros", 0))?;
    let one_counts = run_shots(&ones, noise, shots, derive_seed(seed, "m3-cal-ones", 0))?;
    let total = shots as f64;
    (0..qubits)
        .map(|q| {
            let flipped_up: u64 = zero_counts.iter().filter(|(k, _)| k.bit(q)).map(|(_, n)| n).sum();
            let flipped_down: u64 = one_counts.iter().filter(|(k, _)| !k.bit(q)).map(|(_, n)| n).sum();
            QubitCalibration::new(flipped_up as f64 / total, flipped_down as f64 / total)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum M3Method {
    /// Dense LU on the reduced matrix.
    #[default]
    Direct,
    /// Matrix-free BiCGSTAB.
    Iterative,
}

impl FromStr for M3Method {
    type Err = M3Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Self::Direct),
            "iterative" => Ok(Self::Iterative),
            other => Err(M3Error::UnknownMethod(other.to_string())),
        }
    }
}

impl fmt::Display for M3Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::Iterative => "iterative",
        })
    }
}

/// Assignment matrix restricted to the observed bitstrings.
#[derive(Clone, Debug)]
pub struct ReducedSystem<'a> {
    keys: Vec<BitString>,
    words: Vec<u64>,
    cal: &'a [QubitCalibration],
    rhs: Vec<f64>,
}

impl<'a> ReducedSystem<'a> {
    /// Builds the system over every outcome with a non-zero count.
    pub fn new(counts: &Counts, cal: &'a [QubitCalibration]) -> Result<Self, M3Error> {
        if cal.len() != counts.width() {
            return Err(M3Error::WidthMismatch { calibrated: cal.len(), width: counts.width() });
        }
        let probs = counts_to_probs(counts)?;
        let (keys, rhs): (Vec<BitString>, Vec<f64>) =
            probs.iter().filter(|(_, p)| *p > 0.0).map(|(k, p)| (*k, p)).unzip();
        let words = keys.iter().map(BitString::to_index).collect();
        Ok(Self { keys, words, cal, rhs })
    }

    pub fn dim(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[BitString] {
        &self.keys
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `A[i][j]`: probability that true string `j` is read as string `i`.
    #[inline]
    pub fn element(&self, i: usize, j: usize) -> f64 {
        let (obs, truth) = (self.words[i], self.words[j]);
        self.cal
            .iter()
            .enumerate()
            .map(|(q, c)| c.assignment((obs >> q) & 1 == 1, (truth >> q) & 1 == 1))
            .product()
    }

    /// `A·x` without storing `A`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.element(i, j) * x[j]).sum()).collect()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.element(i, j))
    }

    fn worst_qubit(&self) -> M3Error {
        let (qubit, c) = self
            .cal
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1.e01 + a.1.e10).total_cmp(&(b.1.e01 + b.1.e10)))
            .map(|(q, c)| (q, *c))
            .unwrap_or((0, QubitCalibration::ideal()));
        M3Error::Singular { qubit, e01: c.e01, e10: c.e10 }
    }

    pub fn solve_direct(&self) -> Result<Vec<f64>, M3Error> {
        let lu = self.dense().lu();
        let b = DVector::from_column_slice(&self.rhs);
        let x = lu.solve(&b).ok_or_else(|| self.worst_qubit())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(self.worst_qubit());
        }
        Ok(x.iter().copied().collect())
    }

    pub fn solve_iterative(&self, max_iters: usize, tol: f64) -> Result<Vec<f64>, M3Error> {
        bicgstab(|v| self.matvec(v), &self.rhs, max_iters, tol)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unpreconditioned BiCGSTAB from a zero initial guess; stops when
/// `‖b − A·x‖ / ‖b‖ < tol`.
pub fn bicgstab<F>(apply: F, b: &[f64], max_iters: usize, tol: f64) -> Result<Vec<f64>, M3Error>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut residual = 1.0;
    for _ in 0..max_iters {
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho_next / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        residual = norm(&s) / b_norm;
        if residual < tol {
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            return Ok(x);
        }
        let t = apply(&s);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        residual = norm(&r) / b_norm;
        if residual < tol {
            return Ok(x);
        }
        rho = rho_next;
    }
    Err(M3Error::NoConvergence { iterations: max_iters, residual })
}

/// Mitigates `counts` over the observed subspace; the result is rescaled to
/// sum to one and may contain negative entries.
pub fn mitigate_m3(counts: &Counts, cal: &[QubitCalibration], method: M3Method) -> Result<QuasiDist, M3Error> {
    let system = ReducedSystem::new(counts, cal)?;
    let x = match method {
        M3Method::Direct => system.solve_direct()?,
        M3Method::Iterative => system.solve_iterative(DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE)?,
    };
    let total: f64 = x.iter().sum();
    if !total.is_finite() || total == 0.0 {
        return Err(system.worst_qubit());
    }
    let entries = system.keys.into_iter().zip(x.into_iter().map(|v| v / total)).collect();
    Ok(QuasiDist::new(entries)?)
}

/// Clips negative entries to zero and renormalizes. This approximates, but
/// is not identical to, the nearest probability distribution in L2.
pub fn quasi_to_nearest_probs(q: &QuasiDist) -> Result<ProbDist, M3Error> {
    let entries = q.iter().map(|(k, v)| (*k, v.max(0.0))).collect();
    Ok(ProbDist::normalized(entries)?)
}
