//! One runner per experiment id. Every mitigator sees the same counts for a
//! given (configuration, trial), so comparisons between mitigators are
//! paired.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use qmitigate_core::circuits::{
    bv, dynamic_bv, exact_evolution, ghz, heisenberg, trotter_step, CircuitError, Hamiltonian,
};
use qmitigate_core::dist::{counts_to_probs, hellinger_fidelity, success_probability, total_variation, DistError};
use qmitigate_core::filter::mitigate_counts;
use qmitigate_core::m3::{calibrate, M3Error, QubitCalibration};
use qmitigate_core::seeds::derive_seed;
use qmitigate_core::sim::{ideal_probabilities, run_shots, NoiseProfile, SimError};
use qmitigate_core::vqe::{exact_ground_energy, run_vqe_timed, Ansatz, VqeConfig, VqeError};
use qmitigate_core::{BitString, Counts, MitigatorSpec, ProbDist};
use thiserror::Error;

use crate::report::{
    ConfigResult, DistributionRecord, EnvStamp, ExperimentReport, Outcome, Summary, Timings, TraceRecord,
};
use crate::spec::{ExperimentId, ExperimentSpec, SpecError};

/// Example Hamiltonian of the basic VQE experiment.
pub const VQE_HAMILTONIAN: [(f64, &str); 4] = [(0.3979, "YZ"), (-0.3979, "ZI"), (-0.01128, "ZZ"), (0.1809, "XX")];
/// Starting angles for the basic VQE experiment.
pub const VQE_INITIAL_PARAMS: [f64; 8] =
    [1.22253725, 0.39053752, 0.21462153, 5.48308027, 2.06984514, 3.65227416, 4.01911194, 0.35749589];
/// Reference optimum the basic VQE energies are judged against.
pub const VQE_REFERENCE_ENERGY: f64 = -0.44841884382998787;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    M3(#[from] M3Error),
    #[error(transparent)]
    Vqe(#[from] VqeError),
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    spec.validate()?;
    let noise = spec.noise.load()?;
    let mut report = ExperimentReport {
        spec: spec.clone(),
        noise: noise.clone(),
        results: Vec::new(),
        references: IndexMap::new(),
        distributions: Vec::new(),
        traces: Vec::new(),
        zeroed: IndexMap::new(),
        notes: Vec::new(),
        env: EnvStamp::current(),
    };
    let ctx = Ctx { spec, noise: &noise };
    match spec.id {
        ExperimentId::GhzDemo | ExperimentId::Probs => ctx.ghz(&mut report)?,
        ExperimentId::BvSweep => ctx.bv_sweep(&mut report)?,
        ExperimentId::DynamicBv => ctx.dynamic_bv(&mut report)?,
        ExperimentId::Trotter => ctx.trotter(&mut report)?,
        ExperimentId::VqeBasic => ctx.vqe_basic(&mut report)?,
        ExperimentId::HeisenbergVqe => ctx.heisenberg_vqe(&mut report)?,
    }
    Ok(report)
}

/// Per-(mitigator, configuration) sample collector.
struct Cell {
    mitigator: MitigatorSpec,
    config: String,
    x: f64,
    metrics: IndexMap<String, Vec<f64>>,
    failure: Option<String>,
    timings: Timings,
}

impl Cell {
    fn row(spec: &ExperimentSpec, config: &str, x: f64) -> Vec<Self> {
        spec.mitigators
            .iter()
            .map(|m| Self {
                mitigator: *m,
                config: config.to_string(),
                x,
                metrics: IndexMap::new(),
                failure: None,
                timings: Timings::default(),
            })
            .collect()
    }

    fn push<S: Into<String>>(&mut self, metrics: Vec<(S, f64)>) {
        for (name, value) in metrics {
            self.metrics.entry(name.into()).or_default().push(value);
        }
    }

    fn fail(&mut self, trial: usize, reason: impl std::fmt::Display) {
        if self.failure.is_none() {
            self.failure = Some(format!("trial {trial}: {reason}"));
        }
    }

    fn finish(self) -> ConfigResult {
        let outcome = match self.failure {
            Some(reason) => Outcome::Failed { reason },
            None => Outcome::Ok {
                metrics: self.metrics.into_iter().map(|(k, v)| (k, Summary::from_samples(v))).collect(),
            },
        };
        ConfigResult { mitigator: self.mitigator.to_string(), config: self.config, x: self.x, outcome, timings: self.timings }
    }
}

fn micros(d: Duration) -> u64 {
    d.as_micros().try_into().unwrap_or(u64::MAX)
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    noise: &'a NoiseProfile,
}

impl Ctx<'_> {
    fn needs_calibration(&self) -> bool {
        self.spec.mitigators.iter().any(MitigatorSpec::needs_calibration)
    }

    fn seed(&self, label: &str, config: &str, trial: usize) -> u64 {
        derive_seed(self.spec.seed, &format!("{}/{label}/{config}", self.spec.id), trial as u64)
    }

    /// Calibrates the first `qubits` qubits if any mitigator needs it.
    fn calibration(&self, qubits: usize, config: &str, trial: usize) -> Result<(Option<Vec<QubitCalibration>>, Duration), ExperimentError> {
        if !self.needs_calibration() {
            return Ok((None, Duration::ZERO));
        }
        let start = Instant::now();
        let cal = calibrate(self.noise, qubits, self.spec.calibration_shots(), self.seed("cal", config, trial))?;
        Ok((Some(cal), start.elapsed()))
    }

    /// Runs every mitigator on one trial's counts and records `metrics` of
    /// each corrected distribution.
    fn evaluate<S: Into<String>>(
        &self,
        cells: &mut [Cell],
        trial: usize,
        counts: &Counts,
        cal: Option<&[QubitCalibration]>,
        cal_time: Duration,
        metrics: impl Fn(&ProbDist) -> Result<Vec<(S, f64)>, DistError>,
    ) -> Vec<Option<ProbDist>> {
        cells
            .iter_mut()
            .map(|cell| {
                if cell.mitigator.needs_calibration() {
                    cell.timings.calibration_us += micros(cal_time);
                }
                let start = Instant::now();
                let corrected = cell.mitigator.apply(counts, cal).and_then(|m| m.into_probs());
                cell.timings.correction_us += micros(start.elapsed());
                match corrected.map_err(|e| e.to_string()).and_then(|p| Ok((metrics(&p).map_err(|e| e.to_string())?, p))) {
                    Ok((values, p)) => {
                        cell.push(values);
                        Some(p)
                    }
                    Err(reason) => {
                        cell.fail(trial, reason);
                        None
                    }
                }
            })
            .collect()
    }

    fn ghz(&self, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
        let n = self.spec.qubits();
        let circuit = ghz(n)?;
        let ideal = ideal_probabilities(&circuit)?;
        let (zeros, ones) = (BitString::zeros(n), BitString::all_ones(n));
        let config = format!("n={n}");
        let mut cells = Cell::row(self.spec, &config, n as f64);
        for trial in 0..self.spec.trials() {
            let counts = run_shots(&circuit, self.noise, self.spec.shots, self.seed("shots", &config, trial))?;
            let (cal, cal_time) = self.calibration(n, &config, trial)?;
            let outputs = self.evaluate(&mut cells, trial, &counts, cal.as_deref(), cal_time, |p| {
                let (s0, s1) = (success_probability(p, &zeros)?, success_probability(p, &ones)?);
                Ok(vec![
                    ("fidelity".to_string(), hellinger_fidelity(p, &ideal)),
                    ("tv".to_string(), total_variation(p, &ideal)),
                    ("ghz_mass".to_string(), s0 + s1),
                    (format!("success_{zeros}"), s0),
                    (format!("success_{ones}"), s1),
                ])
            });
            if trial > 0 {
                continue;
            }
            report.distributions.push(dense_record("raw counts", &counts_to_probs(&counts)?, n));
            for (cell, output) in cells.iter().zip(&outputs) {
                if let (Some(p), false) = (output, cell.mitigator == MitigatorSpec::Raw) {
                    report.distributions.push(dense_record(&cell.mitigator.to_string(), p, n));
                }
                if let MitigatorSpec::Filter { range } = cell.mitigator {
                    if let Ok(filtered) = mitigate_counts(&counts, range) {
                        let zeroed = filtered.zeroed.iter().map(|k| k.to_string()).collect();
                        report.zeroed.insert(cell.mitigator.to_string(), zeroed);
                    }
                }
            }
        }
        report.results.extend(cells.into_iter().map(Cell::finish));
        Ok(())
    }

    fn bv_sweep(&self, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
        for w in self.spec.widths() {
            let secret = BitString::all_ones(w);
            let circuit = bv(&secret)?;
            let config = format!("width={w}");
            let mut cells = Cell::row(self.spec, &config, w as f64);
            for trial in 0..self.spec.trials() {
                let counts = run_shots(&circuit, self.noise, self.spec.shots, self.seed("shots", &config, trial))?;
                let (cal, cal_time) = self.calibration(w, &config, trial)?;
                self.evaluate(&mut cells, trial, &counts, cal.as_deref(), cal_time, |p| {
                    Ok(vec![("success", success_probability(p, &secret)?)])
                });
            }
            report.results.extend(cells.into_iter().map(Cell::finish));
        }
        Ok(())
    }

    fn dynamic_bv(&self, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
        for w in self.spec.widths() {
            let secret = BitString::all_ones(w);
            let circuit = dynamic_bv(&secret)?;
            let config = format!("width={w}");
            let mut cells = Cell::row(self.spec, &config, w as f64);
            for trial in 0..self.spec.trials() {
                let counts = run_shots(&circuit, self.noise, self.spec.shots, self.seed("shots", &config, trial))?;
                // Every classical bit is read from qubit 0.
                let (cal, cal_time) = self.calibration(1, &config, trial)?;
                let cal = cal.map(|c| vec![c[0]; w]);
                self.evaluate(&mut cells, trial, &counts, cal.as_deref(), cal_time, |p| {
                    Ok(vec![("success", success_probability(p, &secret)?)])
                });
            }
            report.results.extend(cells.into_iter().map(Cell::finish));
        }
        Ok(())
    }

    fn trotter(&self, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
        let h = heisenberg(2, false)?;
        let initial: BitString = "01".parse()?;
        let time = self.spec.time();
        let exact = exact_evolution(&h, time, &initial)?;
        report.notes.push(format!(
            "two-qubit Heisenberg XX+YY+ZZ stand-in, initial state {initial}, total time {time}"
        ));
        for steps in self.spec.steps() {
            let circuit = trotter_step(&h, time / steps as f64, steps, &initial)?;
            let config = format!("steps={steps}");
            report.references.insert(format!("noiseless_tv[{config}]"), total_variation(&ideal_probabilities(&circuit)?, &exact));
            let mut cells = Cell::row(self.spec, &config, steps as f64);
            for trial in 0..self.spec.trials() {
                let counts = run_shots(&circuit, self.noise, self.spec.shots, self.seed("shots", &config, trial))?;
                let (cal, cal_time) = self.calibration(2, &config, trial)?;
                self.evaluate(&mut cells, trial, &counts, cal.as_deref(), cal_time, |p| {
                    Ok(vec![("fidelity", hellinger_fidelity(p, &exact)), ("tv", total_variation(p, &exact))])
                });
            }
            report.results.extend(cells.into_iter().map(Cell::finish));
        }
        Ok(())
    }

    /// Noisy VQE per mitigator and trial, judged against `reference`.
    fn vqe_sweep(
        &self,
        report: &mut ExperimentReport,
        base: &VqeConfig,
        reference: f64,
        config: &str,
        x: f64,
    ) -> Result<(), ExperimentError> {
        let mut cells = Cell::row(self.spec, config, x);
        for trial in 0..self.spec.trials() {
            let seed = self.seed("vqe", config, trial);
            for cell in &mut cells {
                let cfg = VqeConfig { mitigator: cell.mitigator, seed, ..base.clone() };
                match run_vqe_timed(&cfg) {
                    Ok((result, timings)) => {
                        let e = result.final_energy;
                        cell.push(vec![
                            ("energy", e),
                            ("abs_error", (e - reference).abs()),
                            ("relative_error", (e - reference).abs() / reference.abs()),
                            ("evaluations", result.evaluations as f64),
                        ]);
                        cell.timings.calibration_us += micros(timings.calibration);
                        cell.timings.correction_us += micros(timings.mitigation);
                        if trial == 0 {
                            report.traces.push(TraceRecord { label: cell.mitigator.to_string(), energies: result.trace });
                        }
                    }
                    Err(e @ VqeError::Mitigation { .. }) => cell.fail(trial, e),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        report.results.extend(cells.into_iter().map(Cell::finish));
        Ok(())
    }

    fn noisy_config(&self, hamiltonian: Hamiltonian, ansatz: Ansatz, initial_params: Vec<f64>) -> VqeConfig {
        VqeConfig {
            hamiltonian,
            ansatz,
            initial_params,
            shots: Some(self.spec.shots),
            noise: Some(self.noise.clone()),
            mitigator: MitigatorSpec::Raw,
            max_iters: self.spec.max_iters(),
            seed: 0,
        }
    }

    fn vqe_basic(&self, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
        let h = Hamiltonian::from_pairs(&VQE_HAMILTONIAN)?;
        let base = self.noisy_config(h.clone(), Ansatz::TwoLocal, VQE_INITIAL_PARAMS.to_vec());
        let exact = VqeConfig { shots: None, noise: None, ..base.clone() };
        let (noiseless, _) = run_vqe_timed(&exact)?;
        report.references.insert("reference_energy".into(), VQE_REFERENCE_ENERGY);
        report.references.insert("exact_ground_energy".into(), exact_ground_energy(&h)?);
        report.references.insert("noiseless_vqe_energy".into(), noiseless.final_energy);
        report.traces.push(TraceRecord { label: "noiseless".into(), energies: noiseless.trace });
        self.vqe_sweep(report, &base, VQE_REFERENCE_ENERGY, "two_local", 2.0)
    }

    fn heisenberg_vqe(&self, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
        let n = self.spec.qubits();
        if !(3..=6).contains(&n) {
            return Err(SpecError::Param { name: "qubits", reason: format!("ring size must be 3..=6, got {n}") }.into());
        }
        let h = heisenberg(n, true)?;
        let ansatz = Ansatz::EfficientSu2 { reps: 1 };
        let init = (0..ansatz.param_count(n))
            .map(|i| (derive_seed(self.spec.seed, "heisenberg-vqe/init", i as u64) >> 11) as f64 / (1u64 << 53) as f64 * TAU)
            .collect();
        let ground = exact_ground_energy(&h)?;
        report.references.insert("exact_ground_energy".into(), ground);
        report.notes.push(format!("{n}-qubit Heisenberg ring stands in for the Kagome lattice"));
        let base = self.noisy_config(h, ansatz, init);
        self.vqe_sweep(report, &base, ground, &format!("ring={n}"), n as f64)
    }
}

/// All `2^n` outcomes in index order, zeros included, for charts.
fn dense_record(label: &str, p: &ProbDist, n: usize) -> DistributionRecord {
    let values = (0..1usize << n)
        .map(|i| {
            let k = BitString::from_index(i, n);
            let v = p.get(&k);
            (k.to_string(), v)
        })
        .collect();
    DistributionRecord { label: label.to_string(), values }
}
