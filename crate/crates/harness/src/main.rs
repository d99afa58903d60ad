use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmitigate::emit::{emit_report, Format};
use qmitigate::report::{ExperimentReport, Outcome};
use qmitigate::spec::{parse_usize_list, ExperimentId, ExperimentParams, ExperimentSpec, NoiseSource};
use qmitigate::{run_experiment, ExperimentError};
use qmitigate_core::filter::{mitigate_counts, IntensityRange};
use qmitigate_core::m3::M3Method;
use qmitigate_core::{Counts, MitigatorSpec};

const SPEC_ERROR: u8 = 2;
const EXPERIMENT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "qmitigate", version, about = "Readout-error mitigation experiments for quantum counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once
enum Command {
    /// Run one experiment and write its report.
    Run(RunArgs),
    /// Apply the intensity filter to a counts JSON file.
    Filter(FilterArgs),
}

#[derive(Args)]
struct RunArgs {
    /// ghz-demo, probs, bv-sweep, dynamic-bv, trotter, vqe-basic or heisenberg-vqe
    experiment: String,
    /// Noise profile: paper-like, noiseless or a JSON file path.
    #[arg(long, default_value = "paper-like")]
    noise: String,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// raw, filter[:<low,high|k%>] or m3[:direct|iterative]; repeatable.
    #[arg(long = "mitigator", value_name = "SPEC")]
    mitigators: Vec<String>,
    /// Solver for mitigators given as a bare `m3`.
    #[arg(long, value_name = "METHOD")]
    m3_method: Option<M3Method>,
    /// Range for mitigators given as a bare `filter`.
    #[arg(long, value_name = "RANGE")]
    filter_range: Option<IntensityRange>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Comma-separated subset of json, csv, svg.
    #[arg(long, default_value = "json")]
    format: String,
    /// Sweep widths, e.g. 3-7 or 2,4,8.
    #[arg(long)]
    widths: Option<String>,
    /// Paired-seed repetitions per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Trotter step counts, e.g. 1,2,4,8.
    #[arg(long)]
    steps: Option<String>,
    /// Trotter total evolution time.
    #[arg(long)]
    time: Option<f64>,
    /// Qubits for the GHZ experiments and the Heisenberg ring.
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    calibration_shots: Option<u64>,
    /// Skip the summary table on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct FilterArgs {
    /// Counts file: {"shots": N, "counts": {"<bits>": n, ...}}
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, visible_alias = "filter-range", default_value = "0.01,0.99")]
    range: IntensityRange,
    /// Write the filter report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Filter(args) => filter(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

type CliResult = Result<(), (u8, String)>;

fn spec_err(e: impl ToString) -> (u8, String) {
    (SPEC_ERROR, e.to_string())
}

fn failure(e: impl ToString) -> (u8, String) {
    (EXPERIMENT_FAILURE, e.to_string())
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, (u8, String)> {
    let id: ExperimentId = args.experiment.parse().map_err(spec_err)?;
    let mut spec = ExperimentSpec::new(id);
    spec.noise = args.noise.parse::<NoiseSource>().map_err(spec_err)?;
    spec.seed = args.seed;
    if let Some(shots) = args.shots {
        spec.shots = shots;
    }
    if !args.mitigators.is_empty() {
        spec.mitigators = args
            .mitigators
            .iter()
            .map(|s| match (s.trim(), args.m3_method, args.filter_range) {
                ("m3", Some(method), _) => Ok(MitigatorSpec::M3 { method }),
                ("filter", _, Some(range)) => Ok(MitigatorSpec::Filter { range }),
                (s, _, _) => s.parse::<MitigatorSpec>().map_err(spec_err),
            })
            .collect::<Result<_, _>>()?;
    }
    let list = |s: &Option<String>| s.as_deref().map(parse_usize_list).transpose().map_err(spec_err);
    spec.params = ExperimentParams {
        widths: list(&args.widths)?,
        trials: args.trials,
        steps: list(&args.steps)?,
        time: args.time,
        qubits: args.qubits,
        max_iters: args.max_iters,
        calibration_shots: args.calibration_shots,
    };
    spec.validate().map_err(spec_err)?;
    Ok(spec)
}

fn run(args: RunArgs) -> CliResult {
    let spec = build_spec(&args)?;
    let formats: Vec<Format> = args.format.split(',').map(str::parse).collect::<Result<_, _>>().map_err(spec_err)?;
    let report = run_experiment(&spec).map_err(|e| match e {
        ExperimentError::Spec(e) => spec_err(e),
        e => failure(e),
    })?;
    let written = emit_report(&report, &args.out, &formats).map_err(failure)?;
    if !args.quiet {
        print_summary(&report);
        for path in written {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    for (name, value) in &report.references {
        println!("{name} = {value}");
    }
    for r in &report.results {
        let metrics = match &r.outcome {
            Outcome::Ok { metrics } => {
                metrics.iter().map(|(k, s)| format!("{k}={:.5}", s.mean)).collect::<Vec<_>>().join(" ")
            }
            Outcome::Failed { reason } => format!("FAILED {reason}"),
        };
        println!(
            "{:<22} {:<12} {metrics}  [cal {} us, corr {} us]",
            r.mitigator, r.config, r.timings.calibration_us, r.timings.correction_us
        );
    }
}

fn filter(args: FilterArgs) -> CliResult {
    let counts = Counts::load(&args.counts).map_err(spec_err)?;
    let report = mitigate_counts(&counts, args.range).map_err(failure)?;
    let json = serde_json::to_string_pretty(&report).map_err(failure)?;
    match args.out {
        Some(path) => std::fs::write(&path, json + "\n").map_err(|e| failure(format!("{}: {e}", path.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}
