use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rfi_core::entropy::DEFAULT_MERCATOR_DEPTH;
use rfi_core::io::{read_counts, write_counts, Format};
use rfi_core::measurement::{
    rotation_model, simulate_all, state_for_fidelity, CountRecord, DEFAULT_BUDGET, DEFAULT_FIDELITY,
};
use rfi_core::montecarlo::{self, Ensemble};
use rfi_core::report::{Analysis, AnalysisOptions};
use rfi_core::state::MAX_MOMENT;
use rfi_core::verify::{q3_with_sign_error, run_suite, Formulas, SuiteConfig};
use rfi_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "rfi-ent", version, about = "Reference-frame-independent entanglement analysis for two-qubit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a rotated photon source and analyze every rotation.
    Simulate(SimulateArgs),
    /// Analyze a count file (JSON or CSV).
    Analyze(AnalyzeArgs),
    /// Sample random states and check the concurrence bounds.
    Montecarlo(MontecarloArgs),
    /// Run the identity and invariance suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

impl OutFormat {
    fn ext(self) -> &'static str {
        match self {
            OutFormat::Json => "json",
            OutFormat::Csv => "csv",
        }
    }
}

#[derive(Args)]
struct AnalysisFlags {
    /// Standard deviations required by the purity test.
    #[arg(long, default_value_t = 3.0)]
    z_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MERCATOR_DEPTH)]
    mercator_depth: usize,
}

impl AnalysisFlags {
    fn options(&self) -> Result<AnalysisOptions, Failure> {
        if !(self.z_threshold.is_finite() && self.z_threshold > 0.0) {
            return Err(Failure::config(format!("--z-threshold must be positive, got {}", self.z_threshold)));
        }
        if !(1..MAX_MOMENT).contains(&self.mercator_depth) {
            return Err(Failure::config(format!(
                "--mercator-depth must be in 1..={}, got {}",
                MAX_MOMENT - 1,
                self.mercator_depth
            )));
        }
        Ok(AnalysisOptions {
            z: self.z_threshold,
            mercator_depth: self.mercator_depth,
            ..AnalysisOptions::default()
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Photon pairs per measurement setting.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = DEFAULT_FIDELITY)]
    fidelity: f64,
    /// Number of rotations; rotation 1 is the unrotated state.
    #[arg(long, default_value_t = 10)]
    rotations: usize,
    /// Output directory for count files, reports and the summary.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Count file; `.csv` is read as CSV, anything else as JSON.
    path: PathBuf,
    /// Report destination; printed as text when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(Args)]
struct MontecarloArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Mixed)]
    ensemble: EnsembleArg,
    /// Output directory for the scatter dataset and summary.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Mixed,
    Pure,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Write the suite results as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Swap in a Q₃ with one sign flipped.
    #[arg(long, hide = true)]
    inject_q3_sign_error: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::config(format!("cannot write {}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::config(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("RFI_ENT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("RFI_ENT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::output(dir, e))
}

fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::output(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::output(path, e))
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

/// Flat `quantity,value,sigma` rows for CSV output.
fn analysis_rows(a: &Analysis) -> Vec<(String, f64, f64)> {
    let r = &a.rfi;
    let mut rows: Vec<(String, f64, f64)> = [
        ("q1_a", r.q1_a),
        ("q1_b", r.q1_b),
        ("q2", r.q2),
        ("q3", r.q3),
        ("q4", r.q4),
        ("q5", r.q5),
        ("g", r.g),
        ("y", r.y),
        ("z1", r.z1),
        ("z2", r.z2),
        ("q2_norm", r.normalized.q2),
        ("q3_norm", r.normalized.q3),
        ("q4_norm", r.normalized.q4),
        ("q5_norm", r.normalized.q5),
        ("purity", a.purities.full),
        ("purity_a", a.purities.a),
        ("purity_b", a.purities.b),
        ("c_lower_q2", a.concurrence_from_q2.lower),
        ("c_upper_q2", a.concurrence_from_q2.upper),
        ("c_lower_purity", a.concurrence_from_purities.lower),
        ("c_upper_purity", a.concurrence_from_purities.upper),
        ("s2", a.entropy.s2),
        ("s2_upper_bound", a.entropy.s2_upper_bound.value),
        ("s1_lower_bound", a.entropy.s1_lower_bound.value),
    ]
    .into_iter()
    .map(|(k, m)| (k.to_string(), m.value, m.sigma))
    .collect();
    for row in &a.tomography.rows {
        rows.push((format!("tomographic_{}", row.quantity), row.tomographic, 0.0));
    }
    rows
}

fn analysis_csv(a: &Analysis) -> Vec<u8> {
    let mut s = String::from("quantity,value,sigma\n");
    for (k, v, e) in analysis_rows(a) {
        s.push_str(&format!("{k},{v:.12},{e:.12}\n"));
    }
    s.into_bytes()
}

fn render_analysis(a: &Analysis, format: OutFormat) -> Vec<u8> {
    match format {
        OutFormat::Json => json_bytes(a),
        OutFormat::Csv => analysis_csv(a),
    }
}

fn simulate(args: &SimulateArgs) -> CliResult {
    if args.budget == 0 {
        return Err(Failure::config("--budget must be positive"));
    }
    if args.rotations == 0 {
        return Err(Failure::config("--rotations must be positive"));
    }
    let opts = args.analysis.options()?;
    let state = state_for_fidelity(args.fidelity)?;
    let runs: Vec<(Vec<CountRecord>, Analysis)> = (1..=args.rotations)
        .into_par_iter()
        .map(|k| -> Result<_, Error> {
            let model = rotation_model(&state, args.budget, args.seed, k)?;
            let records = simulate_all(&model)?;
            let analysis = Analysis::from_records(&records, &opts)?;
            Ok((records, analysis))
        })
        .collect::<Result<_, _>>()?;

    let mut summary = String::from(
        "rotation,q2_norm,q2_norm_sigma,q3_norm,q3_norm_sigma,q4_norm,q4_norm_sigma,q5_norm,q5_norm_sigma,\
         c_lower,c_lower_sigma,c_upper,c_upper_sigma,purity_test\n",
    );
    for (k, (_, a)) in runs.iter().enumerate() {
        let n = &a.rfi.normalized;
        let c = &a.concurrence_from_q2;
        summary.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            k + 1,
            n.q2.value,
            n.q2.sigma,
            n.q3.value,
            n.q3.sigma,
            n.q4.value,
            n.q4.sigma,
            n.q5.value,
            n.q5.sigma,
            c.lower.value,
            c.lower.sigma,
            c.upper.value,
            c.upper.sigma,
            serde_json::to_value(a.separability.verdict).expect("verdict serializes").as_str().unwrap_or("")
        ));
    }

    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            for (k, (records, analysis)) in runs.iter().enumerate() {
                let counts = dir.join(format!("counts_{:02}.{}", k + 1, args.format.ext()));
                write_counts(&counts, records, args.format.into()).map_err(|e| Failure::output(&counts, e))?;
                let report = dir.join(format!("report_{:02}.{}", k + 1, args.format.ext()));
                let bytes = render_analysis(analysis, args.format);
                write_file(&report, |w| w.write_all(&bytes))?;
            }
            let path = dir.join("summary.csv");
            write_file(&path, |w| w.write_all(summary.as_bytes()))?;
            println!("wrote {} rotations to {}", runs.len(), dir.display());
        }
        None => print!("{summary}"),
    }
    Ok(0)
}

fn analyze(args: &AnalyzeArgs) -> CliResult {
    let opts = args.analysis.options()?;
    let records = read_counts(&args.path).map_err(|e| match e {
        Error::Io(io) => Failure::data(format!("cannot read {}: {io}", args.path.display())),
        other => Failure::data(format!("{}: {other}", args.path.display())),
    })?;
    let analysis = Analysis::from_records(&records, &opts)?;
    match &args.out {
        Some(path) => {
            let bytes = render_analysis(&analysis, args.format);
            write_file(path, |w| w.write_all(&bytes))?;
        }
        None => print!("{}", analysis.to_text()),
    }
    Ok(0)
}

fn run_montecarlo(args: &MontecarloArgs) -> CliResult {
    let ensemble = match args.ensemble {
        EnsembleArg::Mixed => Ensemble::Mixed,
        EnsembleArg::Pure => Ensemble::Pure,
    };
    let run = montecarlo::run(args.samples, args.seed, ensemble)?;
    let s = &run.summary;
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join(format!("points.{}", args.format.ext()));
        match args.format {
            OutFormat::Csv => {
                let file = File::create(&path).map_err(|e| Failure::output(&path, e))?;
                montecarlo::write_points_csv(BufWriter::new(file), &run.points).map_err(|e| Failure::output(&path, e))?;
            }
            OutFormat::Json => {
                let bytes = json_bytes(&run.points);
                write_file(&path, |w| w.write_all(&bytes))?;
            }
        }
        let bytes = json_bytes(s);
        write_file(&dir.join("summary.json"), |w| w.write_all(&bytes))?;
    }
    println!("samples: {} ({:?} ensemble, seed {})", s.samples, s.ensemble, s.seed);
    println!("C^2 >= (Q2 - 1)/2 violations: {}", s.lower_bound_violations);
    println!("purity sandwich violations: {}", s.sandwich_violations);
    println!("MEMS upper-bound violations (unproven bound): {}", s.mems_violations);
    if ensemble == Ensemble::Pure {
        println!("max |Q2 - 1 - 2C^2|: {:.3e}", s.max_pure_identity_residual);
    }
    for (label, n) in montecarlo::BAND_LABELS.iter().zip(s.band_counts) {
        println!("purity {label}: {n}");
    }
    if let Some(m) = s.max_q2_low_purity {
        println!(
            "max normalized Q2 at purity <= 0.5: {m:.6} (crosses Q2 = 1: {})",
            s.low_purity_crosses_q2_one
        );
    }
    let clean = s.lower_bound_violations == 0 && s.sandwich_violations == 0;
    Ok(if clean { 0 } else { EXIT_INVARIANT })
}

fn verify(args: &VerifyArgs) -> CliResult {
    if args.samples == 0 {
        return Err(Failure::config("--samples must be positive"));
    }
    let formulas = if args.inject_q3_sign_error {
        Formulas { q3: q3_with_sign_error }
    } else {
        Formulas::default()
    };
    let report = run_suite(
        &SuiteConfig {
            samples: args.samples,
            seed: args.seed,
        },
        &formulas,
    );
    print!("{}", report.to_text());
    if let Some(path) = &args.out {
        let bytes = json_bytes(&report);
        write_file(path, |w| w.write_all(&bytes))?;
    }
    Ok(if report.all_passed() { 0 } else { EXIT_INVARIANT })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Montecarlo(a) => run_montecarlo(a),
        Command::Verify(a) => verify(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
