use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rank1_cli::{export_plotdata, ExperimentKind, ExperimentSpec, Report};

/// Output directory override; the only environment variable read.
const OUT_ENV: &str = "RANK1_OUT_DIR";
const DEFAULT_OUT: &str = "rank1-out";

#[derive(Parser)]
#[command(name = "rank1", version, about = "Verification experiments on rank-one flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tower geometry, invariants and the finiteness criterion.
    StageAudit(RunArgs),
    /// Koopman matrix coefficients of a test family.
    Correlate(RunArgs),
    /// Residuals of a weak-limit probe along a time sequence.
    WeakLimit(RunArgs),
    /// Forward and backward triple correlations on an asymmetric schedule.
    TripleAsymmetry(RunArgs),
    /// Factor, component and off-scale limits along M-stage times.
    FockClaims(RunArgs),
    /// Spectral density estimates of a test family.
    Spectrum(RunArgs),
    /// Affinity between a spectral estimate and its dilations.
    Disjointness(RunArgs),
    /// The reflection identity on random cases.
    ReflectionCheck(RunArgs),
    /// Rewrite the plot data of an existing report as CSV.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; overrides RANK1_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<bool> {
    let spec = ExperimentSpec::load(&args.spec, Some(kind))?;
    let dir = out_dir(args.out);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let start = Instant::now();
    let report = rank1_cli::run(&spec)?;
    let elapsed = start.elapsed().as_secs_f64();

    let report_name = spec.output.report.clone().unwrap_or_else(|| format!("{kind}.json"));
    let report_path = dir.join(&report_name);
    write(&report_path, &report.to_json()?)?;
    let stem = Path::new(&report_name).file_stem().and_then(|s| s.to_str()).unwrap_or(kind.name()).to_string();
    if report.plot.is_some() {
        let plot_name = spec.output.plot.clone().unwrap_or_else(|| format!("{stem}.csv"));
        export_plotdata(&report, &dir.join(plot_name))?;
    }
    let timing = serde_json::json!({ "experiment": kind.name(), "wall_clock_seconds": elapsed });
    write(&dir.join(format!("{stem}.timing.json")), &format!("{timing:#}\n"))?;

    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("{}: {} ({})", kind, if report.pass { "pass" } else { "FAIL" }, report_path.display());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::StageAudit(a) => run_experiment(ExperimentKind::StageAudit, a),
        Command::Correlate(a) => run_experiment(ExperimentKind::Correlate, a),
        Command::WeakLimit(a) => run_experiment(ExperimentKind::WeakLimit, a),
        Command::TripleAsymmetry(a) => run_experiment(ExperimentKind::TripleAsymmetry, a),
        Command::FockClaims(a) => run_experiment(ExperimentKind::FockClaims, a),
        Command::Spectrum(a) => run_experiment(ExperimentKind::Spectrum, a),
        Command::Disjointness(a) => run_experiment(ExperimentKind::Disjointness, a),
        Command::ReflectionCheck(a) => run_experiment(ExperimentKind::ReflectionCheck, a),
        Command::Plot { report, out } => (|| {
            let text = fs::read_to_string(&report).with_context(|| format!("cannot read {}", report.display()))?;
            let r: Report = serde_json::from_str(&text).context("not a rank1 report")?;
            export_plotdata(&r, &out)?;
            Ok(true)
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
