mod levels;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use rrm::fields::CoefficientField;
use rrm::grid::Domain;
use rrm::output::{interpolation_table, perturbation_table, transmission_table, Table};
use rrm::problems::{
    run_perturbation, run_transmission, ExactPreset, GridKind, PerturbationConfig, TransmissionConfig,
    DEFAULT_EIGEN_COUNT, EIGEN_MAX_N, PERTURBATION_MAX_N,
};
use rrm::verify::{run_suite, Suite, DEFAULT_RATIO};

use levels::Levels;
use manifest::{config_hash, display, Output, RunManifest, VERSION};

const MAX_N_ENV: &str = "RRM_MAX_N";

#[derive(Parser, Debug)]
#[command(name = "rrm", version, about = "Reduced rectangular Morley finite element experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a property suite on the standard grid battery.
    Verify(VerifyArgs),
    /// Singular perturbation convergence study.
    Perturbation(PerturbationArgs),
    /// Transmission eigenvalues across mesh levels.
    Transmission(TransmissionArgs),
}

#[derive(clap::Args, Debug)]
struct OutputArgs {
    /// Output directory for tables and manifests.
    #[arg(long, default_value = "rrm-out")]
    out: PathBuf,
    /// Emit whitespace-separated `.dat` tables instead of CSV.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    /// grisvard, reproduction, interpolation or all.
    suite: Suite,
    /// Also write the interpolation error tables to this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit whitespace-separated `.dat` tables instead of CSV.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Example {
    /// Unit square, u = (sin πx sin πy)².
    #[value(name = "5.1")]
    E51,
    /// L-shape, same u.
    #[value(name = "5.2")]
    E52,
    /// Unit square, boundary layer against u⁰ = sin πx sin πy.
    #[value(name = "5.3")]
    E53,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GridArg {
    Uniform,
    Graded,
}

#[derive(clap::Args, Debug)]
struct PerturbationArgs {
    #[arg(long, value_enum, default_value = "5.1")]
    example: Example,
    /// Must agree with the example: unit-square for 5.1 and 5.3, l-shape for 5.2.
    #[arg(long)]
    domain: Option<Domain>,
    #[arg(long, value_enum, default_value = "uniform")]
    grid: GridArg,
    /// Split ratio of graded grids (default 0.4).
    #[arg(long)]
    ratio: Option<f64>,
    /// `a..b` or `a,b,...`; level `a` has 2^a cells per unit length
    /// (default 3..6, or 2..5 for 5.3).
    #[arg(long)]
    levels: Option<Levels>,
    /// Comma-separated ε values (default 1,1e-2,1e-6, or 2^-10 for 5.3).
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// `affine` (8 + x - y) or `const:c`.
    #[arg(long, default_value = "affine")]
    beta: CoefficientField,
    /// Raise the desk-scale cap on cells per unit length.
    #[arg(long)]
    max_n: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(clap::Args, Debug)]
struct TransmissionArgs {
    #[arg(long, default_value = "unit-square")]
    domain: Domain,
    /// `a..b` or `a,b,...` (default 4..6, or 3..5 on the l-shape).
    #[arg(long)]
    levels: Option<Levels>,
    /// `affine` (8 + x - y) or `const:c`; must exceed 1.
    #[arg(long, default_value = "affine")]
    beta: CoefficientField,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = DEFAULT_EIGEN_COUNT)]
    k: usize,
    /// Raise the desk-scale cap on cells per unit length.
    #[arg(long)]
    max_n: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

fn usage_error(msg: String) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

/// Cap override from `--max-n` or the environment, with a warning.
fn max_n_override(flag: Option<usize>, cap: usize) -> Option<usize> {
    let env = std::env::var(MAX_N_ENV).ok().map(|v| {
        v.parse::<usize>()
            .unwrap_or_else(|_| usage_error(format!("{MAX_N_ENV} must be a positive integer, got '{v}'")))
    });
    let n = flag.or(env)?;
    eprintln!("warning: desk-scale cap n <= {cap} raised to n <= {n}");
    Some(n)
}

fn print_table(t: &Table) {
    println!("{}", t.columns.join("\t"));
    for r in &t.rows {
        println!("{}", r.join("\t"));
    }
}

fn finish(
    command: &str,
    stem: &str,
    config: serde_json::Value,
    table: &Table,
    out: &OutputArgs,
    started: Instant,
) -> Result<()> {
    let hash = config_hash(command, &config);
    let output = Output {
        dir: out.out.clone(),
        gnuplot: out.gnuplot,
    };
    let path = output.write_table(stem, table, &hash)?;
    let manifest = RunManifest {
        command: std::env::args().collect::<Vec<_>>().join(" "),
        config,
        outputs: vec![display(&path)],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        version: VERSION.into(),
        hash,
    };
    let mpath = output.write_manifest(stem, &manifest)?;
    print_table(table);
    println!("wrote {} and {}", path.display(), mpath.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let report = run_suite(args.suite)?;
    println!("{:<13} {:<48} {:>12} {:>8} {:>9}  result", "suite", "case", "measured", "target", "tol");
    for c in &report.checks {
        let target = c.target.map(|t| format!("{t}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<13} {:<48} {:>12.4e} {:>8} {:>9.1e}  {}",
            c.suite.to_string(),
            c.case,
            c.measured,
            target,
            c.tolerance,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    if let Some(dir) = args.out {
        let output = Output {
            dir,
            gnuplot: args.gnuplot,
        };
        let hash = config_hash("verify", &serde_json::json!({ "suite": args.suite }));
        for (name, rows) in &report.interpolation {
            let stem = format!("interpolation-{}", name.replace([' ', '(', ')'], "-").trim_end_matches('-'));
            let p = output.write_table(&stem, &interpolation_table(rows), &hash)?;
            println!("wrote {}", p.display());
        }
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} failed", report.checks.len(), failed);
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn perturbation_config(args: &PerturbationArgs) -> PerturbationConfig {
    let (domain, exact) = match args.example {
        Example::E51 => (Domain::UnitSquare, ExactPreset::Example51),
        Example::E52 => (Domain::LShape, ExactPreset::Example51),
        Example::E53 => (Domain::UnitSquare, ExactPreset::Example53Reduced),
    };
    if let Some(d) = args.domain {
        if d != domain {
            usage_error(format!("--example {:?} runs on {domain}, not {d}", args.example));
        }
    }
    let grid = match (args.grid, args.ratio) {
        (GridArg::Uniform, Some(_)) => usage_error("--ratio requires --grid graded".into()),
        (GridArg::Uniform, None) => GridKind::Uniform,
        (GridArg::Graded, r) => GridKind::Graded {
            ratio: r.unwrap_or(DEFAULT_RATIO),
        },
    };
    let (levels, eps) = match args.example {
        Example::E53 => ("2..5", vec![2f64.powi(-10)]),
        _ => ("3..6", vec![1.0, 1e-2, 1e-6]),
    };
    let levels = args.levels.clone().unwrap_or_else(|| levels.parse().unwrap());
    PerturbationConfig {
        domain,
        grid,
        levels: levels.cells_per_unit(),
        eps: args.eps.clone().unwrap_or(eps),
        beta: args.beta,
        exact,
        max_n: max_n_override(args.max_n, PERTURBATION_MAX_N),
    }
}

fn cmd_perturbation(args: PerturbationArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let cfg = perturbation_config(&args);
    let study = run_perturbation(&cfg)?;
    for w in &study.warnings {
        eprintln!("warning: {w}");
    }
    let stem = format!("perturbation-{}", example_name(args.example));
    finish("perturbation", &stem, serde_json::to_value(&cfg)?, &perturbation_table(&study), &args.output, started)?;
    Ok(ExitCode::SUCCESS)
}

fn example_name(e: Example) -> &'static str {
    match e {
        Example::E51 => "5.1",
        Example::E52 => "5.2",
        Example::E53 => "5.3",
    }
}

fn cmd_transmission(args: TransmissionArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let default_levels = if args.domain == Domain::LShape { "3..5" } else { "4..6" };
    let levels = args.levels.clone().unwrap_or_else(|| default_levels.parse().unwrap());
    let cfg = TransmissionConfig {
        domain: args.domain,
        levels: levels.cells_per_unit(),
        beta: args.beta,
        k: args.k,
        max_n: max_n_override(args.max_n, EIGEN_MAX_N),
    };
    let study = run_transmission(&cfg)?;
    for w in &study.warnings {
        eprintln!("warning: {w}");
    }
    let stem = format!("transmission-{}", args.domain);
    finish("transmission", &stem, serde_json::to_value(&cfg)?, &transmission_table(&study), &args.output, started)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Perturbation(a) => cmd_perturbation(a),
        Command::Transmission(a) => cmd_transmission(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
