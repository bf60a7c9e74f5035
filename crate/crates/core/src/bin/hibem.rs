use clap::{Parser, ValueEnum};
use hibem::study::{run_study, StudyConfig, StudyKind};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StudyArg {
    Solve,
    Convergence,
    Compression,
}

/// Isogeometric boundary element studies on NURBS geometries.
#[derive(Debug, Parser)]
#[command(name = "hibem", version)]
struct Cli {
    /// Problem description (JSON).
    #[arg(long)]
    geometry: PathBuf,

    /// Study to run.
    #[arg(long, value_enum)]
    study: StudyArg,

    /// Polynomial degree of the Cauchy data spaces.
    #[arg(long, default_value_t = 2)]
    p: usize,

    /// Chebyshev interpolation order of the far field.
    #[arg(long, default_value_t = 6)]
    k: usize,

    /// Admissibility parameter.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,

    /// Cluster leaf size.
    #[arg(long, default_value_t = 16)]
    nmin: usize,

    /// Refinement levels (spans per patch double each level).
    #[arg(long, default_value_t = 3)]
    levels: usize,

    /// Iterative solver tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed of the deterministic random vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(cli: &Cli) -> hibem::Result<()> {
    let input = hibem::input::load(&cli.geometry)?;
    let cfg = StudyConfig {
        kind: match cli.study {
            StudyArg::Solve => StudyKind::Solve,
            StudyArg::Convergence => StudyKind::Convergence,
            StudyArg::Compression => StudyKind::Compression,
        },
        degree: cli.p,
        interp_order: cli.k,
        eta: cli.eta,
        n_min: cli.nmin,
        levels: cli.levels,
        tol: cli.tol,
        seed: cli.seed,
        quad: hibem::assembly::QuadratureConfig::default(),
    };
    match &cli.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            run_study(&input, &cfg, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run_study(&input, &cfg, &mut lock)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                hibem::Error::NoConvergence { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
