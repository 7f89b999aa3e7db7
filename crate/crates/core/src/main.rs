use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use branchidx::cli::commands::{self, GlobalOptions, EXIT_INPUT};
use branchidx::cli::problem::ProblemFile;
use branchidx::cli::report::to_json;

/// Monodromy and index computations for branched sections of planar
/// bundles.
#[derive(Debug, Parser)]
#[command(name = "branchidx", version, about)]
struct Cli {
    /// Residual below which a base point counts as singular.
    #[arg(long, global = true, value_name = "TOL")]
    tol_singular: Option<f64>,
    /// Initial samples per loop traversal.
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,
    /// Seed for randomly placed loop base points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Locate singular points and report their monodromy and indices.
    Analyze {
        problem: PathBuf,
        /// Report path; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the curvature integral with the index sum on a closed surface.
    VerifyTheorem {
        problem: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Draw the line web of a projective system as SVG.
    Plot {
        problem: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Cells per side.
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
}

fn write_output(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn run(cli: Cli) -> i32 {
    let opts = GlobalOptions {
        tol_singular: cli.tol_singular,
        samples: cli.samples,
        seed: cli.seed,
    };
    let path = match &cli.command {
        Command::Analyze { problem, .. } | Command::VerifyTheorem { problem, .. } | Command::Plot { problem, .. } => {
            problem
        }
    };
    let problem = match ProblemFile::load(path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let written = match &cli.command {
        Command::Analyze { out, .. } => commands::analyze(&problem, &opts)
            .map(|o| (o.exit_code, to_json(&o.report), out.clone())),
        Command::VerifyTheorem { out, .. } => commands::verify_theorem(&problem, &opts)
            .map(|o| (o.exit_code, to_json(&o.report), out.clone())),
        Command::Plot { out, grid, .. } => {
            commands::plot(&problem, *grid, &opts).map(|svg| (0, svg, Some(out.clone())))
        }
    };
    match written {
        Ok((code, text, out)) => {
            if let Err(e) = write_output(out.as_deref(), &text) {
                eprintln!("error: cannot write output: {e}");
                return EXIT_INPUT;
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BRANCHIDX_LOG", "warn")).init();
    let code = run(Cli::parse());
    ExitCode::from(code as u8)
}
