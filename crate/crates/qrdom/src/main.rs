//! Command-line front end for the quasi-random discrete ordinates solver.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! runtime failures such as a non-converging iteration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrdom::commands;
use qrdom::config::RunConfig;
use qrdom::directions::SequenceKind;
use qrdom::error::Result;

#[derive(Parser)]
#[command(
    name = "qrdom",
    version,
    about = "Quasi-random discrete ordinates solver for 2D radiative transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration sources shared by the solving subcommands: an optional
/// `key = value` file, then individual flags that override it.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Problem name: problem1 or problem2.
    #[arg(long)]
    problem: Option<String>,
    /// Absorption coefficient.
    #[arg(long)]
    kappa: Option<f64>,
    /// Scattering coefficient.
    #[arg(long)]
    sigma_s: Option<f64>,
    /// Isotropic phase-function coefficient.
    #[arg(long)]
    a0: Option<f64>,
    /// Anisotropic phase-function coefficient.
    #[arg(long)]
    a1: Option<f64>,
    /// Cells along x1.
    #[arg(long)]
    nx: Option<usize>,
    /// Cells along x2.
    #[arg(long)]
    ny: Option<usize>,
    /// Relative tolerance of the inner batch loop.
    #[arg(long)]
    tol_inner: Option<f64>,
    /// Relative tolerance of the outer source loop.
    #[arg(long)]
    tol_outer: Option<f64>,
    /// Relative residual tolerance of the linear solver.
    #[arg(long)]
    linear_tol: Option<f64>,
    /// Direction quadruples per inner batch.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Batches required before the inner criterion may fire.
    #[arg(long)]
    min_batches: Option<usize>,
    /// Cap on source-iteration steps.
    #[arg(long)]
    max_source_iterations: Option<usize>,
    /// Worker threads (0 = host default).
    #[arg(long)]
    workers: Option<usize>,
    /// Direction sequence: reverse_halton or halton.
    #[arg(long)]
    sequence: Option<String>,
    /// Directory for output artifacts.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.problem {
            config.problem = v.clone();
        }
        if let Some(v) = self.kappa {
            config.kappa = v;
        }
        if let Some(v) = self.sigma_s {
            config.sigma_s = Some(v);
        }
        if let Some(v) = self.a0 {
            config.a0 = Some(v);
        }
        if let Some(v) = self.a1 {
            config.a1 = Some(v);
        }
        if let Some(v) = self.nx {
            config.nx = v;
        }
        if let Some(v) = self.ny {
            config.ny = v;
        }
        if let Some(v) = self.tol_inner {
            config.tol_inner = v;
        }
        if let Some(v) = self.tol_outer {
            config.tol_outer = v;
        }
        if let Some(v) = self.linear_tol {
            config.linear_tol = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.min_batches {
            config.min_batches = v;
        }
        if let Some(v) = self.max_source_iterations {
            config.max_source_iterations = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if let Some(v) = &self.sequence {
            config.sequence = SequenceKind::parse(v)?;
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        config.validate()?;
        Ok(config)
    }

    fn is_empty(&self) -> bool {
        self.config.is_none()
            && self.problem.is_none()
            && self.kappa.is_none()
            && self.sigma_s.is_none()
            && self.a0.is_none()
            && self.a1.is_none()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write fields, trace, and report.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Solve on a series of square meshes and tabulate the convergence.
    Refine {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated cells per side, strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        levels: Vec<usize>,
    },
    /// Solve once per scattering coefficient and tabulate the functionals.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated sigma_s values.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.9,2.5,5.0")]
        values: Vec<f64>,
    },
    /// Sample a stored field along the diagonal x2 = x1 (after mapping the
    /// unit parameter to the domain).
    Linecut {
        /// Field CSV produced by `run` (for example psi0.csv).
        field: PathBuf,
        /// Sample count along the line.
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Output CSV; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Problem selection used to add an exact-solution column.
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Dump the first direction quadruples of the sequence as CSV.
    Directions {
        /// Number of quadruples.
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Direction sequence: reverse_halton or halton.
        #[arg(long, default_value = "reverse_halton")]
        sequence: String,
        /// Output CSV; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<()> {
    match output {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let config = config.resolve()?;
            let summary = commands::cmd_run(&config)?;
            let last = summary.solution.trace.last().expect("converged run");
            println!(
                "converged after {} source steps ({} directions); artifacts in {}",
                last.step,
                4 * last.m_curr,
                config.output_dir.display()
            );
            Ok(())
        }
        Command::Refine { config, levels } => {
            let config = config.resolve()?;
            commands::cmd_refine(&config, &levels)?;
            let table = std::fs::read_to_string(config.output_dir.join("refine.txt"))?;
            print!("{table}");
            Ok(())
        }
        Command::Sweep { config, values } => {
            let config = config.resolve()?;
            commands::cmd_sweep(&config, &values)?;
            let table = std::fs::read_to_string(config.output_dir.join("sweep.txt"))?;
            print!("{table}");
            Ok(())
        }
        Command::Linecut {
            field,
            samples,
            output,
            config,
        } => {
            let resolved;
            let reference = if config.is_empty() {
                None
            } else {
                resolved = config.resolve()?;
                Some(&resolved)
            };
            let cut = commands::cmd_linecut(&field, reference, samples)?;
            emit(&cut.csv, output.as_ref())
        }
        Command::Directions {
            count,
            sequence,
            output,
        } => {
            let kind = SequenceKind::parse(&sequence)?;
            let csv = commands::cmd_directions(count, kind)?;
            emit(&csv, output.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(commands::exit_code_for(&error) as u8)
        }
    }
}
