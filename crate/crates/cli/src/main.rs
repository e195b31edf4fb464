use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use commands::{Artifact, CommandError};
use config::{ConfigError, Format, RunConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Spectra and stability of the linearized 2D Euler equation at shear states.
#[derive(Parser, Debug)]
#[command(name = "euler-spectra", version)]
struct Cli {
    /// Config file with one `key = value` per line (dotted keys, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shear wave vector, e.g. `1,1`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<String>,
    /// Shear amplitude Γ as `re` or `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Class representative, e.g. `1,0`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    khat: Option<String>,
    #[arg(long, global = true)]
    cf_tol: Option<f64>,
    #[arg(long, global = true)]
    root_tol: Option<f64>,
    #[arg(long, global = true)]
    eig_residual: Option<f64>,
    /// Finite-section size.
    #[arg(long = "n-matrix", global = true)]
    n_matrix: Option<usize>,
    /// Subsystem window half-width: n in [-w, w].
    #[arg(long, global = true)]
    n_window: Option<i64>,
    /// Galerkin cutoff K (also the scan radius of `classes`).
    #[arg(long = "k-cutoff", global = true)]
    k_cutoff: Option<f64>,
    /// Seeds per side for the eigenvalue search.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classes meeting the disk and stability verdicts of all classes within the scan radius.
    Classes,
    /// Eigenvalue quadruples of one class by the continued fraction.
    EigsCf,
    /// Finite-section spectrum with isolated/band tags.
    EigsMatrix {
        /// Operator: A (full), B (constant tail) or C = A - B.
        #[arg(long)]
        operator: Option<String>,
    },
    /// Endpoints of the essential band.
    Band,
    /// Integrate one subsystem and report conservation.
    Simulate {
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Amplitude of the random initial state.
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Nonlinear run from the shear state plus a random perturbation.
    EulerSim {
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Amplitude of the perturbation.
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Run the acceptance cross-checks and print a pass/fail table.
    Verify {
        /// Run a single criterion (1-9).
        #[arg(long)]
        only: Option<u8>,
    },
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    let mut push = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k, v));
        }
    };
    push("p", cli.p.clone());
    push("Gamma", cli.gamma.clone());
    push("khat", cli.khat.clone());
    push("tolerances.cf_tol", cli.cf_tol.map(|x| x.to_string()));
    push("tolerances.root_tol", cli.root_tol.map(|x| x.to_string()));
    push("tolerances.eig_residual", cli.eig_residual.map(|x| x.to_string()));
    push("sizes.N_matrix", cli.n_matrix.map(|x| x.to_string()));
    push("sizes.n_window", cli.n_window.map(|x| x.to_string()));
    push("sizes.K_cutoff", cli.k_cutoff.map(|x| x.to_string()));
    push("sizes.grid", cli.grid.map(|x| x.to_string()));
    push("output.path", cli.output.as_ref().map(|x| x.display().to_string()));
    push(
        "output.format",
        cli.format.map(|f| match f {
            FormatArg::Json => "json".to_string(),
            FormatArg::Csv => "csv".to_string(),
        }),
    );
    match &cli.command {
        Command::EigsMatrix { operator } => push("operator", operator.clone()),
        Command::Simulate { dt, steps, seed, amplitude } | Command::EulerSim { dt, steps, seed, amplitude } => {
            push("sim.dt", dt.map(|x| x.to_string()));
            push("sim.steps", steps.map(|x| x.to_string()));
            push("sim.seed", seed.map(|x| x.to_string()));
            push("sim.amplitude", amplitude.map(|x| x.to_string()));
        }
        _ => {}
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("EULER_SPECTRA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("EULER_SPECTRA_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("cannot configure thread pool: {e}")))
}

fn run(cli: &Cli) -> anyhow::Result<Artifact> {
    configure_threads()?;
    let cfg = build_config(cli)?;
    let artifact = match &cli.command {
        Command::Classes => commands::classes(&cfg),
        Command::EigsCf => commands::eigs_cf(&cfg),
        Command::EigsMatrix { .. } => commands::eigs_matrix(&cfg),
        Command::Band => commands::band(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::EulerSim { .. } => commands::euler_sim(&cfg),
        Command::Verify { only } => commands::verify(*only),
    }?;
    let body = match cfg.format {
        Format::Json => &artifact.json,
        Format::Csv => &artifact.csv,
    };
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))?;
            if let Some(t) = &artifact.table {
                print!("{t}");
            }
        }
        None => match &artifact.table {
            Some(t) if cfg.format == Format::Json => print!("{t}"),
            _ => print!("{body}"),
        },
    }
    Ok(artifact)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() || err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<CommandError>() {
        Some(CommandError::Config(_)) => EXIT_USAGE,
        Some(CommandError::Core(e)) if e.is_usage() => EXIT_USAGE,
        Some(_) => EXIT_NUMERICAL,
        None => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(a) if a.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
