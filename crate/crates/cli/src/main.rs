use clap::{Args, Parser, Subcommand};
use rvp_cli::{dispatch, parse_config, CliError, Mode, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "RVP_THREADS";

#[derive(Parser)]
#[command(
    name = "rvp",
    version,
    about = "Simulation and verification toolkit for the radial massless Vlasov-Poisson system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory, overriding `run.output_dir`. Must exist.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Prove the identity catalog with exact arithmetic.
    VerifyAlgebra(Common),
    /// Free-streaming velocity averages and the charge identity.
    FreeStream(Common),
    /// Self-consistent particle run.
    Simulate(Common),
    /// Scan the functional inequality over the test family.
    Inequality {
        #[command(flatten)]
        common: Common,
        /// Weight powers, comma separated.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<u32>>,
        /// Times, comma separated.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        /// Family members, comma separated.
        #[arg(long, value_delimiter = ',')]
        family: Option<Vec<String>>,
        /// Relative tolerance of the right-hand side.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Summarize the result files in the output directory.
    Report(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.run.output_dir = out.clone();
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| CliError::Env {
        name: THREADS_VAR,
        message: format!("expected a positive integer, got {raw:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Env {
            name: THREADS_VAR,
            message: e.to_string(),
        })
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    init_threads()?;
    let (mode, cfg) = match cli.command {
        Command::VerifyAlgebra(c) => (Mode::VerifyAlgebra, load(&c)?),
        Command::FreeStream(c) => (Mode::FreeStream, load(&c)?),
        Command::Simulate(c) => (Mode::Simulate, load(&c)?),
        Command::Report(c) => (Mode::Report, load(&c)?),
        Command::Inequality {
            common,
            p,
            times,
            family,
            tolerance,
        } => {
            let mut cfg = load(&common)?;
            let q = &mut cfg.inequality;
            if let Some(p) = p {
                q.p = p;
            }
            if let Some(t) = times {
                q.times = t;
            }
            if let Some(f) = family {
                q.family = f;
            }
            if let Some(tol) = tolerance {
                q.tolerance = tol;
            }
            (Mode::Inequality, cfg)
        }
    };
    let outcome = dispatch(mode, &cfg)?;
    print!("{}", outcome.text);
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
