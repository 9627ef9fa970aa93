use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hmf_cli::presets::{run_preset, PRESETS};
use hmf_cli::{commands, CliError};

#[derive(Parser)]
#[command(name = "hmf", version, about = "Vlasov-HMF laboratory in the gliding frame")]
struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "hmf-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the gliding-frame equation and write snapshots and time series.
    RunSim { config: PathBuf },
    /// Penrose stability check of the configured kernel and profile.
    PenroseCheck { config: PathBuf },
    /// Empirical Volterra ratio table.
    VolterraBench { config: PathBuf },
    /// Simulation plus scattering state and weak limit.
    Scatter { config: PathBuf },
    /// Run a named experiment with built-in assertions.
    Preset { name: String },
}

fn exec(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::RunSim { config } => commands::run_sim(config, &cli.out),
        Command::PenroseCheck { config } => commands::penrose(config, &cli.out),
        Command::VolterraBench { config } => commands::volterra_bench(config, &cli.out),
        Command::Scatter { config } => commands::scatter(config, &cli.out),
        Command::Preset { name } => {
            let report = run_preset(name, &cli.out)?;
            let mut text: Vec<String> = report.checks.iter().map(|c| c.line()).collect();
            text.push(format!("artifacts in {} ({:.1} s)", report.dir.display(), report.seconds));
            let text = text.join("\n");
            if report.passed() {
                Ok(text)
            } else {
                println!("{text}");
                Err(CliError::Assertion(format!("preset {name} has failing checks")))
            }
        }
    }
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("HMF_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("HMF_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(CliError::Usage("HMF_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = threads().and_then(|_| exec(&cli));
    match result {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                if matches!(cli.command, Command::Preset { .. }) {
                    eprintln!("presets: {}", PRESETS.join(", "));
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
