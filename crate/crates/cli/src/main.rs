use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use skewfib_cli::{run, write_outputs, Command, RunConfig};

/// Certificates, foliation scans, lifts and demos for line fibrations of R^3.
///
/// Exit codes: 0 all checks pass, 1 a property fails, 2 config or runtime error.
/// SKEWFIB_THREADS caps the worker threads.
#[derive(Parser)]
#[command(name = "skewfib", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SKEWFIB_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or(format!("SKEWFIB_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("skewfib: {e}");
        return ExitCode::from(2);
    }
    let mut config = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("skewfib: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let outcome = run(cli.command, &config);
    print!("{}", outcome.report.to_json());
    if let Some(dir) = cli.out.or(config.output.clone()) {
        if let Err(e) = write_outputs(&outcome, &dir) {
            eprintln!("skewfib: {e}");
            return ExitCode::from(2);
        }
    }
    for e in &outcome.report.errors {
        eprintln!("skewfib: {e}");
    }
    ExitCode::from(outcome.exit_code() as u8)
}
