use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spades_cli::{scenarios, CliError, Scenario};

/// Simulate the source's measurements from a config file.
#[derive(Debug, Parser)]
#[command(name = "spades", version)]
struct Args {
    scenario: Scenario,

    #[arg(long)]
    config: PathBuf,

    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

fn run(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let (report, dir) = scenarios::run(args.scenario, &text, args.seed, args.out.clone())?;
    let written = report.write(&dir, args.svg)?;
    print!("{}", report.summary_text());
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap's own exit code for usage errors is 2, which is reserved for
    // runtime failures here.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spades {}: {e}", args.scenario);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
