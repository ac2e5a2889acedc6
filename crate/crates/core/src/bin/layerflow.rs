use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use layerflow::config::Config;
use layerflow::error::Error;
use layerflow::runner::{run_scenario, write_outputs, Subcommand};

/// Run one verification scenario of the free-surface layer solver.
#[derive(Debug, Parser)]
#[command(name = "layerflow", version)]
struct Cli {
    /// verify-kernels, weak-dn, helmholtz, resolvent-sweep, semigroup-decay, linear-mr or global-solve
    subcommand: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV table and summary.txt.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd: Subcommand = match cli.subcommand.parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("layerflow: {e}");
            return ExitCode::from(2);
        }
    };
    let mut cfg = match Config::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("layerflow: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match run_scenario(cmd, &cfg) {
        Ok(out) => {
            if let Err(e) = write_outputs(&out, &cli.out) {
                eprintln!("layerflow: {e}");
                return ExitCode::from(1);
            }
            print!("{}", out.summary_text());
            if out.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Error::Config(msg)) => {
            eprintln!("layerflow: config: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("layerflow: {cmd:?} failed: {e}", cmd = cmd.name());
            let _ = std::fs::create_dir_all(&cli.out);
            let _ = std::fs::write(cli.out.join("summary.txt"), format!("CHECK run FAIL 0\nERROR {e}\n"));
            ExitCode::from(1)
        }
    }
}
