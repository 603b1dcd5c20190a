use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use damped_eb::config::{Command, RunConfig};
use damped_eb::parallel::Threaded;
use damped_eb_core::harness::Profile;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Fast,
}

#[derive(Debug, Parser)]
#[command(name = "damped-eb", version, about = "Compact difference solver for damped beams and plates")]
struct Args {
    /// simulate, temporal-study, spatial-study, energy-study or validate-law
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`, defaults to `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "paper")]
    profile: ProfileArg,
    /// Worker threads for study runs; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

/// Exit status when a run finished but failed an energy or law check.
const VIOLATION: u8 = 2;

fn main() -> ExitCode {
    let args = Args::parse();
    let profile = match args.profile {
        ProfileArg::Paper => Profile::Paper,
        ProfileArg::Fast => Profile::Fast,
    };
    let config = match RunConfig::load(&args.config, profile) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let out = args
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let exec = args.threads.map_or_else(Threaded::from_available, Threaded::new);
    match damped_eb::execute(args.command, &config, &out, &exec) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            match outcome.violation {
                Some(v) => {
                    eprintln!("check failed: {v}");
                    ExitCode::from(VIOLATION)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
