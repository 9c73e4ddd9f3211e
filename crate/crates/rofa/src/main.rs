use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use rofa_sim::output::write_csv;
use rofa_sim::presets::{self, PRESETS};
use rofa_sim::{run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "rofa", version, about = "OFDMA baseband simulator: run scenarios, emit CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a scenario file and write CSV rows.
    Run {
        /// Preset name or path to a JSON scenario.
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    ListScenarios,
    /// Print a preset as JSON, a starting point for custom scenarios.
    Show { name: String },
    /// Check a scenario file without running it.
    Validate { config: PathBuf },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            trials,
            out,
        } => {
            let mut s = presets::resolve(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(t) = trials {
                s.trials = t;
            }
            let started = Instant::now();
            let rows = run_scenario(&s)?;
            match &out {
                Some(path) => {
                    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&rows, BufWriter::new(f))?;
                }
                None => write_csv(&rows, io::stdout().lock())?,
            }
            eprintln!(
                "{}: {} rows, {} trials per point, {:.1} s",
                s.name,
                rows.len(),
                s.trials,
                started.elapsed().as_secs_f64()
            );
        }
        Command::ListScenarios => {
            let mut out = io::stdout().lock();
            for (name, about) in PRESETS {
                writeln!(out, "{name:<22} {about}")?;
            }
        }
        Command::Show { name } => println!("{}", presets::get(&name)?.to_json()),
        Command::Validate { config } => {
            let s = Scenario::from_path(&config).with_context(|| format!("{}", config.display()))?;
            println!("{}: ok ({} trials, seed {})", s.name, s.trials, s.seed);
        }
    }
    Ok(())
}
