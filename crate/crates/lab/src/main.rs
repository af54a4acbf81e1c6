use std::path::PathBuf;
use std::process::ExitCode;

use bulkedge::engine::EngineKind;
use clap::{Parser, Subcommand};
use lab::{compare_files, run, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "lab", about = "Run bulkedge scenarios and compare against baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        engine: Option<EngineKind>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the baseline from this run instead of comparing against it.
        #[arg(long)]
        update_baselines: bool,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare a report against a baseline.
    Compare { report: PathBuf, baseline: PathBuf },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> lab::Result<bool> {
    match Cli::parse().command {
        Command::Run {
            config,
            engine,
            out,
            update_baselines,
            jobs,
            seed,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let outcome = run(
                cfg,
                &RunOptions {
                    engine,
                    out,
                    update_baselines,
                    jobs,
                    seed,
                },
            )?;
            let r = &outcome.report;
            println!("{} ({} engine, {} points)", r.scenario, r.engine, r.points.len());
            for c in &r.checks {
                let status = match (c.pass, c.contract) {
                    (true, _) => "ok",
                    (false, true) => "FAIL",
                    (false, false) => "note",
                };
                println!("  {status:4} {} [{}]: {:.3e} ≤ {:.3e}", c.name, c.point, c.value, c.limit);
            }
            if let Some(b) = &outcome.baseline {
                println!("{b}");
            }
            println!("wrote {}", outcome.out.display());
            Ok(outcome.passed())
        }
        Command::Compare { report, baseline } => {
            let c = compare_files(&report, &baseline)?;
            println!("{c}");
            Ok(c.passed())
        }
    }
}
