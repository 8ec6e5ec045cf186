use clap::{Parser, Subcommand};

use ionsim::config::ExperimentConfig;
use ionsim::run::run;

#[derive(Parser)]
#[command(name = "ionsim", version, about = "Trapped-ion readout and cooling sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a sweep config and write its result table.
    Run {
        /// Path to the JSON experiment config.
        config: String,
        /// Worker thread bound (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the output path from the config.
        #[arg(long)]
        out: Option<String>,
    },
    /// Parse and validate a config without running it.
    Validate { config: String },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    match Cli::parse().command {
        Command::Validate { config } => match ExperimentConfig::from_path(&config) {
            Ok(_) => {
                println!("ok");
                0
            }
            Err(e) => {
                eprintln!("{e}");
                1
            }
        },
        Command::Run { config, threads, out } => {
            let cfg = match ExperimentConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{e}");
                    return 1;
                }
            };
            let table = match threads {
                Some(n) => {
                    let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                        Ok(pool) => pool,
                        Err(e) => {
                            eprintln!("{e}");
                            return 1;
                        }
                    };
                    pool.install(|| run(&cfg))
                }
                None => run(&cfg),
            };
            let path = out.as_deref().unwrap_or(&cfg.output.path);
            if let Err(e) = table.write_to(path, cfg.output.format) {
                eprintln!("{e}");
                return 1;
            }
            if table.any_failed() {
                eprintln!(
                    "{} of {} grid points failed; see the status column in {path}",
                    table.rows.iter().filter(|r| !r.is_ok()).count(),
                    table.rows.len()
                );
                2
            } else {
                0
            }
        }
    }
}
