use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cone_lab::cli::config::ExperimentConfig;
use cone_lab::cli::{exit, export, ops, suites, CliError};
use cone_lab::models::ModelSpec;

#[derive(Parser)]
#[command(name = "cone-lab", version, about = "Numerical laboratory for expanding cones of Anosov flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured operation and append its record to the store.
    Run {
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long, env = "CONE_LAB_SEED")]
        seed: Option<u64>,
    },
    /// Run every invariant suite on one model and print a pass/fail table.
    VerifyAll {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, env = "CONE_LAB_SEED", default_value_t = 0)]
        seed: u64,
        /// Also write the summary as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write CSV tables for the stored records matching a query.
    Export {
        #[arg(long)]
        query: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "results.jsonl")]
        store: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Run { config, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let record = ops::run(&cfg, seed)?;
            for c in &record.checks {
                println!("{:<6} {:<24} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("record {} appended to {}", &record.output_hash[..16], cfg.output.display());
            Ok(if record.passed { exit::PASS } else { exit::SUITE_FAILURE })
        }
        Command::VerifyAll { model, seed, json } => {
            let text = std::fs::read_to_string(&model).map_err(|e| CliError::io(&model, e))?;
            let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
            let summary = suites::verify_all(&spec, seed);
            print!("{}", summary.table());
            if let Some(path) = json {
                let body = suites::summary_json(&spec, seed, &summary).to_string();
                std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(if summary.passed() { exit::PASS } else { exit::SUITE_FAILURE })
        }
        Command::Export { query, out, store } => {
            for path in export::export(&store, &query, &out)? {
                println!("{}", path.display());
            }
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
