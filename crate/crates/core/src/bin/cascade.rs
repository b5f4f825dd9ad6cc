use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cascade_learn::dataset::{gen_synthetic_h1b, write_csv};
use cascade_learn::experiment::{preset_text, run_all, write_outputs, ExperimentConfig, Summary};
use cascade_learn::mlp::{gradient_check, MlpConfig};
use cascade_learn::Result;

#[derive(Parser)]
#[command(
    name = "cascade",
    version,
    about = "Cascade learning experiments on tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config over its seeds and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        partitions: Option<usize>,
        /// Report directory; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a shipped task config (task1..task4).
    Preset { name: String },
    /// Write a synthetic visa-application table as CSV.
    GenSynth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        positive_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare backpropagation with central finite differences.
    Gradcheck {
        /// Layer sizes, input first.
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 3, 2])]
        layers: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        rows: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            seed,
            partitions,
            output,
        } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                config.seeds = vec![seed];
            }
            if let Some(p) = partitions {
                config.partitions = p;
            }
            let outcomes = run_all(&config)?;
            for o in &outcomes {
                println!(
                    "seed {:>3}  stage1 acc {:.4} f1 {:.4}  stage3 acc {:.4} f1 {:.4}  layers {:?}",
                    o.seed,
                    o.stage1.accuracy,
                    o.stage1.f1,
                    o.stage3.accuracy,
                    o.stage3.f1,
                    o.layer_sizes
                );
            }
            if let Some(summary) = Summary::of(&outcomes) {
                println!("{summary}");
            }
            if let Some(dir) = output.or(config.output) {
                write_outputs(&outcomes, &dir)?;
                println!("reports written to {}", dir.display());
            }
            Ok(())
        }
        Command::Preset { name } => {
            print!("{}", preset_text(&name)?);
            Ok(())
        }
        Command::GenSynth {
            rows,
            positive_fraction,
            seed,
            out,
        } => {
            let table = gen_synthetic_h1b(rows, positive_fraction, seed)?;
            write_csv(&table, &out)?;
            println!("wrote {rows} rows to {}", out.display());
            Ok(())
        }
        Command::Gradcheck {
            layers,
            rows,
            step,
            seed,
        } => {
            let config = MlpConfig::new(layers.clone());
            let err = gradient_check(&config, rows, step, seed)?;
            println!("layers {layers:?}  rows {rows}  h {step:e}  max relative error {err:.3e}");
            Ok(())
        }
    }
}
