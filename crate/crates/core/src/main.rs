use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pga::cli::{self, EXIT_CONFIG, EXIT_RUNTIME};

#[derive(Parser)]
#[command(name = "pga", version, about = "Run gradient-alignment experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment over its seeds and write traces and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config entry; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Compare every analytic gradient with central differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Print the default settings of both experiments.
    DumpConfig,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match args.command {
        Command::Run { config, set } => {
            let spec = match cli::load_config(&config, &set) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}", cli::failure_line("config", &e));
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
            };
            match cli::run(&spec) {
                Ok(_) => {
                    println!("wrote {}", spec.output_dir.join("summary.csv").display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", cli::failure_line("run", &e));
                    ExitCode::from(EXIT_RUNTIME as u8)
                }
            }
        }
        Command::Gradcheck { seed, points } => match pga::gradcheck::run_suite(seed, points) {
            Ok(results) => {
                print!("{}", cli::render_gradcheck(&results));
                if results.iter().all(|r| r.ok()) {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("error stage=gradcheck kind=mismatch msg=analytic and numeric gradients disagree");
                    ExitCode::from(EXIT_RUNTIME as u8)
                }
            }
            Err(e) => {
                eprintln!("{}", cli::failure_line("gradcheck", &e));
                ExitCode::from(EXIT_RUNTIME as u8)
            }
        },
        Command::DumpConfig => {
            print!("{}", cli::dump_config());
            ExitCode::SUCCESS
        }
    }
}
