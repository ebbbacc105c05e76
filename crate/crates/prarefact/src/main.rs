use clap::{Parser, Subcommand};
use prarefact::cli;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "prarefact", version, about = "Degenerate-viscosity conservation-law experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key = value config file.
    Run { config: PathBuf },
    /// Check the vector inequalities and estimate the constant c(q).
    Ineq {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    cli::configure_threads();
    let args = Cli::parse();
    match args.command {
        Command::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            let cfg = match cli::parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match cli::run_experiment(&cfg) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => {
                    eprintln!("one or more gated checks failed; see report.txt");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Ineq { q, grid, samples, seed } => {
            if q < 1.0 || grid < 16 {
                eprintln!("error: need q >= 1 and grid >= 16");
                return ExitCode::from(1);
            }
            let out = prarefact::ineq::run_ineq_check(q, grid, samples, seed);
            println!("{}", cli::ineq_line(&out.estimate));
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "invariant failure: ab2_max={} ab1_fresh_min={} c_hat={}",
                    out.ab2_max_ratio, out.ab1_fresh_min, out.estimate.c_hat
                );
                ExitCode::from(2)
            }
        }
    }
}
