use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pushsum::config::SweepAxis;
use pushsum::experiment::{cmd_rates, cmd_run, cmd_sweep, cmd_verify, CommandOptions};

#[derive(Parser)]
#[command(name = "pushsum", version, about = "Push-sum consensus and distributed optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (defaults to `output.dir` next to the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the config's top-level seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Also write the S(t) sidecar.
    #[arg(long)]
    record_s: bool,
    /// Treat a failed connectivity check as an error.
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn options(&self) -> CommandOptions {
        CommandOptions { out: self.out.clone(), seed: self.seed, record_s: self.record_s, strict: self.strict }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    #[value(name = "T", alias = "horizon")]
    Horizon,
    Seeds,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write trace, metrics and summary files.
    Run(Common),
    /// Check every structural invariant of the configured run.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Fault injection: add X to agent 0's y after each step.
        #[arg(long, value_name = "X")]
        perturb_y: Option<f64>,
    },
    /// Repeat the run over horizons or seeds and fit the rate.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<Axis>,
    },
    /// Fit rates to an existing metrics CSV (or a run directory holding one).
    Rates {
        #[arg(value_name = "PATH")]
        path: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(c) => cmd_run(&c.config, &c.options()).map(|r| {
            println!("{}", r.summary);
            true
        }),
        Command::Verify { common, perturb_y } => cmd_verify(&common.config, &common.options(), perturb_y).map(|r| {
            println!("{r}");
            r.passed()
        }),
        Command::Sweep { common, axis } => {
            let axis = axis.map(|a| match a {
                Axis::Horizon => SweepAxis::Horizon,
                Axis::Seeds => SweepAxis::Seeds,
            });
            cmd_sweep(&common.config, &common.options(), axis).map(|t| {
                println!("{t}");
                true
            })
        }
        Command::Rates { path } => {
            let file = if path.is_dir() { path.join("metrics.csv") } else { path };
            cmd_rates(&file).map(|r| {
                println!("{r}");
                true
            })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
