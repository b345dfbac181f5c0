use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skmlab::{CliError, Command};

#[derive(Parser)]
#[command(name = "skmlab", version, about = "Sparse K-means fits and consistency experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// JSON config with sections model, algorithm, experiment, output.
    #[arg(long)]
    config: PathBuf,
    /// Overrides experiment.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; SKMLAB_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Sub {
    /// Euclidean sparse K-means on a CSV dataset or a sampled model.
    Fit(Common),
    /// Partition-form sparse K-means on a dissimilarity tensor.
    FitGeneral(Common),
    /// Pairwise vs centroid objective identity and exhaustive argmax agreement.
    EquivCheck(Common),
    /// Risk gap of the fitted parameter across sample sizes.
    RiskGap(Common),
    /// Monte Carlo Rademacher complexity against its closed-form bound.
    Rademacher(Common),
    /// Closed-form excess-risk bounds over a grid of sample sizes.
    Bounds(Common),
    /// Inequality audits and mean-deviation coverage.
    Concentration(Common),
    /// Stationarity of the two-ball reference parameter, or Lloyd drift for Gaussians.
    Stationarity(Common),
    /// Modulus of continuity of the risk around the reference parameter.
    Continuity(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Fit(c) => (Command::Fit, c),
            Sub::FitGeneral(c) => (Command::FitGeneral, c),
            Sub::EquivCheck(c) => (Command::EquivCheck, c),
            Sub::RiskGap(c) => (Command::RiskGap, c),
            Sub::Rademacher(c) => (Command::Rademacher, c),
            Sub::Bounds(c) => (Command::Bounds, c),
            Sub::Concentration(c) => (Command::Concentration, c),
            Sub::Stationarity(c) => (Command::Stationarity, c),
            Sub::Continuity(c) => (Command::Continuity, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, common) = cli.command.split();
    let result = if common.threads == 0 {
        Err(CliError::Config("--threads must be at least 1".into()))
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))
            .and_then(|()| skmlab::run(command, &common.config, common.seed, common.out.as_deref()))
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("skmlab {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
