use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use interbank::cli::{self, Emit, InputSource, RunConfig};
use interbank::{ShockPolicy, SyntheticSpec};

#[derive(Parser)]
#[command(name = "interbank", version, about = "Interbank market distress simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// Balance-sheet CSV file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic population, e.g. `n=183,tail=1.5,seed=7`.
    #[arg(long)]
    synthetic: Option<String>,
}

impl Source {
    fn resolve(&self) -> Result<InputSource> {
        Ok(match (&self.input, &self.synthetic) {
            (Some(p), _) => InputSource::File(p.clone()),
            (None, Some(s)) => InputSource::Synthetic(s.parse::<SyntheticSpec>()?),
            (None, None) => unreachable!("clap enforces one source"),
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 1)]
    realizations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reuse one sampled network for every realization.
    #[arg(long)]
    fixed_network: bool,
    #[arg(long)]
    no_series: bool,
    #[arg(long)]
    no_report: bool,
    #[arg(long)]
    charts: bool,
    #[arg(long)]
    dump_matrix: bool,
}

impl RunArgs {
    fn config(&self, policies: Vec<ShockPolicy>) -> Result<RunConfig> {
        let mut c = RunConfig::new(self.source.resolve()?, &self.out);
        c.overrides = self.overrides.clone();
        c.policies = policies;
        c.n_realizations = self.realizations;
        c.master_seed = self.seed;
        c.parallelism = self.threads;
        c.fixed_network = self.fixed_network;
        c.emit = Emit {
            series_csv: !self.no_series,
            report_json: !self.no_report,
            charts_svg: self.charts,
            matrix_dump: self.dump_matrix,
        };
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble under one or more shock policies.
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// `random`, `A_max`, `A_min`, `B_max`, `B_min`, `K_max`, `K_min` or `index:<i>`.
        #[arg(long, value_delimiter = ',', default_value = "random")]
        policy: Vec<ShockPolicy>,
    },
    /// Compare shock policies on one sampled network.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "A_max,A_min,B_max,B_min,K_max,K_min")]
        policies: Vec<ShockPolicy>,
    },
    /// Check a balance-sheet file and print per-bank equity and leverage.
    Validate {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
    },
    /// Sample one interbank network and print its exposure matrix.
    SampleNetwork {
        #[command(flatten)]
        source: Source,
        #[arg(long = "set", value_name = "NAME=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run { args, policy } => Ok(cli::cmd_run(&args.config(policy)?)?.exit_code()),
        Command::Sweep { args, policies } => Ok(cli::cmd_sweep(&args.config(policies)?)?.exit_code()),
        Command::Validate { input, r0 } => {
            cli::cmd_validate(&input, r0, &mut std::io::stdout().lock())?;
            Ok(0)
        }
        Command::SampleNetwork {
            source,
            overrides,
            seed,
            out,
        } => {
            let input = source.resolve()?;
            match out {
                Some(p) => cli::cmd_sample_network(&input, &overrides, seed, std::fs::File::create(p)?)?,
                None => cli::cmd_sample_network(&input, &overrides, seed, std::io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
