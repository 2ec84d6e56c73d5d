use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use kgdiv::orchestrator::{self, MatcherSpec, RunSpec};
use kgdiv::{core::pipeline::RunConfig, io as files};

#[derive(Parser)]
#[command(name = "kgdiv", version, about = "Divide large entity-alignment tasks into size-bounded subtasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition, iterate and write predictions, rankings, metrics and manifests.
    Run(RunArgs),
    /// Recompute metrics from a run directory's rankings.
    Eval {
        #[arg(long)]
        out: PathBuf,
        /// Dataset directory; defaults to the one recorded in the run.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Print the built-in partition of the source graph as `entity<TAB>part`.
    Partition {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "num-subtasks")]
        num_subtasks: usize,
        #[arg(long, default_value_t = kgdiv::core::partition::DEFAULT_BALANCE_SLACK)]
        balance_slack: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "num-subtasks")]
    num_subtasks: usize,
    #[arg(long = "max-size")]
    max_size: usize,
    #[arg(long, default_value_t = 5)]
    iterations: u32,
    #[arg(long, default_value_t = kgdiv::core::discovery::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = kgdiv::core::discovery::DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = kgdiv::core::evidence::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long = "top-k", default_value_t = kgdiv::core::discovery::DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = kgdiv::core::context::DEFAULT_DELTA1)]
    delta1: f64,
    #[arg(long, default_value_t = kgdiv::core::context::DEFAULT_DELTA2)]
    delta2: f64,
    #[arg(long, default_value_t = kgdiv::core::evidence::DEFAULT_DEPTH)]
    depth: usize,
    /// `builtin` or `external:CMD` (run through `sh -c`).
    #[arg(long, default_value = "builtin")]
    matcher: MatcherSpec,
    /// Seconds before an external matcher is killed.
    #[arg(long = "matcher-timeout", default_value_t = kgdiv::external::DEFAULT_TIMEOUT_SECS)]
    matcher_timeout: u64,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "balance-slack", default_value_t = kgdiv::core::partition::DEFAULT_BALANCE_SLACK)]
    balance_slack: f64,
    #[arg(long, default_value_t = kgdiv::core::discovery::DEFAULT_RADIUS)]
    radius: u32,
    /// Use this `entity<TAB>part` assignment instead of the built-in partitioner.
    #[arg(long = "partition-file")]
    partition_file: Option<PathBuf>,
    /// Abort on the first matcher failure.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn into_spec(self) -> RunSpec {
        let config = RunConfig {
            n_subtasks: self.num_subtasks,
            max_size: self.max_size,
            iterations: self.iterations,
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            top_k: self.top_k,
            delta1: self.delta1,
            delta2: self.delta2,
            depth: self.depth,
            balance_slack: self.balance_slack,
            rng_seed: self.seed,
            parallelism: self.parallelism,
            radius: self.radius,
            strict: self.strict,
        };
        RunSpec {
            data: self.data,
            out: self.out,
            matcher: self.matcher,
            matcher_timeout_secs: self.matcher_timeout,
            partition_file: self.partition_file,
            config,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let metrics = orchestrator::run(&args.into_spec())?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Eval { out, data } => {
            let metrics = orchestrator::eval(&out, data.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Partition { data, num_subtasks, balance_slack, seed, output } => {
            let (kg_s, assignment) = orchestrator::partition(&data, num_subtasks, balance_slack, seed)?;
            let cut = kgdiv::core::partition::edge_cut(&kg_s, &assignment);
            log::info!("{} entities in {num_subtasks} parts, edge cut {cut}", kg_s.entity_count());
            let mut w: Box<dyn Write> = match output {
                Some(path) => Box::new(BufWriter::new(std::fs::File::create(path)?)),
                None => Box::new(BufWriter::new(io::stdout().lock())),
            };
            files::write_partition(&mut w, &kg_s, &assignment)?;
            w.flush()?;
        }
    }
    Ok(())
}
