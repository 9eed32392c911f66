//! `xiangqi`: batch front end for the engine, search and training pipeline.
//!
//! Progress goes to stderr; results go to stdout as JSON lines. Exit status
//! is 0 on success, 1 on runtime failure and 2 on usage or input errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xiangqi_core::notation::{RankBase, RecordOptions};

#[derive(Parser, Debug)]
#[command(
    name = "xiangqi",
    version,
    about = "Xiangqi engine, self-play and training tools"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Plain-text key=value file of flag defaults; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Rank numbering used when reading ICCS moves.
    #[arg(long, global = true, value_enum, default_value = "0-9")]
    pub iccs_ranks: Ranks,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ranks {
    #[value(name = "0-9")]
    Zero,
    #[value(name = "1-10")]
    One,
}

impl Cli {
    pub fn record_options(&self) -> RecordOptions {
        RecordOptions {
            ranks: match self.iccs_ranks {
                Ranks::Zero => RankBase::Zero,
                Ranks::One => RankBase::One,
            },
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count leaf nodes of the legal move tree, split by first move.
    Perft(PerftArgs),
    /// Play games against itself and write records and training examples.
    Selfplay(SelfplayArgs),
    /// Export a game-record corpus and train a model to imitate it.
    Pretrain(PretrainArgs),
    /// Train a model on an exported example file.
    Train(TrainArgs),
    /// Alternate self-play and training.
    Iterate(IterateArgs),
    /// Play a match between two evaluators.
    Eval(EvalArgs),
    /// Summarize game-record files.
    Stats(PathsArgs),
    /// Replay game records and report illegal moves.
    Validate(PathsArgs),
    /// Draw a position as text.
    Show(ShowArgs),
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug)]
pub struct PerftArgs {
    /// Start position; the standard array if omitted.
    #[arg(long)]
    pub fen: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub depth: u32,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Simulations per move.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    pub sims: u32,
    #[arg(long, default_value_t = 1.5, value_parser = positive_f64)]
    pub c_puct: f64,
    /// Weight of Dirichlet noise mixed into root priors.
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.3, value_parser = positive_f64)]
    pub alpha: f64,
    /// Plies after which a game is drawn.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    pub move_cap: u32,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Hidden layer widths of a freshly initialized model.
    #[arg(long, default_value = "256,256", value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Value-branch widths of a freshly initialized model.
    #[arg(long, default_value = "64,256", value_delimiter = ',')]
    pub value_hidden: Vec<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainOpts {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub epochs: u32,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64)]
    pub lr: f64,
}

#[derive(Args, Debug)]
pub struct SelfplayArgs {
    /// Checkpoint to play with; the uniform evaluator if omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub games: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for game records and `examples.jsonl`.
    #[arg(long, default_value = "selfplay")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    /// Plies sampled in proportion to visits before play turns greedy.
    #[arg(long, default_value_t = 12)]
    pub greedy_after: u32,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct PretrainArgs {
    /// Game-record files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint to start from instead of a fresh model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to keep the exported examples; `<out>.examples.jsonl` if omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Export at most this many examples.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub model_shape: ModelArgs,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Example file in JSON lines.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub model_shape: ModelArgs,
}

#[derive(Args, Debug)]
pub struct IterateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Checkpoint rewritten after every iteration.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub iterations: u64,
    /// Games per iteration.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub games: u64,
    /// Replay buffer capacity in examples.
    #[arg(long, default_value_t = 50_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub buffer: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    #[arg(long, default_value_t = 12)]
    pub greedy_after: u32,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub model_shape: ModelArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// `uniform`, `material` or a checkpoint path.
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub games: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct PathsArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ShowArgs {
    /// Position to draw; the standard array if omitted.
    pub fen: Option<String>,
}

fn main() -> ExitCode {
    let args: Vec<_> = std::env::args_os().collect();
    let args = match config::take_config_flag(args) {
        Ok((rest, None)) => rest,
        Ok((rest, Some(path))) => match config::read_config(path.as_ref()) {
            Ok(entries) => config::splice_config(rest, &entries),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
