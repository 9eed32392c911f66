use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use xiangqi_core::corpus::{
    export_training_set, load_training_set, scan_corpus, validate_corpus, write_examples,
    RecordOutcome,
};
use xiangqi_core::evaluator::{
    load_checkpoint, save_checkpoint, train_epoch, AdamConfig, AdamState, Evaluator,
    MaterialEvaluator, ModelConfig, ModelEvaluator, ModelParams, TrainingExample, UniformEvaluator,
};
use xiangqi_core::mcts::SearchConfig;
use xiangqi_core::notation::{emit_iccs_move, parse_fen, render_board};
use xiangqi_core::rules::{perft_divide, GameState};
use xiangqi_core::selfplay::{
    evaluate_match, generate_games, run_iteration, summarize_games, IterationConfig, MatchConfig,
    ReplayBuffer, SelfPlayConfig,
};

use crate::{
    Cli, Command, EvalArgs, IterateArgs, ModelArgs, PathsArgs, PerftArgs, PretrainArgs, SearchArgs,
    SelfplayArgs, ShowArgs, TrainArgs, TrainOpts,
};

pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

struct Out {
    quiet: bool,
    stdout: std::io::Stdout,
}

impl Out {
    fn progress(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn emit(&mut self, value: serde_json::Value) -> Result<()> {
        writeln!(self.stdout, "{value}")
            .context("writing to stdout")
            .map_err(runtime)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut out = Out {
        quiet: cli.quiet,
        stdout: std::io::stdout(),
    };
    match &cli.command {
        Command::Perft(a) => perft(a, &mut out),
        Command::Selfplay(a) => selfplay(a, &mut out),
        Command::Pretrain(a) => pretrain(cli, a, &mut out),
        Command::Train(a) => train(a, &mut out),
        Command::Iterate(a) => iterate(a, &mut out),
        Command::Eval(a) => eval(a, &mut out),
        Command::Stats(a) => stats(cli, a, &mut out),
        Command::Validate(a) => validate(cli, a, &mut out),
        Command::Show(a) => show(a, &mut out),
    }
}

fn position(fen: Option<&str>) -> Result<GameState> {
    match fen {
        None => Ok(GameState::initial()),
        Some(text) => parse_fen(text).map_err(|e| usage(format!("bad FEN {text:?}: {e}"))),
    }
}

fn perft(args: &PerftArgs, out: &mut Out) -> Result<()> {
    let state = position(args.fen.as_deref())?;
    let mut total = 0;
    for (mv, nodes) in perft_divide(&state, args.depth) {
        total += nodes;
        out.emit(json!({"move": emit_iccs_move(mv), "nodes": nodes}))?;
    }
    out.progress(format!("perft({}) = {total}", args.depth));
    out.emit(json!({"depth": args.depth, "nodes": total}))
}

fn search_config(args: &SearchArgs) -> Result<SearchConfig> {
    let config = SearchConfig {
        simulations: args.sims,
        c_puct: args.c_puct,
        dirichlet_epsilon: args.noise,
        dirichlet_alpha: args.alpha,
        move_cap: args.move_cap,
        ..SearchConfig::default()
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

fn load_model(path: &Path) -> Result<ModelParams> {
    load_checkpoint(path)
        .with_context(|| format!("loading checkpoint {}", path.display()))
        .map_err(runtime)
}

fn model_or_fresh(path: Option<&Path>, shape: &ModelArgs, seed: u64) -> Result<ModelParams> {
    if shape.hidden.contains(&0) || shape.value_hidden.contains(&0) {
        return Err(usage("layer widths must be positive"));
    }
    match path {
        Some(p) => load_model(p),
        None => Ok(ModelParams::new(
            ModelConfig {
                hidden: shape.hidden.clone(),
                value_hidden: shape.value_hidden.clone(),
                ..ModelConfig::default()
            },
            seed,
        )),
    }
}

fn evaluator_for(spec: &str) -> Result<Box<dyn Evaluator>> {
    Ok(match spec {
        "uniform" => Box::new(UniformEvaluator),
        "material" => Box::new(MaterialEvaluator),
        path => Box::new(ModelEvaluator::new(load_model(Path::new(path))?).map_err(runtime)?),
    })
}

fn write_jsonl(path: &Path, examples: &[TrainingExample]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_examples(&mut w, examples.iter())
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn selfplay(args: &SelfplayArgs, out: &mut Out) -> Result<()> {
    let config = SelfPlayConfig {
        search: search_config(&args.search)?,
        greedy_after: args.greedy_after,
        move_cap: args.search.move_cap,
        games: args.games as usize,
        rng_seed: args.seed,
        start: None,
    };
    let evaluator: Box<dyn Evaluator> = match &args.model {
        Some(p) => Box::new(ModelEvaluator::new(load_model(p)?).map_err(runtime)?),
        None => Box::new(UniformEvaluator),
    };
    out.progress(format!(
        "playing {} games at {} simulations",
        config.games, config.search.simulations
    ));
    let games = generate_games(&evaluator, &config, args.jobs as usize).map_err(runtime)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut examples = Vec::new();
    for (i, game) in games.iter().enumerate() {
        let path = args.out.join(format!("game_{i:04}.pgn"));
        fs::write(&path, game.record.to_pgn())
            .with_context(|| format!("writing {}", path.display()))?;
        out.progress(format!(
            "game {}/{}: {} plies, {}",
            i + 1,
            games.len(),
            game.length(),
            game.record.result.token()
        ));
        examples.extend(game.examples.iter().cloned());
    }
    write_jsonl(&args.out.join("examples.jsonl"), &examples)?;
    let (avg_length, avg_reward) = summarize_games(&games);
    let red = games.iter().filter(|g| g.status.red_score() > 0.0).count();
    let black = games.iter().filter(|g| g.status.red_score() < 0.0).count();
    out.progress(format!(
        "Games: {}, Avg Length: {avg_length:.1}, Avg Reward: {avg_reward:.3}",
        games.len()
    ));
    out.emit(json!({
        "games": games.len(),
        "avg_length": avg_length,
        "avg_reward": avg_reward,
        "red_wins": red,
        "black_wins": black,
        "draws": games.len() - red - black,
        "examples": examples.len(),
    }))
}

/// Epoch loop shared by `train` and `pretrain`. The example order is
/// reshuffled each epoch from `seed`.
fn fit(
    params: &mut ModelParams,
    examples: &mut [TrainingExample],
    opts: &TrainOpts,
    seed: u64,
    out: &mut Out,
) -> Result<()> {
    if examples.is_empty() {
        return Err(usage("no training examples"));
    }
    let mut adam = AdamState::new(
        params,
        AdamConfig {
            lr: opts.lr,
            ..AdamConfig::default()
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for epoch in 1..=opts.epochs {
        examples.shuffle(&mut rng);
        let m =
            train_epoch(params, &mut adam, examples, opts.batch_size as usize).map_err(runtime)?;
        out.progress(format!("Epoch {epoch}/{}, {m}", opts.epochs));
        out.emit(json!({
            "epoch": epoch,
            "loss": m.loss.total,
            "policy_loss": m.loss.policy_loss,
            "value_loss": m.loss.value_loss,
            "policy_accuracy": m.policy_accuracy,
            "value_mae": m.value_mae,
            "examples": m.examples,
        }))?;
    }
    Ok(())
}

fn save(params: &ModelParams, path: &Path, out: &Out) -> Result<()> {
    save_checkpoint(params, path)
        .with_context(|| format!("writing checkpoint {}", path.display()))
        .map_err(runtime)?;
    out.progress(format!("saved {}", path.display()));
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn pretrain(cli: &Cli, args: &PretrainArgs, out: &mut Out) -> Result<()> {
    let dataset = args
        .dataset
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".examples.jsonl"));
    let manifest = export_training_set(&args.paths, &dataset, args.limit, cli.record_options())
        .context("exporting corpus")?;
    out.progress(format!(
        "exported {} examples from {} records ({} skipped) to {}",
        manifest.examples,
        manifest.records_exported,
        manifest.records_skipped,
        dataset.display()
    ));
    let mut examples = load_training_set(&dataset).context("reloading examples")?;
    let mut params = model_or_fresh(args.model.as_deref(), &args.model_shape, args.seed)?;
    fit(&mut params, &mut examples, &args.train, args.seed, out)?;
    save(&params, &args.out, out)
}

fn train(args: &TrainArgs, out: &mut Out) -> Result<()> {
    let mut examples = load_training_set(&args.data).context("loading examples")?;
    let mut params = model_or_fresh(args.model.as_deref(), &args.model_shape, args.seed)?;
    fit(&mut params, &mut examples, &args.train, args.seed, out)?;
    save(&params, &args.out, out)
}

fn iterate(args: &IterateArgs, out: &mut Out) -> Result<()> {
    let mut params = model_or_fresh(args.model.as_deref(), &args.model_shape, args.seed)?;
    let mut adam = AdamState::new(
        &params,
        AdamConfig {
            lr: args.train.lr,
            ..AdamConfig::default()
        },
    );
    let mut buffer = ReplayBuffer::new(args.buffer as usize);
    let config = IterationConfig {
        selfplay: SelfPlayConfig {
            search: search_config(&args.search)?,
            greedy_after: args.greedy_after,
            move_cap: args.search.move_cap,
            games: args.games as usize,
            rng_seed: args.seed,
            start: None,
        },
        epochs: args.train.epochs as usize,
        batch_size: args.train.batch_size as usize,
        jobs: args.jobs as usize,
    };
    for i in 1..=args.iterations {
        let report =
            run_iteration(&mut params, &mut adam, &mut buffer, &config, i).map_err(runtime)?;
        out.progress(format!(
            "Iteration {i}/{}, Games: {}, Avg Length: {:.1}, Avg Reward: {:.3}, Buffer: {}",
            args.iterations, report.games, report.avg_length, report.avg_reward, report.buffer_size
        ));
        for (e, loss) in report.epochs.iter().enumerate() {
            out.progress(format!("Epoch {}/{}, {loss}", e + 1, report.epochs.len()));
        }
        save(&params, &args.out, out)?;
        out.emit(serde_json::to_value(&report).context("serializing report")?)?;
    }
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut Out) -> Result<()> {
    let a = evaluator_for(&args.a)?;
    let b = evaluator_for(&args.b)?;
    let config = MatchConfig {
        search: SearchConfig {
            temperature: 0.0,
            ..search_config(&args.search)?
        },
        move_cap: args.search.move_cap,
        rng_seed: args.seed,
    };
    out.progress(format!("{} vs {}: {} games", args.a, args.b, args.games));
    let report = evaluate_match(&a, &b, args.games as usize, &config, args.jobs as usize)
        .map_err(runtime)?;
    out.progress(format!(
        "Wins: {}, Losses: {}, Draws: {}, Score: {:.3}",
        report.wins,
        report.losses,
        report.draws,
        report.score()
    ));
    let mut value = serde_json::to_value(&report).context("serializing report")?;
    value["score"] = json!(report.score());
    out.emit(value)
}

fn stats(cli: &Cli, args: &PathsArgs, out: &mut Out) -> Result<()> {
    let s = scan_corpus(&args.paths, cli.record_options()).context("scanning corpus")?;
    out.progress(format!(
        "games        {:>9}\nmoves        {:>9}\nred wins     {:>9}\nblack wins   {:>9}\ndraws        {:>9}\nunknown      {:>9}\nparse errors {:>9}",
        s.games, s.total_moves, s.red_wins, s.black_wins, s.draws, s.unknown_results, s.parse_errors
    ));
    for loc in &s.error_locations {
        out.progress(format!("{}:{}: {}", loc.path, loc.line, loc.message));
    }
    out.emit(serde_json::to_value(&s).context("serializing stats")?)
}

fn validate(cli: &Cli, args: &PathsArgs, out: &mut Out) -> Result<()> {
    let report = validate_corpus(&args.paths, cli.record_options()).context("validating corpus")?;
    for r in &report.records {
        match &r.outcome {
            RecordOutcome::Legal { .. } => {}
            RecordOutcome::Illegal { ply, mv } => {
                out.progress(format!(
                    "{} record {}: illegal move {mv} at ply {ply}",
                    r.path, r.index
                ));
                out.emit(serde_json::to_value(r).context("serializing record")?)?;
            }
            RecordOutcome::Syntax { message } => {
                out.progress(format!("{} record {}: {message}", r.path, r.index));
                out.emit(serde_json::to_value(r).context("serializing record")?)?;
            }
        }
    }
    out.emit(json!({
        "records": report.records.len(),
        "legal": report.legal,
        "illegal": report.illegal,
        "syntax_errors": report.syntax_errors,
        "legality_rate": report.legality_rate(),
    }))
}

fn show(args: &ShowArgs, out: &mut Out) -> Result<()> {
    let state = position(args.fen.as_deref())?;
    write!(out.stdout, "{}", render_board(&state)).context("writing to stdout")?;
    Ok(())
}
