//! Self-play game generation, outcome labelling, behavior-cloning examples,
//! the generate-then-train iteration, and engine matches.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::encoding::{
    decode_action, encode_action, encode_state, ActionIndex, PlaneTensor, SIDE_CHANNEL,
};
use crate::evaluator::{
    train_epoch, AdamState, Evaluator, LossBreakdown, ModelError, ModelEvaluator, ModelParams,
    PolicyTarget, TrainError, TrainingExample,
};
use crate::mcts::{search, SearchConfig, SearchError};
use crate::notation::{emit_fen, GameRecord, NotationError, RecordResult};
use crate::rules::{Color, GameState, GameStatus, DEFAULT_MOVE_CAP};

#[derive(Debug, Error)]
pub enum SelfPlayError {
    #[error("record move {ply} ({mv}) is illegal")]
    IllegalRecordMove { ply: usize, mv: String },
    #[error(transparent)]
    Notation(#[from] NotationError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Derives an independent 64-bit seed for stream `index` of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SelfPlayConfig {
    pub search: SearchConfig,
    /// Plies played at temperature 1 before switching to greedy selection.
    pub greedy_after: u32,
    pub move_cap: u32,
    pub games: usize,
    pub rng_seed: u64,
    /// Start position; the standard array when `None`.
    pub start: Option<GameState>,
}

impl Default for SelfPlayConfig {
    fn default() -> Self {
        SelfPlayConfig {
            search: SearchConfig::default(),
            greedy_after: 12,
            move_cap: DEFAULT_MOVE_CAP,
            games: 1,
            rng_seed: 0,
            start: None,
        }
    }
}

impl SelfPlayConfig {
    /// Temperature used to pick the move at `ply` (counted from the game start).
    pub fn temperature_at(&self, ply: u32) -> f64 {
        if ply < self.greedy_after {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlayedGame {
    pub record: GameRecord,
    pub examples: Vec<TrainingExample>,
    pub status: GameStatus,
}

impl PlayedGame {
    pub fn length(&self) -> usize {
        self.record.moves.len()
    }
}

pub fn record_result(status: GameStatus) -> RecordResult {
    match status {
        GameStatus::RedWins(_) => RecordResult::RedWin,
        GameStatus::BlackWins(_) => RecordResult::BlackWin,
        GameStatus::Draw(_) => RecordResult::Draw,
        GameStatus::Ongoing => RecordResult::Unknown,
    }
}

fn red_to_move(planes: &PlaneTensor) -> bool {
    planes.get(0, 0, SIDE_CHANNEL) == 1.0
}

/// Fills every example's `z` with the final outcome seen from the side to
/// move in that example (read from the side channel of its planes).
pub fn assign_outcomes(examples: &mut [TrainingExample], status: GameStatus) {
    let red = status.red_score();
    for ex in examples {
        ex.z = if red_to_move(&ex.planes) { red } else { -red };
    }
}

/// Plays one game against itself. Each ply stores the position, the
/// temperature-1 visit distribution as the policy target and a zero outcome
/// placeholder; the move is drawn at the scheduled temperature.
pub fn play_game<E: Evaluator + ?Sized>(
    evaluator: &E,
    config: &SelfPlayConfig,
    rng: &mut impl Rng,
) -> Result<PlayedGame, SelfPlayError> {
    let start = config.start.clone().unwrap_or_else(GameState::initial);
    let start_ply = start.ply();
    let mut state = start.clone();
    let mut moves = Vec::new();
    let mut examples = Vec::new();
    let status = loop {
        let status = state.status_with_cap(start_ply + config.move_cap);
        if status.is_terminal() {
            break status;
        }
        let search_config = SearchConfig {
            rng_seed: rng.random(),
            move_cap: start_ply + config.move_cap,
            ..config.search
        };
        let result = search(&state, evaluator, &search_config)?;
        let legal: Vec<ActionIndex> = result.visits.iter().map(|&(a, _)| a).collect();
        examples.push(TrainingExample {
            planes: encode_state(&state),
            target: PolicyTarget::Distribution(result.policy(1.0)),
            z: 0.0,
            legal,
        });
        let tau = config.temperature_at(state.ply() - start_ply);
        let action = sample(&result.policy(tau), rng);
        let mv = decode_action(action).expect("search returns legal actions");
        state = state.apply_move_unchecked(mv);
        moves.push(mv);
    };
    assign_outcomes(&mut examples, status);
    let mut tags = vec![
        ("Event".to_string(), "self-play".to_string()),
        ("Format".to_string(), "ICCS".to_string()),
        (
            "Result".to_string(),
            record_result(status).token().to_string(),
        ),
    ];
    if !start.same_position(&GameState::initial()) {
        tags.push(("FEN".to_string(), emit_fen(&start)));
    }
    Ok(PlayedGame {
        record: GameRecord::new(tags, moves, record_result(status)),
        examples,
        status,
    })
}

/// Draws an action from `pi` (inverse-CDF; falls back to the last entry on
/// rounding shortfall).
fn sample(pi: &[(ActionIndex, f64)], rng: &mut impl Rng) -> ActionIndex {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(a, p) in pi {
        acc += p;
        if u < acc {
            return a;
        }
    }
    pi.iter()
        .rev()
        .find(|&&(_, p)| p > 0.0)
        .map(|&(a, _)| a)
        .unwrap_or(pi[0].0)
}

/// Runs `f` for each index using up to `jobs` threads, keeping index order.
fn run_indexed<T: Send>(
    count: usize,
    jobs: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Result<Vec<T>, SelfPlayError> {
    if jobs <= 1 {
        return Ok((0..count).map(f).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SelfPlayError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Plays `config.games` games; game `i` uses the seed
/// `derive_seed(config.rng_seed, i)`, so results are independent of `jobs`.
pub fn generate_games<E: Evaluator + ?Sized>(
    evaluator: &E,
    config: &SelfPlayConfig,
    jobs: usize,
) -> Result<Vec<PlayedGame>, SelfPlayError> {
    run_indexed(config.games, jobs, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.rng_seed, i as u64));
        play_game(evaluator, config, &mut rng)
    })?
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
pub struct ClonedGame {
    pub examples: Vec<TrainingExample>,
    /// Set when the result is unknown and every `z` defaulted to 0.
    pub unknown_result: bool,
}

/// One example per ply of a recorded game, targeting the move played.
pub fn cloning_examples(record: &GameRecord) -> Result<ClonedGame, SelfPlayError> {
    let mut state = record.start_state()?;
    let mut examples = Vec::with_capacity(record.moves.len());
    for (ply, &mv) in record.moves.iter().enumerate() {
        let legal_moves = state.legal_moves();
        if !legal_moves.contains(&mv) {
            return Err(SelfPlayError::IllegalRecordMove {
                ply,
                mv: mv.to_string(),
            });
        }
        let mut legal: Vec<ActionIndex> = legal_moves.into_iter().map(encode_action).collect();
        legal.sort();
        examples.push(TrainingExample {
            planes: encode_state(&state),
            target: PolicyTarget::Action(encode_action(mv)),
            z: 0.0,
            legal,
        });
        state = state.apply_move_unchecked(mv);
    }
    let red = record.result.red_score();
    for ex in &mut examples {
        ex.z = if red_to_move(&ex.planes) { red } else { -red };
    }
    Ok(ClonedGame {
        examples,
        unknown_result: record.result == RecordResult::Unknown,
    })
}

/// FIFO store of the most recent examples.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<TrainingExample>,
}

pub const DEFAULT_BUFFER_CAPACITY: usize = 50_000;

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: VecDeque::new(),
        }
    }

    pub fn extend(&mut self, examples: impl IntoIterator<Item = TrainingExample>) {
        for ex in examples {
            if self.items.len() == self.capacity {
                self.items.pop_front();
            }
            if self.capacity > 0 {
                self.items.push_back(ex);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn examples(&mut self) -> &[TrainingExample] {
        self.items.make_contiguous()
    }
}

#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub selfplay: SelfPlayConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub jobs: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            selfplay: SelfPlayConfig::default(),
            epochs: 5,
            batch_size: 64,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub iteration: u64,
    pub games: usize,
    pub avg_length: f64,
    /// Mean outcome for Red.
    pub avg_reward: f64,
    pub red_wins: usize,
    pub black_wins: usize,
    pub draws: usize,
    pub buffer_size: usize,
    pub epochs: Vec<LossBreakdown>,
}

/// Games, mean length and mean Red outcome of a batch of games.
pub fn summarize_games(games: &[PlayedGame]) -> (f64, f64) {
    if games.is_empty() {
        return (0.0, 0.0);
    }
    let n = games.len() as f64;
    let length = games.iter().map(|g| g.length() as f64).sum::<f64>() / n;
    let reward = games.iter().map(|g| g.status.red_score()).sum::<f64>() / n;
    (length, reward)
}

/// Generates games with the current model, adds them to the buffer and
/// trains for `config.epochs` passes over the whole buffer.
pub fn run_iteration(
    params: &mut ModelParams,
    adam: &mut AdamState,
    buffer: &mut ReplayBuffer,
    config: &IterationConfig,
    iteration: u64,
) -> Result<IterationReport, SelfPlayError> {
    let mut report = IterationReport {
        iteration,
        games: 0,
        avg_length: 0.0,
        avg_reward: 0.0,
        red_wins: 0,
        black_wins: 0,
        draws: 0,
        buffer_size: buffer.len(),
        epochs: Vec::new(),
    };
    if config.selfplay.games == 0 {
        return Ok(report);
    }
    let selfplay = SelfPlayConfig {
        rng_seed: derive_seed(config.selfplay.rng_seed, iteration),
        ..config.selfplay.clone()
    };
    let evaluator = ModelEvaluator::new(params.clone())?;
    let games = generate_games(&evaluator, &selfplay, config.jobs)?;
    let (avg_length, avg_reward) = summarize_games(&games);
    report.games = games.len();
    report.avg_length = avg_length;
    report.avg_reward = avg_reward;
    for g in &games {
        match g.status.winner() {
            Some(Color::Red) => report.red_wins += 1,
            Some(Color::Black) => report.black_wins += 1,
            None => report.draws += 1,
        }
    }
    buffer.extend(games.into_iter().flat_map(|g| g.examples));
    report.buffer_size = buffer.len();
    for _ in 0..config.epochs {
        let metrics = train_epoch(params, adam, buffer.examples(), config.batch_size)?;
        report.epochs.push(metrics.loss);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct MatchConfig {
    pub search: SearchConfig,
    pub move_cap: u32,
    pub rng_seed: u64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            search: SearchConfig {
                temperature: 0.0,
                ..SearchConfig::default()
            },
            move_cap: DEFAULT_MOVE_CAP,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub games: usize,
    /// From player A's perspective.
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    pub avg_length: f64,
}

impl MatchReport {
    /// Points for A with win = 1 and draw = 0.5, as a fraction of games.
    pub fn score(&self) -> f64 {
        if self.games == 0 {
            return 0.0;
        }
        (self.wins as f64 + 0.5 * self.draws as f64) / self.games as f64
    }
}

/// Outcome of one match game from A's perspective and its length.
fn match_game<A: Evaluator + ?Sized, B: Evaluator + ?Sized>(
    a: &A,
    b: &B,
    a_color: Color,
    config: &MatchConfig,
    seed: u64,
) -> Result<(f64, usize), SelfPlayError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GameState::initial();
    loop {
        let status = state.status_with_cap(config.move_cap);
        if status.is_terminal() {
            return Ok((status.score_for(a_color), state.ply() as usize));
        }
        let search_config = SearchConfig {
            rng_seed: rng.random(),
            move_cap: config.move_cap,
            temperature: 0.0,
            ..config.search
        };
        let result = if state.side_to_move() == a_color {
            search(&state, a, &search_config)?
        } else {
            search(&state, b, &search_config)?
        };
        let mv = decode_action(result.best_action()).expect("search returns legal actions");
        state = state.apply_move_unchecked(mv);
    }
}

/// Plays `games` greedy games; A has Red in even-indexed games.
pub fn evaluate_match<A: Evaluator + ?Sized, B: Evaluator + ?Sized>(
    a: &A,
    b: &B,
    games: usize,
    config: &MatchConfig,
    jobs: usize,
) -> Result<MatchReport, SelfPlayError> {
    let results = run_indexed(games, jobs, |i| {
        let a_color = if i % 2 == 0 { Color::Red } else { Color::Black };
        match_game(
            a,
            b,
            a_color,
            config,
            derive_seed(config.rng_seed, i as u64),
        )
    })?;
    let mut report = MatchReport {
        games,
        wins: 0,
        losses: 0,
        draws: 0,
        avg_length: 0.0,
    };
    let mut total_length = 0usize;
    for r in results {
        let (score, length) = r?;
        total_length += length;
        if score > 0.0 {
            report.wins += 1;
        } else if score < 0.0 {
            report.losses += 1;
        } else {
            report.draws += 1;
        }
    }
    if games > 0 {
        report.avg_length = total_length as f64 / games as f64;
    }
    Ok(report)
}
