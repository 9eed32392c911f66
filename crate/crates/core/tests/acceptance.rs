//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xiangqi_core::corpus::{export_training_set, load_training_set, scan_corpus, write_examples};
use xiangqi_core::encoding::{
    decode_action, encode_action, encode_state, ActionIndex, PolicyVector, ACTION_COUNT,
};
use xiangqi_core::evaluator::{
    evaluate_examples, loss, train_epoch, AdamConfig, AdamState, Evaluation, MaterialEvaluator,
    ModelConfig, ModelParams, PolicyTarget, TrainingExample, UniformEvaluator,
};
use xiangqi_core::mcts::{search, search_tree, SearchConfig};
use xiangqi_core::notation::{
    emit_fen, emit_iccs_move, parse_fen, parse_iccs_move, RecordOptions, START_FEN,
};
use xiangqi_core::rules::{initial_position, perft, Color, GameState, Move, Square};
use xiangqi_core::selfplay::{
    evaluate_match, generate_games, MatchConfig, PlayedGame, SelfPlayConfig,
};

type Outcome = Result<String, String>;

fn within(limit: Duration, elapsed: Duration, detail: String) -> Outcome {
    if elapsed <= limit {
        Ok(detail)
    } else {
        Err(format!(
            "{detail}; took {:.1}s, limit {}s",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ))
    }
}

fn move_generator() -> Outcome {
    let start = Instant::now();
    let mut states = random_walk_states(1000, 150, 1);
    states.extend(random_placements(500, 0.4, 2));
    let mut bad = 0;
    for s in &states {
        if engine_moves(s) != oracle_moves(&grid_of(s), s.side_to_move()) {
            bad += 1;
        }
    }
    let detail = format!("{} positions, {bad} discrepancies", states.len());
    if bad > 0 {
        return Err(detail);
    }
    within(Duration::from_secs(60), start.elapsed(), detail)
}

fn perft_counts() -> Outcome {
    let s = GameState::initial();
    let g = grid_of(&s);
    let d1 = perft(&s, 1);
    if d1 != 44 {
        return Err(format!("perft(1) = {d1}"));
    }
    let d2 = perft(&s, 2);
    let o2 = oracle_perft(&g, Color::Red, 2);
    let start = Instant::now();
    let d3 = perft(&s, 3);
    let elapsed = start.elapsed();
    let o3 = oracle_perft(&g, Color::Red, 3);
    let detail = format!(
        "44 / {d2} / {d3} (oracle {o2} / {o3}), depth 3 in {:.2}s",
        elapsed.as_secs_f64()
    );
    if d2 != o2 || d3 != o3 {
        return Err(detail);
    }
    within(Duration::from_secs(30), elapsed, detail)
}

fn encoding() -> Outcome {
    let mut pairs = 0;
    for from in Square::all() {
        for to in Square::all() {
            if let Some(m) = Move::new(from, to) {
                let a = encode_action(m);
                if decode_action(a) != Ok(m) || a.value() != from.index() * 90 + to.index() {
                    return Err(format!("action round trip fails for {m}"));
                }
                pairs += 1;
            }
        }
    }
    if pairs != 8010 {
        return Err(format!("{pairs} valid pairs"));
    }
    let mut states = random_walk_states(500, 150, 3);
    states.extend(random_placements(500, 0.35, 4));
    for (i, s) in states.iter().enumerate() {
        check_planes(s).map_err(|e| format!("state {i}: {e}"))?;
    }
    Ok(format!("{pairs} action pairs, {} states", states.len()))
}

fn notation() -> Outcome {
    if !parse_fen(START_FEN)
        .map_err(|e| e.to_string())?
        .same_position(&initial_position())
    {
        return Err("start FEN is not the initial position".into());
    }
    let mut states = random_walk_states(500, 150, 5);
    states.extend(random_placements(500, 0.4, 6));
    for s in &states {
        let text = emit_fen(s);
        let back = parse_fen(&text).map_err(|e| format!("{text}: {e}"))?;
        if !back.same_position(s) || emit_fen(&back) != text {
            return Err(format!("FEN round trip fails for {text}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let from = rng.random_range(0..90);
        let to = (from + rng.random_range(1..90)) % 90;
        let m = Move::new(
            Square::from_index(from).unwrap(),
            Square::from_index(to).unwrap(),
        )
        .unwrap();
        if parse_iccs_move(&emit_iccs_move(m)).ok() != Some(m) {
            return Err(format!("ICCS round trip fails for {m}"));
        }
    }
    Ok(format!("{} FEN, 1000 ICCS round trips", states.len()))
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let worst = (1..=3)
        .map(|seed| gradcheck(gradcheck_config(), seed, 1e-5))
        .fold(0.0, f64::max);
    let detail = format!("max relative error {worst:.2e}");
    if worst >= 1e-4 {
        return Err(detail);
    }
    within(Duration::from_secs(10), start.elapsed(), detail)
}

fn loss_anchors() -> Outcome {
    let target = PolicyTarget::Action(ActionIndex::new(4000).unwrap());
    let mut one_hot = vec![0.0; ACTION_COUNT];
    one_hot[4000] = 1.0;
    let perfect = loss(
        &Evaluation {
            policy: PolicyVector(one_hot),
            value: 0.25,
        },
        &target,
        0.25,
    );
    let uniform = loss(
        &Evaluation {
            policy: PolicyVector::uniform(ACTION_COUNT),
            value: 0.0,
        },
        &target,
        0.0,
    );
    let gap = (uniform.policy_loss - (ACTION_COUNT as f64).ln()).abs();
    let detail = format!(
        "perfect total {:.1e}, uniform policy loss off ln 8100 by {gap:.1e}",
        perfect.total
    );
    if perfect.total.abs() > 1e-12 || gap > 1e-9 {
        return Err(detail);
    }
    Ok(detail)
}

fn overfit_batch() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // distinct positions, so every target can be fit exactly
    let mut seen = std::collections::HashSet::new();
    let states: Vec<GameState> = random_walk_states(400, 40, 1)
        .into_iter()
        .filter(|s| seen.insert(emit_fen(s)))
        .take(64)
        .collect();
    let data: Vec<TrainingExample> = states
        .into_iter()
        .map(|s| {
            let moves = s.legal_moves();
            TrainingExample {
                planes: encode_state(&s),
                target: PolicyTarget::Action(encode_action(*moves.choose(&mut rng).unwrap())),
                z: *[-1.0, 0.0, 1.0].choose(&mut rng).unwrap(),
                legal: moves.into_iter().map(encode_action).collect(),
            }
        })
        .collect();
    let mut params = ModelParams::new(ModelConfig::default(), 7);
    let mut adam = AdamState::new(&params, AdamConfig::default());
    for step in 1..=2000 {
        let before = train_epoch(&mut params, &mut adam, &data, 64).map_err(|e| e.to_string())?;
        if before.policy_accuracy == 1.0 && before.value_mae < 0.1 {
            let after = evaluate_examples(&params, &data).map_err(|e| e.to_string())?;
            if after.policy_accuracy == 1.0 && after.value_mae < 0.1 {
                let detail = format!(
                    "{step} steps, accuracy {:.3}, value MAE {:.4}",
                    after.policy_accuracy, after.value_mae
                );
                return within(Duration::from_secs(120), start.elapsed(), detail);
            }
        }
    }
    let last = evaluate_examples(&params, &data).map_err(|e| e.to_string())?;
    Err(format!("not fit after 2000 steps: {last}"))
}

fn mate_in_one() -> Outcome {
    let start = Instant::now();
    let fixtures = load_mate_fixtures(MATE_FIXTURES);
    let mut hits = 0;
    for (i, (fen, m)) in fixtures.iter().enumerate() {
        let state = parse_fen(fen).map_err(|e| e.to_string())?;
        let m = mv(m);
        if oracle_winning_moves(&state) != vec![(m.from.index(), m.to.index())] {
            return Err(format!("fixture {i} is not a unique mate in one"));
        }
        let cfg = SearchConfig {
            simulations: 400,
            temperature: 0.0,
            rng_seed: i as u64,
            ..SearchConfig::default()
        };
        let tree = search_tree(&state, &UniformEvaluator, &cfg).map_err(|e| e.to_string())?;
        check_conservation(&tree, 400).map_err(|e| format!("fixture {i}: {e}"))?;
        let result = search(&state, &UniformEvaluator, &cfg).map_err(|e| e.to_string())?;
        hits += (result.best_action() == encode_action(m)) as usize;
    }
    for (i, s) in random_walk_states(10, 80, 12).iter().enumerate() {
        let cfg = SearchConfig {
            simulations: 200,
            rng_seed: i as u64,
            ..SearchConfig::default()
        };
        let tree = search_tree(s, &MaterialEvaluator, &cfg).map_err(|e| e.to_string())?;
        check_conservation(&tree, 200).map_err(|e| format!("midgame {i}: {e}"))?;
    }
    let detail = format!("{hits}/{} mates found, conservation holds", fixtures.len());
    if fixtures.len() < 20 || hits * 100 < fixtures.len() * 95 {
        return Err(detail);
    }
    within(Duration::from_secs(120), start.elapsed(), detail)
}

fn same_games(a: &[PlayedGame], b: &[PlayedGame]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.record == y.record
                && x.status == y.status
                && x.examples.len() == y.examples.len()
                && x.examples.iter().zip(&y.examples).all(|(e, f)| {
                    e.planes == f.planes
                        && e.z.to_bits() == f.z.to_bits()
                        && e.target
                            .entries()
                            .iter()
                            .zip(f.target.entries())
                            .all(|(p, q)| p.0 == q.0 && p.1.to_bits() == q.1.to_bits())
                })
        })
}

fn self_play() -> Outcome {
    let cfg = SelfPlayConfig {
        search: SearchConfig {
            simulations: 16,
            ..SearchConfig::default()
        },
        games: 50,
        rng_seed: 2025,
        ..SelfPlayConfig::default()
    };
    let games = generate_games(&MaterialEvaluator, &cfg, 1).map_err(|e| e.to_string())?;
    for (i, g) in games.iter().enumerate() {
        check_played_game(g, cfg.move_cap).map_err(|e| format!("game {i}: {e}"))?;
    }
    let again = generate_games(&MaterialEvaluator, &cfg, 1).map_err(|e| e.to_string())?;
    let threaded = generate_games(&MaterialEvaluator, &cfg, 2).map_err(|e| e.to_string())?;
    if !same_games(&games, &again) || !same_games(&games, &threaded) {
        return Err("repeated runs differ".into());
    }
    let decisive = games.iter().filter(|g| g.status.winner().is_some()).count();
    let plies: usize = games.iter().map(|g| g.length()).sum();
    Ok(format!(
        "50 games ({decisive} decisive, {} drawn), {plies} plies replayed, runs identical",
        50 - decisive
    ))
}

fn strength() -> Outcome {
    let start = Instant::now();
    let cfg = MatchConfig {
        search: SearchConfig {
            simulations: 100,
            temperature: 0.0,
            ..SearchConfig::default()
        },
        rng_seed: 10,
        ..MatchConfig::default()
    };
    let report = evaluate_match(&MaterialEvaluator, &UniformEvaluator, 10, &cfg, 1)
        .map_err(|e| e.to_string())?;
    let detail = format!(
        "material vs uniform: {}W {}L {}D, score {:.2}",
        report.wins,
        report.losses,
        report.draws,
        report.score()
    );
    if report.wins + report.losses + report.draws != 10 || report.score() < 0.5 {
        return Err(detail);
    }
    within(Duration::from_secs(300), start.elapsed(), detail)
}

fn corpus_tooling() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus");
    let inputs = [
        dir.join("three_results.pgn"),
        dir.join("flawed.pgn"),
        dir.join("empty.pgn"),
    ];
    let stats = scan_corpus(&inputs, RecordOptions::default()).map_err(|e| e.to_string())?;
    // 120 + 3 + 3 moves: the illegal record still parses, the bad token does not
    let expected = (5, 126, 1, 2, 1, 1, 1);
    let got = (
        stats.games,
        stats.total_moves,
        stats.red_wins,
        stats.black_wins,
        stats.draws,
        stats.unknown_results,
        stats.parse_errors,
    );
    if got != expected || !stats.is_conserved() {
        return Err(format!("stats {got:?}, expected {expected:?}"));
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = tmp.path().join("a.jsonl");
    let b = tmp.path().join("b.jsonl");
    let ma = export_training_set(&inputs, &a, None, RecordOptions::default())
        .map_err(|e| e.to_string())?;
    export_training_set(&inputs, &b, None, RecordOptions::default()).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&a).map_err(|e| e.to_string())?;
    if bytes != std::fs::read(&b).map_err(|e| e.to_string())? {
        return Err("exports differ".into());
    }
    let loaded = load_training_set(&a).map_err(|e| e.to_string())?;
    let mut rewritten = Vec::new();
    let (count, digest) =
        write_examples(&mut rewritten, loaded.iter()).map_err(|e| e.to_string())?;
    if rewritten != bytes || digest != ma.sha256 || count != ma.examples {
        return Err("reloaded examples do not re-serialize identically".into());
    }
    Ok(format!(
        "stats exact, {} examples round-trip byte-stable",
        ma.examples
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("move generator vs oracle", move_generator),
        ("perft", perft_counts),
        ("encoding", encoding),
        ("notation round trips", notation),
        ("gradient check", gradient_check),
        ("loss anchors", loss_anchors),
        ("overfit a batch", overfit_batch),
        ("search on mate-in-one fixtures", mate_in_one),
        ("self-play pipeline", self_play),
        ("strength ordering", strength),
        ("corpus tooling", corpus_tooling),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
