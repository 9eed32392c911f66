//! Test-only helpers: an independent move-generation oracle, seeded
//! position generators, a finite-difference gradient check and checkers for
//! search trees and self-play games.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xiangqi_core::encoding::{
    decode_state, encode_action, encode_state, ActionIndex, PlaneTensor, CHANNELS, FILES,
    PLANE_LEN, RANKS, SIDE_CHANNEL,
};
use xiangqi_core::evaluator::{loss, ModelConfig, ModelParams, PolicyTarget};
use xiangqi_core::mcts::SearchTree;
use xiangqi_core::notation::{parse_game_record, RecordResult};
use xiangqi_core::rules::{Board, Color, GameState, Move, Piece, PieceKind, Square};
use xiangqi_core::selfplay::PlayedGame;

/// Plain 10x9 array, indexed `[rank][file]`.
pub type Grid = [[Option<Piece>; 9]; 10];

pub fn grid_of(state: &GameState) -> Grid {
    let mut g: Grid = [[None; 9]; 10];
    for (sq, p) in state.board().pieces() {
        g[sq.rank() as usize][sq.file() as usize] = Some(p);
    }
    g
}

fn in_palace(color: Color, file: i32, rank: i32) -> bool {
    let ranks = match color {
        Color::Red => 0..=2,
        Color::Black => 7..=9,
    };
    (3..=5).contains(&file) && ranks.contains(&rank)
}

fn own_half(color: Color, rank: i32) -> bool {
    match color {
        Color::Red => rank <= 4,
        Color::Black => rank >= 5,
    }
}

/// Pieces strictly between two squares on a shared rank or file.
fn between(g: &Grid, (f0, r0): (i32, i32), (f1, r1): (i32, i32)) -> usize {
    let mut n = 0;
    if f0 == f1 {
        for r in r0.min(r1) + 1..r0.max(r1) {
            n += g[r as usize][f0 as usize].is_some() as usize;
        }
    } else {
        for f in f0.min(f1) + 1..f0.max(f1) {
            n += g[r0 as usize][f as usize].is_some() as usize;
        }
    }
    n
}

/// Whether the piece on `from` may move to `to` by its movement rule alone,
/// ignoring checks.
pub fn pseudo_legal(g: &Grid, (f0, r0): (i32, i32), (f1, r1): (i32, i32)) -> bool {
    let Some(p) = g[r0 as usize][f0 as usize] else {
        return false;
    };
    if (f0, r0) == (f1, r1) {
        return false;
    }
    if let Some(t) = g[r1 as usize][f1 as usize] {
        if t.color == p.color {
            return false;
        }
    }
    let (df, dr) = (f1 - f0, r1 - r0);
    let (adf, adr) = (df.abs(), dr.abs());
    match p.kind {
        PieceKind::General => adf + adr == 1 && in_palace(p.color, f1, r1),
        PieceKind::Advisor => adf == 1 && adr == 1 && in_palace(p.color, f1, r1),
        PieceKind::Elephant => {
            adf == 2
                && adr == 2
                && own_half(p.color, r1)
                && g[(r0 + dr / 2) as usize][(f0 + df / 2) as usize].is_none()
        }
        PieceKind::Horse => {
            let leg = match (adf, adr) {
                (1, 2) => (f0, r0 + dr / 2),
                (2, 1) => (f0 + df / 2, r0),
                _ => return false,
            };
            g[leg.1 as usize][leg.0 as usize].is_none()
        }
        PieceKind::Rook => (df == 0 || dr == 0) && between(g, (f0, r0), (f1, r1)) == 0,
        PieceKind::Cannon => {
            if df != 0 && dr != 0 {
                return false;
            }
            let screens = between(g, (f0, r0), (f1, r1));
            if g[r1 as usize][f1 as usize].is_some() {
                screens == 1
            } else {
                screens == 0
            }
        }
        PieceKind::Soldier => {
            let fwd = if p.color == Color::Red { 1 } else { -1 };
            (df == 0 && dr == fwd) || (!own_half(p.color, r0) && adf == 1 && dr == 0)
        }
    }
}

fn find_general(g: &Grid, color: Color) -> Option<(i32, i32)> {
    for r in 0..10 {
        for f in 0..9 {
            if g[r][f] == Some(Piece::new(color, PieceKind::General)) {
                return Some((f as i32, r as i32));
            }
        }
    }
    None
}

/// True when `color`'s general is attacked or faces the other general.
pub fn exposed(g: &Grid, color: Color) -> bool {
    let Some(king) = find_general(g, color) else {
        return true;
    };
    if let Some(other) = find_general(g, color.opponent()) {
        if other.0 == king.0 && between(g, king, other) == 0 {
            return true;
        }
    }
    for r in 0..10 {
        for f in 0..9 {
            if let Some(p) = g[r][f] {
                if p.color != color && pseudo_legal(g, (f as i32, r as i32), king) {
                    return true;
                }
            }
        }
    }
    false
}

/// Every legal move found by trying all 90x90 square pairs.
pub fn oracle_moves(g: &Grid, side: Color) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for r0 in 0..10 {
        for f0 in 0..9 {
            match g[r0][f0] {
                Some(p) if p.color == side => {}
                _ => continue,
            }
            for r1 in 0..10 {
                for f1 in 0..9 {
                    let (a, b) = ((f0 as i32, r0 as i32), (f1 as i32, r1 as i32));
                    if !pseudo_legal(g, a, b) {
                        continue;
                    }
                    let mut next = *g;
                    next[r1][f1] = next[r0][f0].take();
                    if !exposed(&next, side) {
                        out.insert((r0 * 9 + f0, r1 * 9 + f1));
                    }
                }
            }
        }
    }
    out
}

pub fn oracle_perft(g: &Grid, side: Color, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = oracle_moves(g, side);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .into_iter()
        .map(|(a, b)| {
            let mut next = *g;
            next[b / 9][b % 9] = next[a / 9][a % 9].take();
            oracle_perft(&next, side.opponent(), depth - 1)
        })
        .sum()
}

pub fn engine_moves(state: &GameState) -> BTreeSet<(usize, usize)> {
    state
        .legal_moves()
        .into_iter()
        .map(|m| (m.from.index(), m.to.index()))
        .collect()
}

/// Positions along seeded random games from the start, restarting when a
/// game ends or reaches `max_plies`.
pub fn random_walk_states(count: usize, max_plies: u32, seed: u64) -> Vec<GameState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut state = GameState::initial();
    while out.len() < count {
        let moves = state.legal_moves();
        if moves.is_empty() || state.ply() >= max_plies {
            state = GameState::initial();
            continue;
        }
        out.push(state.clone());
        state = state.apply_move_unchecked(*moves.choose(&mut rng).unwrap());
    }
    out
}

const KINDS: [(PieceKind, usize); 6] = [
    (PieceKind::Advisor, 2),
    (PieceKind::Elephant, 2),
    (PieceKind::Horse, 2),
    (PieceKind::Rook, 2),
    (PieceKind::Cannon, 2),
    (PieceKind::Soldier, 5),
];

/// Squares a piece of this kind can ever stand on.
fn reachable(color: Color, kind: PieceKind, sq: Square) -> bool {
    let (f, r) = (sq.file() as i32, sq.rank() as i32);
    let rel = if color == Color::Red { r } else { 9 - r };
    match kind {
        PieceKind::General => sq.in_palace(color),
        PieceKind::Advisor => sq.in_palace(color) && ((f == 4 && rel == 1) || (f != 4 && rel != 1)),
        PieceKind::Elephant => {
            [(2, 0), (6, 0), (0, 2), (4, 2), (8, 2), (2, 4), (6, 4)].contains(&(f, rel))
        }
        PieceKind::Soldier => rel >= 5 || (rel >= 3 && f % 2 == 0),
        _ => true,
    }
}

/// Random sparse placements that pass position validation. Each non-general
/// piece is kept with probability `density` and put on a square its kind
/// can reach.
pub fn random_placements(count: usize, density: f64, seed: u64) -> Vec<GameState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut board = Board::empty();
        for color in Color::ALL {
            let place = |kind: PieceKind, board: &mut Board, rng: &mut ChaCha8Rng| {
                let options: Vec<Square> = Square::all()
                    .filter(|&s| board.get(s).is_none() && reachable(color, kind, s))
                    .collect();
                if let Some(&sq) = options.choose(rng) {
                    board.set(sq, Some(Piece::new(color, kind)));
                }
            };
            place(PieceKind::General, &mut board, &mut rng);
            for &(kind, n) in &KINDS {
                for _ in 0..n {
                    if rng.random_bool(density) {
                        place(kind, &mut board, &mut rng);
                    }
                }
            }
        }
        let side = if rng.random_bool(0.5) {
            Color::Red
        } else {
            Color::Black
        };
        if let Ok(state) = GameState::from_board(board, side) {
            out.push(state);
        }
    }
    out
}

pub fn mv(text: &str) -> Move {
    xiangqi_core::notation::parse_iccs_move(text).unwrap()
}

/// Reduced model used for finite-difference checks.
pub fn gradcheck_config() -> ModelConfig {
    ModelConfig {
        input: 30,
        hidden: vec![8],
        policy: 12,
        value_hidden: vec![6, 5],
    }
}

fn total_loss(params: &ModelParams, x: &[f64], target: &PolicyTarget, z: f64) -> f64 {
    let (eval, _) = params.forward(x).unwrap();
    loss(&eval, target, z).total
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every parameter. The denominator is
/// floored at 1e-8 so that parameters with no influence compare absolutely.
pub fn gradcheck(config: ModelConfig, seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut params = ModelParams::new(config.clone(), seed);
    for t in params.tensors_mut() {
        for w in t.iter_mut() {
            if *w == 0.0 {
                *w = rng.random_range(-0.1..0.1);
            }
        }
    }
    let x: Vec<f64> = (0..config.input)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let target = PolicyTarget::Distribution(
        raw.iter()
            .enumerate()
            .map(|(i, r)| (ActionIndex::new(i * 3 + 1).unwrap(), r / sum))
            .collect(),
    );
    let z = 0.4;
    let (_, cache) = params.forward(&x).unwrap();
    let grads = params.backward(&cache, &target, z).unwrap();
    let analytic: Vec<f64> = grads.tensors().concat();
    let mut worst = 0.0f64;
    let mut k = 0;
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    for (ti, &len) in sizes.iter().enumerate() {
        for j in 0..len {
            let orig = params.tensors()[ti][j];
            params.tensors_mut()[ti][j] = orig + h;
            let up = total_loss(&params, &x, &target, z);
            params.tensors_mut()[ti][j] = orig - h;
            let down = total_loss(&params, &x, &target, z);
            params.tensors_mut()[ti][j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k];
            let rel = (a - numeric).abs() / (a.abs().max(numeric.abs())).max(1e-8);
            worst = worst.max(rel);
            k += 1;
        }
    }
    worst
}

/// Moves after which the opponent has no legal reply, by the oracle alone.
/// Both checkmate and stalemate end the game in the mover's favour.
pub fn oracle_winning_moves(state: &GameState) -> Vec<(usize, usize)> {
    let g = grid_of(state);
    let side = state.side_to_move();
    oracle_moves(&g, side)
        .into_iter()
        .filter(|&(a, b)| {
            let mut next = g;
            next[b / 9][b % 9] = next[a / 9][a % 9].take();
            oracle_moves(&next, side.opponent()).is_empty()
        })
        .collect()
}

/// `(fen, move)` pairs from a fixture file; `#` starts a comment.
pub fn load_mate_fixtures(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (fen, m) = l.rsplit_once(';').expect("fen;move");
            (fen.trim().to_string(), m.trim().to_string())
        })
        .collect()
}

pub const MATE_FIXTURES: &str = include_str!("../fixtures/mate_in_one.txt");

/// Checks N(s) = sum of N(s,a) on every node and that each edge's count is
/// one more than its child's (the first visit expands the child) unless the
/// child is terminal, where every visit stops. Returns a description of the
/// first violation.
pub fn check_conservation(tree: &SearchTree, simulations: u32) -> Result<(), String> {
    let root = tree.root();
    if root.visits != simulations {
        return Err(format!("root visits {} != {simulations}", root.visits));
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        let sum: u32 = node.edges.iter().map(|e| e.visits).sum();
        if sum != node.visits {
            return Err(format!("node {i}: N(s) {} != sum {sum}", node.visits));
        }
        for (j, e) in node.edges.iter().enumerate() {
            let Some(c) = tree.child(i, j) else {
                if e.visits != 0 {
                    return Err(format!("node {i} edge {j}: visits without a child"));
                }
                continue;
            };
            let child = &tree.nodes[c];
            let expected = if child.terminal_value.is_some() {
                0
            } else {
                e.visits - 1
            };
            if child.visits != expected {
                return Err(format!(
                    "node {i} edge {j}: edge N {} child N {}",
                    e.visits, child.visits
                ));
            }
        }
    }
    Ok(())
}

/// Replays a self-play game from its record and checks the stored examples:
/// one per ply with matching planes, policy targets that are distributions
/// over legal moves, and outcomes that are +-1 alternating for a decisive
/// game and 0 for a draw.
pub fn check_played_game(game: &PlayedGame, move_cap: u32) -> Result<(), String> {
    let parsed = parse_game_record(&game.record.to_pgn()).map_err(|e| e.to_string())?;
    if parsed != game.record {
        return Err("record does not survive a text round trip".into());
    }
    let mut state = game.record.start_state().map_err(|e| e.to_string())?;
    if game.examples.len() != game.record.moves.len() {
        return Err(format!(
            "{} examples for {} plies",
            game.examples.len(),
            game.record.moves.len()
        ));
    }
    let red = match game.record.result {
        RecordResult::RedWin => 1.0,
        RecordResult::BlackWin => -1.0,
        RecordResult::Draw => 0.0,
        RecordResult::Unknown => return Err("self-play result unknown".into()),
    };
    if game.status.red_score() != red {
        return Err("record result disagrees with final status".into());
    }
    for (ply, (&m, ex)) in game.record.moves.iter().zip(&game.examples).enumerate() {
        if ex.planes != encode_state(&state) {
            return Err(format!(
                "ply {ply}: planes differ from the replayed position"
            ));
        }
        let legal: BTreeSet<usize> = state
            .legal_moves()
            .into_iter()
            .map(|m| encode_action(m).value())
            .collect();
        let entries = ex.target.entries();
        let mass: f64 = entries.iter().map(|e| e.1).sum();
        if (mass - 1.0).abs() > 1e-9 || entries.iter().any(|&(a, p)| p < 0.0 || !legal.contains(&a))
        {
            return Err(format!(
                "ply {ply}: policy target is not a distribution over legal moves"
            ));
        }
        let expected = if state.side_to_move() == Color::Red {
            red
        } else {
            -red
        };
        if ex.z != expected {
            return Err(format!("ply {ply}: z = {} for result {red}", ex.z));
        }
        if ply > 0 && ex.z != -game.examples[ply - 1].z {
            return Err(format!("ply {ply}: z does not alternate"));
        }
        state = state
            .apply_move(m)
            .map_err(|_| format!("ply {ply}: illegal move {m}"))?;
    }
    if state.status_with_cap(move_cap) != game.status {
        return Err(format!(
            "final status {:?} but replay gives {:?}",
            game.status,
            state.status_with_cap(move_cap)
        ));
    }
    Ok(())
}

fn channel_of(color: Color, kind: PieceKind) -> usize {
    let base = if color == Color::Red { 0 } else { 7 };
    base + PieceKind::ALL.iter().position(|&k| k == kind).unwrap()
}

/// Compares the encoder against planes built directly from the board:
/// channels 0-6 Red pieces, 7-13 Black, 14 all ones when Red moves. Also
/// checks per-square exclusivity, piece counts, and decoding back.
pub fn check_planes(state: &GameState) -> Result<(), String> {
    let planes = encode_state(state);
    let dense = planes.to_dense();
    let mut expected = vec![0.0; PLANE_LEN];
    for (sq, p) in state.board().pieces() {
        let (r, f) = (sq.rank() as usize, sq.file() as usize);
        expected[(r * FILES + f) * CHANNELS + channel_of(p.color, p.kind)] = 1.0;
    }
    if state.side_to_move() == Color::Red {
        for cell in 0..RANKS * FILES {
            expected[cell * CHANNELS + SIDE_CHANNEL] = 1.0;
        }
    }
    if dense != expected {
        return Err("planes differ from the board".into());
    }
    for r in 0..RANKS {
        for f in 0..FILES {
            let hot: f64 = (0..SIDE_CHANNEL).map(|c| planes.get(r, f, c)).sum();
            if hot > 1.0 {
                return Err(format!("square ({f},{r}) has {hot} piece channels set"));
            }
            if dense[PlaneTensor::offset(r, f, 3)] != planes.get(r, f, 3) {
                return Err("offset disagrees with get".into());
            }
        }
    }
    let side = if state.side_to_move() == Color::Red {
        90
    } else {
        0
    };
    if planes.count_ones() != state.board().pieces().count() + side {
        return Err("one count differs from piece count".into());
    }
    for color in Color::ALL {
        for kind in PieceKind::ALL {
            let n = state
                .board()
                .pieces()
                .filter(|(_, p)| p.color == color && p.kind == kind)
                .count();
            if planes.channel_sum(channel_of(color, kind)) != n as f64 {
                return Err(format!("{color:?} {kind:?} count mismatch"));
            }
        }
    }
    match decode_state(&planes) {
        Some(back) if back.same_position(state) => Ok(()),
        _ => Err("planes do not decode to the same position".into()),
    }
}
