use thiserror::Error;

use super::board::Board;
use super::hash;
use super::types::{Color, Move, PieceKind, Square};

/// Default draw cap in plies.
pub const DEFAULT_MOVE_CAP: u32 = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulesError {
    #[error("illegal move {0}")]
    IllegalMove(Move),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PositionError {
    #[error("{0} has no general")]
    MissingGeneral(Color),
    #[error("{0} has more than one general")]
    ExtraGeneral(Color),
    #[error("{color} general outside the palace at {square}")]
    GeneralOutsidePalace { color: Color, square: Square },
    #[error("{color} advisor off the palace diagonals at {square}")]
    AdvisorOffPoint { color: Color, square: Square },
    #[error("{color} elephant on an unreachable point at {square}")]
    ElephantOffPoint { color: Color, square: Square },
    #[error("generals face each other on an open file")]
    GeneralsFacing,
    #[error("side not to move ({0}) is in check")]
    OpponentInCheck(Color),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalReason {
    Checkmate,
    Stalemate,
    Repetition,
    MoveCap,
    PerpetualCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameStatus {
    Ongoing,
    RedWins(TerminalReason),
    BlackWins(TerminalReason),
    Draw(TerminalReason),
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        self != GameStatus::Ongoing
    }

    pub fn winner(self) -> Option<Color> {
        match self {
            GameStatus::RedWins(_) => Some(Color::Red),
            GameStatus::BlackWins(_) => Some(Color::Black),
            _ => None,
        }
    }

    fn win_for(color: Color, reason: TerminalReason) -> GameStatus {
        match color {
            Color::Red => GameStatus::RedWins(reason),
            Color::Black => GameStatus::BlackWins(reason),
        }
    }

    /// Outcome from Red's point of view: +1, -1, or 0 (draws and ongoing games).
    pub fn red_score(self) -> f64 {
        match self {
            GameStatus::RedWins(_) => 1.0,
            GameStatus::BlackWins(_) => -1.0,
            _ => 0.0,
        }
    }

    /// Outcome from `color`'s point of view.
    pub fn score_for(self, color: Color) -> f64 {
        match color {
            Color::Red => self.red_score(),
            Color::Black => -self.red_score(),
        }
    }
}

/// One entry per position reached, starting with the initial one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HistoryEntry {
    pub hash: u64,
    /// Whether the move that produced this position gave check.
    pub gave_check: bool,
}

/// A full game position: placement, side to move, ply counter and repetition history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameState {
    board: Board,
    side_to_move: Color,
    ply: u32,
    hash: u64,
    history: Vec<HistoryEntry>,
}

const ADVISOR_POINTS: [(u8, u8); 5] = [(3, 0), (5, 0), (4, 1), (3, 2), (5, 2)];
const ELEPHANT_POINTS: [(u8, u8); 7] = [(2, 0), (6, 0), (0, 2), (4, 2), (8, 2), (2, 4), (6, 4)];

/// Mirror a Red-side rank onto Black's half.
fn relative_rank(color: Color, rank: u8) -> u8 {
    match color {
        Color::Red => rank,
        Color::Black => 9 - rank,
    }
}

impl GameState {
    pub fn initial() -> Self {
        GameState::from_board(Board::standard(), Color::Red).expect("standard array is valid")
    }

    /// Builds a state with empty history after checking every placement invariant.
    pub fn from_board(board: Board, side_to_move: Color) -> Result<Self, PositionError> {
        for color in Color::ALL {
            let generals = board
                .pieces()
                .filter(|(_, p)| p.color == color && p.kind == PieceKind::General)
                .map(|(sq, _)| sq)
                .collect::<Vec<_>>();
            match generals.as_slice() {
                [] => return Err(PositionError::MissingGeneral(color)),
                [sq] if !sq.in_palace(color) => {
                    return Err(PositionError::GeneralOutsidePalace { color, square: *sq })
                }
                [_] => {}
                _ => return Err(PositionError::ExtraGeneral(color)),
            }
        }
        for (square, piece) in board.pieces() {
            let rel = (square.file(), relative_rank(piece.color, square.rank()));
            match piece.kind {
                PieceKind::Advisor if !ADVISOR_POINTS.contains(&rel) => {
                    return Err(PositionError::AdvisorOffPoint {
                        color: piece.color,
                        square,
                    })
                }
                PieceKind::Elephant if !ELEPHANT_POINTS.contains(&rel) => {
                    return Err(PositionError::ElephantOffPoint {
                        color: piece.color,
                        square,
                    })
                }
                _ => {}
            }
        }
        if board.generals_facing() {
            return Err(PositionError::GeneralsFacing);
        }
        let waiting = side_to_move.opponent();
        if board.in_check(waiting) {
            return Err(PositionError::OpponentInCheck(waiting));
        }
        let hash = board.hash_pieces() ^ hash::side_key(side_to_move);
        let gave_check = board.in_check(side_to_move);
        Ok(GameState {
            board,
            side_to_move,
            ply: 0,
            hash,
            history: vec![HistoryEntry { hash, gave_check }],
        })
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    pub fn ply(&self) -> u32 {
        self.ply
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// Incrementally maintained position hash (placement + side to move).
    pub fn position_hash(&self) -> u64 {
        self.hash
    }

    /// Same position irrespective of ply counter and history.
    pub fn same_position(&self, other: &GameState) -> bool {
        self.side_to_move == other.side_to_move && self.board == other.board
    }

    pub fn legal_moves(&self) -> Vec<Move> {
        self.board.legal_moves(self.side_to_move)
    }

    pub fn is_in_check(&self, color: Color) -> bool {
        self.board.in_check(color)
    }

    pub fn apply_move(&self, mv: Move) -> Result<GameState, RulesError> {
        if !self.legal_moves().contains(&mv) {
            return Err(RulesError::IllegalMove(mv));
        }
        Ok(self.apply_move_unchecked(mv))
    }

    /// Applies a move already known to be legal, skipping validation.
    pub fn apply_move_unchecked(&self, mv: Move) -> GameState {
        let mut board = self.board.clone();
        let moving = board.get(mv.from).expect("move from an empty square");
        let mut hash = self.hash ^ hash::side_key(self.side_to_move);
        hash ^= hash::piece_key(mv.from, moving) ^ hash::piece_key(mv.to, moving);
        if let Some(captured) = board.make(mv) {
            hash ^= hash::piece_key(mv.to, captured);
        }
        let side_to_move = self.side_to_move.opponent();
        hash ^= hash::side_key(side_to_move);
        let gave_check = board.in_check(side_to_move);
        let mut history = Vec::with_capacity(self.history.len() + 1);
        history.extend_from_slice(&self.history);
        history.push(HistoryEntry { hash, gave_check });
        GameState {
            board,
            side_to_move,
            ply: self.ply + 1,
            hash,
            history,
        }
    }

    pub fn status(&self) -> GameStatus {
        self.status_with_cap(DEFAULT_MOVE_CAP)
    }

    pub fn status_with_cap(&self, move_cap: u32) -> GameStatus {
        let side = self.side_to_move;
        if !self.board.has_legal_move(side) {
            let reason = if self.board.in_check(side) {
                TerminalReason::Checkmate
            } else {
                TerminalReason::Stalemate
            };
            return GameStatus::win_for(side.opponent(), reason);
        }
        if let Some(status) = self.repetition_status() {
            return status;
        }
        if self.ply >= move_cap {
            return GameStatus::Draw(TerminalReason::MoveCap);
        }
        GameStatus::Ongoing
    }

    /// Third occurrence of the current position adjudicates. A side that gave
    /// check with every one of its moves since the first occurrence loses.
    fn repetition_status(&self) -> Option<GameStatus> {
        let last = self.history.len() - 1;
        let current = self.history[last].hash;
        let occurrences: Vec<usize> = self
            .history
            .iter()
            .enumerate()
            .filter(|(_, e)| e.hash == current)
            .map(|(i, _)| i)
            .collect();
        if occurrences.len() < 3 {
            return None;
        }
        let first = occurrences[0];
        // Entry `last` was produced by the side that just moved; parities alternate back from it.
        let just_moved = self.side_to_move.opponent();
        let mut always_checked = [true, true];
        for (offset, entry) in self.history[first + 1..=last].iter().rev().enumerate() {
            let mover = if offset % 2 == 0 {
                just_moved
            } else {
                self.side_to_move
            };
            always_checked[mover.index()] &= entry.gave_check;
        }
        Some(match (always_checked[0], always_checked[1]) {
            (true, false) => GameStatus::BlackWins(TerminalReason::PerpetualCheck),
            (false, true) => GameStatus::RedWins(TerminalReason::PerpetualCheck),
            _ => GameStatus::Draw(TerminalReason::Repetition),
        })
    }
}

/// Recomputes the hash from scratch; equals [`GameState::position_hash`].
pub fn position_hash(state: &GameState) -> u64 {
    state.board().hash_pieces() ^ hash::side_key(state.side_to_move())
}

/// Number of legal move sequences of exactly `depth` plies.
pub fn perft(state: &GameState, depth: u32) -> u64 {
    fn walk(board: &mut Board, side: Color, depth: u32) -> u64 {
        let moves = board.legal_moves(side);
        if depth == 1 {
            return moves.len() as u64;
        }
        let mut nodes = 0;
        for mv in moves {
            let captured = board.make(mv);
            nodes += walk(board, side.opponent(), depth - 1);
            board.unmake(mv, captured);
        }
        nodes
    }
    if depth == 0 {
        return 1;
    }
    let mut board = state.board().clone();
    walk(&mut board, state.side_to_move(), depth)
}

/// Per-root-move subtree counts at `depth - 1`; their sum is `perft(state, depth)`.
pub fn perft_divide(state: &GameState, depth: u32) -> Vec<(Move, u64)> {
    if depth == 0 {
        return Vec::new();
    }
    state
        .legal_moves()
        .into_iter()
        .map(|mv| (mv, perft(&state.apply_move_unchecked(mv), depth - 1)))
        .collect()
}
