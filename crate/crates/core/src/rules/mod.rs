//! Xiangqi game logic: placement, legal-move generation, check detection,
//! terminal adjudication and perft.

mod board;
mod hash;
mod state;
mod types;

pub use board::Board;
pub use state::{
    perft, perft_divide, position_hash, GameState, GameStatus, HistoryEntry, PositionError,
    RulesError, TerminalReason, DEFAULT_MOVE_CAP,
};
pub use types::{Color, Move, Piece, PieceKind, Square};

/// The standard starting array with Red to move.
pub fn initial_position() -> GameState {
    GameState::initial()
}
