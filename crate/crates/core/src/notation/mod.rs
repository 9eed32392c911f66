//! Text formats: Xiangqi FEN, ICCS coordinate moves, PGN-style game
//! records and a plain-text board renderer.

mod fen;
mod iccs;
mod record;
mod render;

use thiserror::Error;

use crate::rules::PositionError;

pub use fen::{emit_fen, parse_fen, START_FEN};
pub use iccs::{emit_iccs_move, parse_iccs_move, parse_iccs_move_with, RankBase};
pub use record::{
    parse_game_record, parse_game_record_with, GameRecord, RecordOptions, RecordReader,
    RecordResult,
};
pub use render::render_board;

#[derive(Debug, Error)]
pub enum NotationError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid position: {0}")]
    InvalidPosition(#[from] PositionError),
    #[error("unsupported record format {0:?} (only ICCS is read)")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NotationError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        NotationError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}
