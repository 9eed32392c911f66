use crate::rules::{Board, Color, GameState, Piece, PieceKind, Square};

use super::NotationError;

/// FEN of the standard starting array.
pub const START_FEN: &str = "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR w";

fn piece_from_char(c: char) -> Option<Piece> {
    let color = if c.is_ascii_uppercase() {
        Color::Red
    } else {
        Color::Black
    };
    let kind = match c.to_ascii_lowercase() {
        'k' => PieceKind::General,
        'a' => PieceKind::Advisor,
        'b' | 'e' => PieceKind::Elephant,
        'n' | 'h' => PieceKind::Horse,
        'r' => PieceKind::Rook,
        'c' => PieceKind::Cannon,
        'p' => PieceKind::Soldier,
        _ => return None,
    };
    Some(Piece::new(color, kind))
}

pub(crate) fn piece_char(piece: Piece) -> char {
    let c = match piece.kind {
        PieceKind::General => 'k',
        PieceKind::Advisor => 'a',
        PieceKind::Elephant => 'b',
        PieceKind::Horse => 'n',
        PieceKind::Rook => 'r',
        PieceKind::Cannon => 'c',
        PieceKind::Soldier => 'p',
    };
    match piece.color {
        Color::Red => c.to_ascii_uppercase(),
        Color::Black => c,
    }
}

/// Parses a Xiangqi FEN. Only the placement and side fields are read; any
/// further fields (castling placeholders, move counters) are ignored. A
/// missing side field means Red to move.
pub fn parse_fen(text: &str) -> Result<GameState, NotationError> {
    let text = text.trim();
    let mut fields = text.split_whitespace();
    let placement = fields
        .next()
        .ok_or_else(|| NotationError::syntax(1, 1, "empty FEN"))?;
    let ranks: Vec<&str> = placement.split('/').collect();
    if ranks.len() != 10 {
        return Err(NotationError::syntax(
            1,
            1,
            format!("expected 10 rank fields, found {}", ranks.len()),
        ));
    }
    let mut board = Board::empty();
    let mut column = 1;
    for (i, field) in ranks.iter().enumerate() {
        let rank = 9 - i as u8;
        let mut file = 0u8;
        for c in field.chars() {
            if let Some(run) = c.to_digit(10) {
                if run == 0 {
                    return Err(NotationError::syntax(1, column, "zero-length empty run"));
                }
                file += run as u8;
            } else if let Some(piece) = piece_from_char(c) {
                if file < 9 {
                    board.set(Square::new(file, rank).unwrap(), Some(piece));
                }
                file += 1;
            } else {
                return Err(NotationError::syntax(
                    1,
                    column,
                    format!("unexpected character {c:?}"),
                ));
            }
            if file > 9 {
                return Err(NotationError::syntax(
                    1,
                    column,
                    "rank field overflows 9 files",
                ));
            }
            column += 1;
        }
        if file != 9 {
            return Err(NotationError::syntax(
                1,
                column,
                format!("rank field {field:?} covers {file} files, expected 9"),
            ));
        }
        column += 1;
    }
    let side = match fields.next() {
        None | Some("w") | Some("r") | Some("W") | Some("R") => Color::Red,
        Some("b") | Some("B") => Color::Black,
        Some(other) => {
            return Err(NotationError::syntax(
                1,
                placement.len() + 2,
                format!("bad side-to-move field {other:?}"),
            ))
        }
    };
    Ok(GameState::from_board(board, side)?)
}

pub fn emit_fen(state: &GameState) -> String {
    let board = state.board();
    let mut out = String::with_capacity(64);
    for rank in (0..10).rev() {
        let mut run = 0;
        for file in 0..9 {
            match board.get(Square::new(file, rank).unwrap()) {
                None => run += 1,
                Some(piece) => {
                    if run > 0 {
                        out.push(char::from_digit(run, 10).unwrap());
                        run = 0;
                    }
                    out.push(piece_char(piece));
                }
            }
        }
        if run > 0 {
            out.push(char::from_digit(run, 10).unwrap());
        }
        if rank > 0 {
            out.push('/');
        }
    }
    out.push(' ');
    out.push(match state.side_to_move() {
        Color::Red => 'w',
        Color::Black => 'b',
    });
    out
}
