use crate::rules::{GameState, Square};

use super::fen::piece_char;

/// Plain-text board: Black's back rank on top, rank digits on the left,
/// a river marker between ranks 5 and 4, file letters underneath.
pub fn render_board(state: &GameState) -> String {
    let board = state.board();
    let mut out = String::new();
    for rank in (0..10u8).rev() {
        out.push_str(&format!("{rank} "));
        for file in 0..9u8 {
            let glyph = board
                .get(Square::new(file, rank).unwrap())
                .map(piece_char)
                .unwrap_or('.');
            out.push(' ');
            out.push(glyph);
        }
        out.push('\n');
        if rank == 5 {
            out.push_str("   ~~~~~ river ~~~~~\n");
        }
    }
    out.push_str("   a b c d e f g h i\n");
    out
}
