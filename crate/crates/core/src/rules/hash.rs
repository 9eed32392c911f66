//! Tabulation hashing over (square, piece) plus a side-to-move key.
//!
//! Keys are produced at compile time by a splitmix64 stream from a fixed
//! seed, so hashes are stable across builds and platforms.

use super::types::{Color, Piece, Square};

const SEED: u64 = 0x5851_f42d_4c95_7f2d;

const fn splitmix64(state: u64) -> (u64, u64) {
    let next = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = next;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (next, z ^ (z >> 31))
}

const fn build_keys() -> ([[u64; 14]; 90], u64) {
    let mut table = [[0u64; 14]; 90];
    let mut state = SEED;
    let mut sq = 0;
    while sq < 90 {
        let mut p = 0;
        while p < 14 {
            let (next, value) = splitmix64(state);
            state = next;
            table[sq][p] = value;
            p += 1;
        }
        sq += 1;
    }
    let (_, side) = splitmix64(state);
    (table, side)
}

const KEYS: ([[u64; 14]; 90], u64) = build_keys();

#[inline]
pub(crate) fn piece_key(square: Square, piece: Piece) -> u64 {
    KEYS.0[square.index()][piece.index()]
}

/// XORed in when Black is to move.
#[inline]
pub(crate) fn side_key(side: Color) -> u64 {
    match side {
        Color::Red => 0,
        Color::Black => KEYS.1,
    }
}
