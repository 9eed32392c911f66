//! Network input and action-space encodings.
//!
//! Planes are a 10x9x15 binary tensor laid out rank-major, then file, then
//! channel. Channels 0..7 hold Red {General, Advisor, Elephant, Horse, Rook,
//! Cannon, Soldier}, channels 7..14 Black in the same order, and channel 14
//! is all ones when Red is to move and all zeros otherwise. Orientation is
//! absolute; the board is never flipped for Black.
//!
//! An action is `from_index * 90 + to_index`, giving 8100 slots of which the
//! 90 with `from == to` can never be legal.

use thiserror::Error;

use crate::rules::{Color, GameState, Move, Piece, Square};

pub const RANKS: usize = 10;
pub const FILES: usize = 9;
pub const CHANNELS: usize = 15;
pub const PLANE_LEN: usize = RANKS * FILES * CHANNELS;
pub const ACTION_COUNT: usize = Square::COUNT * Square::COUNT;
pub const SIDE_CHANNEL: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("action index {0} outside [0, 8099]")]
    OutOfRange(usize),
    #[error("action index {0} maps a square onto itself")]
    DegenerateAction(usize),
    #[error("mask selects no action")]
    NoLegalAction,
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Bit-packed 10x9x15 binary planes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PlaneTensor {
    bits: [u64; PLANE_LEN.div_ceil(64)],
}

impl std::fmt::Debug for PlaneTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PlaneTensor({} hot)", self.count_ones())
    }
}

impl PlaneTensor {
    pub fn zeros() -> Self {
        PlaneTensor {
            bits: [0; PLANE_LEN.div_ceil(64)],
        }
    }

    #[inline]
    pub fn offset(rank: usize, file: usize, channel: usize) -> usize {
        (rank * FILES + file) * CHANNELS + channel
    }

    #[inline]
    pub fn get(&self, rank: usize, file: usize, channel: usize) -> f64 {
        let i = Self::offset(rank, file, channel);
        ((self.bits[i / 64] >> (i % 64)) & 1) as f64
    }

    #[inline]
    fn set(&mut self, rank: usize, file: usize, channel: usize) {
        let i = Self::offset(rank, file, channel);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Flat offsets of every 1.0 entry, ascending.
    pub fn hot_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            (0..64)
                .filter(move |b| (word >> b) & 1 == 1)
                .map(move |b| w * 64 + b)
        })
    }

    /// Dense values in storage order.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; PLANE_LEN];
        for i in self.hot_indices() {
            out[i] = 1.0;
        }
        out
    }

    /// Sum of a channel over the board.
    pub fn channel_sum(&self, channel: usize) -> f64 {
        (0..RANKS)
            .flat_map(|r| (0..FILES).map(move |f| (r, f)))
            .map(|(r, f)| self.get(r, f, channel))
            .sum()
    }
}

pub fn encode_state(state: &GameState) -> PlaneTensor {
    let mut planes = PlaneTensor::zeros();
    for (sq, piece) in state.board().pieces() {
        planes.set(sq.rank() as usize, sq.file() as usize, piece.index());
    }
    if state.side_to_move() == Color::Red {
        for r in 0..RANKS {
            for f in 0..FILES {
                planes.set(r, f, SIDE_CHANNEL);
            }
        }
    }
    planes
}

/// Index into the 8100-slot action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionIndex(u16);

impl ActionIndex {
    pub fn new(value: usize) -> Result<Self, EncodingError> {
        if value < ACTION_COUNT {
            Ok(ActionIndex(value as u16))
        } else {
            Err(EncodingError::OutOfRange(value))
        }
    }

    #[inline]
    pub fn value(self) -> usize {
        self.0 as usize
    }
}

#[inline]
pub fn encode_action(mv: Move) -> ActionIndex {
    ActionIndex((mv.from.index() * Square::COUNT + mv.to.index()) as u16)
}

pub fn decode_action(index: ActionIndex) -> Result<Move, EncodingError> {
    let from = Square::from_index(index.value() / Square::COUNT).unwrap();
    let to = Square::from_index(index.value() % Square::COUNT).unwrap();
    Move::new(from, to).ok_or(EncodingError::DegenerateAction(index.value()))
}

/// Probability vector over a fixed action space (8100 slots for the full game).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyVector(pub Vec<f64>);

impl PolicyVector {
    pub fn uniform(len: usize) -> Self {
        PolicyVector(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn legal_mask(state: &GameState) -> Vec<bool> {
    let mut mask = vec![false; ACTION_COUNT];
    for mv in state.legal_moves() {
        mask[encode_action(mv).value()] = true;
    }
    mask
}

/// Renormalizes `policy` over the entries where `mask` is true. A zero
/// masked-in mass falls back to uniform over the mask.
pub fn mask_and_normalize(
    policy: &PolicyVector,
    mask: &[bool],
) -> Result<PolicyVector, EncodingError> {
    if policy.len() != mask.len() {
        return Err(EncodingError::LengthMismatch {
            expected: mask.len(),
            actual: policy.len(),
        });
    }
    let selected: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect();
    let weights = normalize_over(policy.as_slice(), &selected)?;
    let mut out = vec![0.0; policy.len()];
    for (&i, w) in selected.iter().zip(weights) {
        out[i] = w;
    }
    Ok(PolicyVector(out))
}

/// Normalized weights for the listed indices, in the listed order.
pub fn normalize_over(policy: &[f64], indices: &[usize]) -> Result<Vec<f64>, EncodingError> {
    if indices.is_empty() {
        return Err(EncodingError::NoLegalAction);
    }
    let mass: f64 = indices.iter().map(|&i| policy[i].max(0.0)).sum();
    if mass > 0.0 && mass.is_finite() {
        Ok(indices.iter().map(|&i| policy[i].max(0.0) / mass).collect())
    } else {
        let u = 1.0 / indices.len() as f64;
        Ok(vec![u; indices.len()])
    }
}

/// Rebuilds the (history-free) position the planes describe.
pub fn decode_state(planes: &PlaneTensor) -> Option<GameState> {
    let mut board = crate::rules::Board::empty();
    for r in 0..RANKS {
        for f in 0..FILES {
            let mut found = None;
            for ch in 0..SIDE_CHANNEL {
                if planes.get(r, f, ch) == 1.0 {
                    if found.is_some() {
                        return None;
                    }
                    found = Piece::from_index(ch);
                }
            }
            board.set(Square::new(f as u8, r as u8).unwrap(), found);
        }
    }
    let side = if planes.get(0, 0, SIDE_CHANNEL) == 1.0 {
        Color::Red
    } else {
        Color::Black
    };
    GameState::from_board(board, side).ok()
}
