//! AlphaZero-style Xiangqi engine and training harness.
//!
//! - [`rules`]: board, legal moves, adjudication, perft
//! - [`notation`]: FEN, ICCS moves, game records, text rendering
//! - [`encoding`]: 10x9x15 input planes and the 8100-way action index
//! - [`evaluator`]: policy-value evaluators, the trainable dual-head model, Adam
//! - [`mcts`]: PUCT tree search
//! - [`selfplay`]: game generation, outcome assignment, training iterations, matches
//! - [`corpus`]: game-record ingestion, validation and dataset export

pub mod corpus;
pub mod encoding;
pub mod evaluator;
pub mod mcts;
pub mod notation;
pub mod rules;
pub mod selfplay;
