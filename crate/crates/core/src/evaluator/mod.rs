//! Policy-value evaluators: fixed baselines and a trainable dual-head model.

mod adam;
mod checkpoint;
mod model;
mod train;

use thiserror::Error;

use crate::encoding::{encode_action, encode_state, PolicyVector, ACTION_COUNT};
use crate::rules::{Color, GameState, PieceKind};

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{
    loss, softmax, ActivationCache, Dense, LossBreakdown, ModelConfig, ModelParams, PolicyTarget,
    LOG_CLAMP,
};
pub use train::{evaluate_examples, train_epoch, EpochMetrics, TrainError, TrainingExample};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Policy over the full action space (before legal masking) and a value in
/// [-1, 1] from the side to move's perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub policy: PolicyVector,
    pub value: f64,
}

pub trait Evaluator: Send + Sync {
    fn evaluate(&self, state: &GameState) -> Evaluation;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, state: &GameState) -> Evaluation {
        (**self).evaluate(state)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&self, state: &GameState) -> Evaluation {
        (**self).evaluate(state)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for std::sync::Arc<E> {
    fn evaluate(&self, state: &GameState) -> Evaluation {
        (**self).evaluate(state)
    }
}

/// Uniform policy over all 8100 actions, value 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformEvaluator;

impl Evaluator for UniformEvaluator {
    fn evaluate(&self, _state: &GameState) -> Evaluation {
        Evaluation {
            policy: PolicyVector::uniform(ACTION_COUNT),
            value: 0.0,
        }
    }
}

pub fn evaluate_uniform(state: &GameState) -> Evaluation {
    UniformEvaluator.evaluate(state)
}

/// Static material count with a capture-favouring prior.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaterialEvaluator;

/// Piece weight; soldiers are worth 2 once across the river.
pub fn material_weight(kind: PieceKind, crossed_river: bool) -> f64 {
    match kind {
        PieceKind::General => 0.0,
        PieceKind::Rook => 9.0,
        PieceKind::Cannon => 4.5,
        PieceKind::Horse => 4.0,
        PieceKind::Advisor | PieceKind::Elephant => 2.0,
        PieceKind::Soldier if crossed_river => 2.0,
        PieceKind::Soldier => 1.0,
    }
}

/// Red material minus Black material.
pub fn material_balance(state: &GameState) -> f64 {
    state
        .board()
        .pieces()
        .map(|(sq, p)| {
            let crossed = !p.color.owns_rank(sq.rank());
            let w = material_weight(p.kind, crossed);
            match p.color {
                Color::Red => w,
                Color::Black => -w,
            }
        })
        .sum()
}

impl Evaluator for MaterialEvaluator {
    fn evaluate(&self, state: &GameState) -> Evaluation {
        let delta = material_balance(state);
        let red_value = (delta / 12.0).tanh();
        let value = match state.side_to_move() {
            Color::Red => red_value,
            Color::Black => -red_value,
        };
        let moves = state.legal_moves();
        if moves.is_empty() {
            return Evaluation {
                policy: PolicyVector::uniform(ACTION_COUNT),
                value,
            };
        }
        let mut policy = vec![0.0; ACTION_COUNT];
        for mv in &moves {
            let weight = if state.board().get(mv.to).is_some() {
                2.0
            } else {
                1.0
            };
            policy[encode_action(*mv).value()] = weight;
        }
        let total: f64 = policy.iter().sum();
        for p in &mut policy {
            *p /= total;
        }
        Evaluation {
            policy: PolicyVector(policy),
            value,
        }
    }
}

pub fn evaluate_material(state: &GameState) -> Evaluation {
    MaterialEvaluator.evaluate(state)
}

/// Wraps trained parameters as an [`Evaluator`].
#[derive(Debug, Clone)]
pub struct ModelEvaluator {
    params: ModelParams,
}

impl ModelEvaluator {
    pub fn new(params: ModelParams) -> Result<Self, ModelError> {
        let config = params.config();
        let expected = ModelConfig::default();
        if config.input != expected.input {
            return Err(ModelError::ShapeMismatch {
                expected: expected.input,
                actual: config.input,
            });
        }
        if config.policy != expected.policy {
            return Err(ModelError::ShapeMismatch {
                expected: expected.policy,
                actual: config.policy,
            });
        }
        Ok(ModelEvaluator { params })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

impl Evaluator for ModelEvaluator {
    fn evaluate(&self, state: &GameState) -> Evaluation {
        let input = encode_state(state).to_dense();
        self.params
            .forward(&input)
            .expect("shape validated at construction")
            .0
    }
}
