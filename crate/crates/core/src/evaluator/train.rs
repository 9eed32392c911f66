use thiserror::Error;

use crate::encoding::{ActionIndex, PlaneTensor};

use super::model::{loss, LossBreakdown, ModelParams, PolicyTarget};
use super::{AdamState, ModelError};

/// One supervised example: input planes, policy target, outcome `z` from the
/// side to move's perspective, and the legal actions used to mask the
/// policy when scoring accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub planes: PlaneTensor,
    pub target: PolicyTarget,
    pub z: f64,
    pub legal: Vec<ActionIndex>,
}

impl TrainingExample {
    pub fn input(&self) -> Vec<f64> {
        self.planes.to_dense()
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training examples")]
    EmptyDataset,
    #[error("batch size must be positive")]
    ZeroBatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Averages over one pass of the data, measured on the forward passes that
/// produced each update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochMetrics {
    pub loss: LossBreakdown,
    pub policy_accuracy: f64,
    pub value_mae: f64,
    pub examples: usize,
}

impl std::fmt::Display for EpochMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}, Policy Accuracy: {:.4}, Value MAE: {:.4}",
            self.loss, self.policy_accuracy, self.value_mae
        )
    }
}

/// Index of the largest entry of `policy` among `legal` (all entries when
/// `legal` is empty). Ties go to the lowest index.
pub(crate) fn masked_argmax(policy: &[f64], legal: &[ActionIndex]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    let mut consider = |i: usize| {
        let p = policy[i];
        match best {
            Some((b, bp)) if p < bp || (p == bp && i > b) => {}
            _ => best = Some((i, p)),
        }
    };
    if legal.is_empty() {
        (0..policy.len()).for_each(&mut consider);
    } else {
        legal.iter().for_each(|a| consider(a.value()));
    }
    best.map(|(i, _)| i).unwrap_or(0)
}

/// One pass over `examples` in order, in minibatches of `batch_size` whose
/// gradients are averaged before each Adam step.
pub fn train_epoch(
    params: &mut ModelParams,
    adam: &mut AdamState,
    examples: &[TrainingExample],
    batch_size: usize,
) -> Result<EpochMetrics, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if batch_size == 0 {
        return Err(TrainError::ZeroBatch);
    }
    let mut grads = params.zeros_like();
    let mut totals = LossBreakdown::default();
    let mut correct = 0usize;
    let mut abs_err = 0.0;
    for batch in examples.chunks(batch_size) {
        grads.fill_zero();
        let inputs: Vec<Vec<f64>> = batch.iter().map(TrainingExample::input).collect();
        let input_refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        let outputs = params.forward_batch(&input_refs)?;
        for (ex, (eval, _)) in batch.iter().zip(&outputs) {
            let l = loss(eval, &ex.target, ex.z);
            totals.policy_loss += l.policy_loss;
            totals.value_loss += l.value_loss;
            totals.total += l.total;
            if masked_argmax(eval.policy.as_slice(), &ex.legal) == ex.target.argmax().value() {
                correct += 1;
            }
            abs_err += (eval.value - ex.z).abs();
        }
        let items: Vec<_> = batch
            .iter()
            .zip(&outputs)
            .map(|(ex, (_, cache))| (cache, &ex.target, ex.z))
            .collect();
        params.backward_batch(&items, 1.0 / batch.len() as f64, &mut grads)?;
        adam.step(params, &grads)?;
    }
    let n = examples.len() as f64;
    Ok(EpochMetrics {
        loss: LossBreakdown {
            policy_loss: totals.policy_loss / n,
            value_loss: totals.value_loss / n,
            total: totals.total / n,
        },
        policy_accuracy: correct as f64 / n,
        value_mae: abs_err / n,
        examples: examples.len(),
    })
}

/// Accuracy and MAE of `params` on `examples` without updating.
pub fn evaluate_examples(
    params: &ModelParams,
    examples: &[TrainingExample],
) -> Result<EpochMetrics, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut totals = LossBreakdown::default();
    let mut correct = 0usize;
    let mut abs_err = 0.0;
    for ex in examples {
        let (eval, _) = params.forward(&ex.input())?;
        let l = loss(&eval, &ex.target, ex.z);
        totals.policy_loss += l.policy_loss;
        totals.value_loss += l.value_loss;
        totals.total += l.total;
        if masked_argmax(eval.policy.as_slice(), &ex.legal) == ex.target.argmax().value() {
            correct += 1;
        }
        abs_err += (eval.value - ex.z).abs();
    }
    let n = examples.len() as f64;
    Ok(EpochMetrics {
        loss: LossBreakdown {
            policy_loss: totals.policy_loss / n,
            value_loss: totals.value_loss / n,
            total: totals.total / n,
        },
        policy_accuracy: correct as f64 / n,
        value_mae: abs_err / n,
        examples: examples.len(),
    })
}
