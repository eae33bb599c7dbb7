//! Attentional encoder-decoder over transition-system actions.

pub mod beam;
pub mod gradcheck;
pub mod network;
pub mod optim;
pub mod params;
pub mod schedule;
pub mod tape;
pub mod train;

use thiserror::Error;

use crate::aploss::LossError;
use crate::ast::{ast_to_code, SurfaceSyntax};
use crate::corpus::Example;
use crate::metrics::{evaluate, EvalPair, EvalReport, MetricError};
use crate::scalar::Scalar;
use crate::transition::{actions_to_ast, TransitionError};

pub use beam::{beam_search, greedy_decode, BeamOutput, Hypothesis};
pub use gradcheck::{grad_check, GradCheck};
pub use network::{
    checkpoint_precision, Choices, DecoderState, Encoding, Model, ModelConfig, StepHeads, Vocab,
};
pub use optim::Adam;
pub use params::{Gradients, ParamId, ParamSet, Tensor};
pub use schedule::SamplingSchedule;
pub use tape::{Tape, Var};
pub use train::{example_loss, train, train_with, EpochLog, ExampleLoss, Feed, Prepared, TrainLog};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("gold action {action} at step {t} has zero probability under the model heads")]
    Unreachable { t: usize, action: String },
    #[error("non-finite loss at epoch {epoch}, batch {step}")]
    Divergence { epoch: usize, step: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One decoded test input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub nl: Vec<String>,
    pub code: Option<String>,
    pub score: Option<f64>,
}

/// Decodes every example with beam search and scores the top hypothesis.
pub fn evaluate_model<T: Scalar>(
    model: &Model<T>,
    examples: &[Example],
    syntax: &SurfaceSyntax,
    beam: usize,
) -> Result<(EvalReport, Vec<Prediction>), ModelError> {
    let mut pairs = Vec::with_capacity(examples.len());
    let mut predictions = Vec::with_capacity(examples.len());
    for ex in examples {
        let out = beam_search(model, &ex.nl, beam, model.config.max_decode_steps)?;
        let best = out.hypotheses.into_iter().next();
        let code = match &best {
            Some(h) => {
                let tree = actions_to_ast(&model.grammar, &h.actions, model.config.traversal)?;
                ast_to_code(&tree, syntax).ok()
            }
            None => None,
        };
        pairs.push(EvalPair {
            pred_code: code.clone(),
            pred_actions: best.as_ref().map(|h| h.actions.clone()).unwrap_or_default(),
            gold_code: ex.code.clone(),
            gold_actions: ex.actions_for(&model.grammar, model.config.traversal)?,
        });
        predictions.push(Prediction {
            nl: ex.nl.clone(),
            code,
            score: best.map(|h| h.score),
        });
    }
    Ok((evaluate(&pairs)?, predictions))
}
