use super::network::Model;
use super::tape::Tape;
use super::train::{example_loss, Feed, Prepared};
use super::ModelError;
use crate::aploss::{step_weights, LossConfig};
use crate::corpus::Example;

/// Finite-difference step.
pub const STEP: f64 = 1e-5;
/// Denominator floor so that near-zero gradients are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: (String, usize),
    /// Analytic and numeric values at the worst entry.
    pub worst_values: (f64, f64),
    pub checked: usize,
}

/// Compares analytic gradients of the training loss with central differences
/// over every parameter entry.
pub fn grad_check(
    model: &Model<f64>,
    example: &Example,
    loss_cfg: &LossConfig<f64>,
) -> Result<GradCheck, ModelError> {
    let prepared = Prepared::new(&model.grammar, example, model.config.traversal)?;
    let weights = step_weights(&prepared.steps, loss_cfg)?.weights;
    let loss_at = |m: &Model<f64>| -> Result<f64, ModelError> {
        let mut tape = Tape::new(&m.params);
        let out = example_loss(
            m,
            &mut tape,
            &prepared,
            &weights,
            &mut Feed::teacher_forcing(),
        )?;
        Ok(tape.scalar(out.loss))
    };
    let mut tape = Tape::new(&model.params);
    let out = example_loss(
        model,
        &mut tape,
        &prepared,
        &weights,
        &mut Feed::teacher_forcing(),
    )?;
    let mut grads = model.params.zero_grads();
    tape.backward(out.loss, &mut grads);

    let mut probe = model.clone();
    let mut result = GradCheck {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        worst_values: (0.0, 0.0),
        checked: 0,
    };
    let names: Vec<String> = model.params.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let id = model.params.id(&name).expect("own name");
        for k in 0..model.params.get(id).data.len() {
            let orig = model.params.get(id).data[k];
            probe.params.get_mut(id).data[k] = orig + STEP;
            let plus = loss_at(&probe)?;
            probe.params.get_mut(id).data[k] = orig - STEP;
            let minus = loss_at(&probe)?;
            probe.params.get_mut(id).data[k] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            let analytic = grads.get(id)[k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
            result.checked += 1;
            if rel > result.max_rel_error {
                result.max_rel_error = rel;
                result.worst = (name.clone(), k);
                result.worst_values = (analytic, numeric);
            }
        }
    }
    Ok(result)
}
