use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::beam::greedy_decode;
use super::network::{Choices, Model};
use super::optim::Adam;
use super::schedule::SamplingSchedule;
use super::tape::{Tape, Var};
use super::ModelError;
use crate::aploss::{step_weights, LossConfig};
use crate::corpus::Example;
use crate::scalar::Scalar;
use crate::transition::{Action, ActionStep, FrontierState, Traversal};

const SHUFFLE_STREAM: u64 = 1;
const SAMPLING_STREAM: u64 = 2;

/// A gold example replayed through the transition system.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub nl: Vec<String>,
    pub steps: Vec<ActionStep>,
    pub choices: Vec<Choices>,
}

impl Prepared {
    pub fn new(
        grammar: &crate::asdl::Grammar,
        example: &Example,
        traversal: Traversal,
    ) -> Result<Self, ModelError> {
        let actions = example.actions_for(grammar, traversal)?;
        let mut state = FrontierState::new(grammar, traversal);
        let mut choices = Vec::with_capacity(actions.len());
        for a in actions {
            choices.push(Choices::from_valid(&state.valid_actions()?));
            state.apply(a)?;
        }
        state.finish()?;
        Ok(Prepared {
            nl: example.nl.clone(),
            steps: state.steps().to_vec(),
            choices,
        })
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action.clone()).collect()
    }
}

/// How the previous-action input is chosen during training.
pub struct Feed<'a> {
    /// Probability of feeding the gold action.
    pub gold_probability: f64,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

impl Feed<'_> {
    pub fn teacher_forcing() -> Self {
        Feed {
            gold_probability: 1.0,
            rng: None,
        }
    }
}

pub struct ExampleLoss {
    pub loss: Var,
    pub log_probs: Vec<f64>,
    /// Whether the gold action was fed as input at steps 2..=T.
    pub fed_gold: Vec<bool>,
}

/// Weighted negative log-likelihood `-sum_t w_t log p_t` of one example.
pub fn example_loss<T: Scalar>(
    model: &Model<T>,
    tape: &mut Tape<'_, T>,
    ex: &Prepared,
    weights: &[T],
    feed: &mut Feed<'_>,
) -> Result<ExampleLoss, ModelError> {
    let enc = model.encode(tape, &ex.nl)?;
    let mut state = model.initial_state(tape, &enc);
    let mut prev: Option<Action> = None;
    let mut terms = Vec::with_capacity(ex.steps.len());
    let mut log_probs = Vec::with_capacity(ex.steps.len());
    let mut fed_gold = Vec::new();
    for (k, step) in ex.steps.iter().enumerate() {
        let parent = (step.parent > 0).then(|| &ex.steps[step.parent - 1].action);
        let (next, heads) =
            model.decode_step(tape, &state, prev.as_ref(), parent, &enc, &ex.choices[k]);
        let lp = model
            .gold_log_prob(tape, &heads, &enc, &step.action)
            .ok_or_else(|| ModelError::Unreachable {
                t: step.t,
                action: step.action.to_string(),
            })?;
        log_probs.push(tape.scalar(lp).as_f64());
        terms.push((lp, -weights[k]));
        if k + 1 < ex.steps.len() {
            let use_gold = match feed.rng.as_deref_mut() {
                Some(rng) if feed.gold_probability < 1.0 => {
                    rng.random::<f64>() < feed.gold_probability
                }
                _ => true,
            };
            fed_gold.push(use_gold);
            prev = Some(if use_gold {
                step.action.clone()
            } else {
                let dist = model.distribution(tape, &heads, &enc);
                let rng = feed.rng.as_deref_mut().expect("sampling needs an rng");
                sample(&dist, rng)
            });
        }
        state = next;
    }
    let loss = tape.linear_sum(&terms);
    Ok(ExampleLoss {
        loss,
        log_probs,
        fed_gold,
    })
}

fn sample<T: Scalar>(dist: &[(Action, T)], rng: &mut ChaCha8Rng) -> Action {
    let total: f64 = dist.iter().map(|(_, p)| p.as_f64()).sum();
    let mut u = rng.random::<f64>() * total;
    for (a, p) in dist {
        u -= p.as_f64();
        if u < 0.0 {
            return a.clone();
        }
    }
    dist.last().expect("non-empty distribution").0.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-example training loss.
    pub loss: f64,
    /// Exact match of greedy decoding on the first training examples.
    pub train_em: Option<f64>,
    pub gold_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_em\n");
        for e in &self.epochs {
            let em = e.train_em.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", e.epoch, e.loss, em));
        }
        out
    }
}

/// Minibatch Adam over `train` for `model.config.epochs` epochs.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train: &[Example],
    loss_cfg: &LossConfig<T>,
    schedule: SamplingSchedule,
) -> Result<TrainLog, ModelError> {
    train_with(model, train, loss_cfg, schedule, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<T: Scalar>(
    model: &mut Model<T>,
    train: &[Example],
    loss_cfg: &LossConfig<T>,
    schedule: SamplingSchedule,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainLog, ModelError> {
    schedule.validate().map_err(ModelError::Config)?;
    loss_cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let cfg = model.config.clone();
    let prepared = train
        .iter()
        .map(|e| Prepared::new(&model.grammar, e, cfg.traversal))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = prepared
        .iter()
        .map(|p| step_weights(&p.steps, loss_cfg).map(|w| w.weights))
        .collect::<Result<Vec<_>, _>>()?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut sampling_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sampling_rng.set_stream(SAMPLING_STREAM);
    let mut adam = Adam::new(&model.params, T::of(cfg.learning_rate));
    let mut grads = model.params.zero_grads();
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        let p = schedule.gold_probability(epoch, cfg.epochs);
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.fill_zero();
            for &i in batch {
                let mut tape = Tape::new(&model.params);
                let mut feed = Feed {
                    gold_probability: p,
                    rng: Some(&mut sampling_rng),
                };
                let out = example_loss(model, &mut tape, &prepared[i], &weights[i], &mut feed)?;
                let value = tape.scalar(out.loss).as_f64();
                if !value.is_finite() {
                    return Err(ModelError::Divergence {
                        epoch: epoch + 1,
                        step: b + 1,
                    });
                }
                total += value;
                tape.backward(out.loss, &mut grads);
            }
            grads.scale(T::one() / T::of(batch.len() as f64));
            if !grads.is_finite() {
                return Err(ModelError::Divergence {
                    epoch: epoch + 1,
                    step: b + 1,
                });
            }
            grads.clip(T::of(cfg.clip));
            adam.step(&mut model.params, &grads);
        }
        let sample = cfg.train_em_sample.min(prepared.len());
        let train_em = (sample > 0).then(|| {
            let hits = prepared[..sample]
                .iter()
                .filter(|p| {
                    greedy_decode(model, &p.nl)
                        .ok()
                        .flatten()
                        .is_some_and(|pred| pred == p.actions())
                })
                .count();
            hits as f64 / sample as f64
        });
        let entry = EpochLog {
            epoch: epoch + 1,
            loss: total / prepared.len() as f64,
            train_em,
            gold_probability: p,
        };
        on_epoch(&entry);
        log.epochs.push(entry);
    }
    Ok(log)
}
