//! Attentional BiLSTM encoder and grammar-constrained LSTM decoder.

use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamSet, Tensor, TensorRecord};
use super::tape::{Tape, Var};
use super::ModelError;
use crate::asdl::Grammar;
use crate::ast::is_valid_token;
use crate::corpus::Example;
use crate::scalar::Scalar;
use crate::transition::{Action, FrontierState, Traversal, ValidActions};

pub const UNK: usize = 0;
/// Generation-vocabulary slot that closes a primitive multiple field.
pub const REDUCE_TOKEN: usize = 1;
/// Rule slot for Reduce on composite fields; constructor `c` is rule `c + 1`.
pub const REDUCE_RULE: usize = 0;

const CHECKPOINT_FORMAT: &str = "seq2tree-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub action_dim: usize,
    pub hidden: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beam: usize,
    pub batch_size: usize,
    /// Global gradient-norm bound.
    pub clip: f64,
    pub max_decode_steps: usize,
    pub traversal: Traversal,
    /// Training examples decoded each epoch to report train EM; 0 skips it.
    pub train_em_sample: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 32,
            action_dim: 32,
            hidden: 64,
            seed: 1,
            learning_rate: 1e-3,
            epochs: 30,
            beam: 5,
            batch_size: 10,
            clip: 5.0,
            max_decode_steps: 100,
            traversal: Traversal::Preorder,
            train_em_sample: 100,
        }
    }
}

impl ModelConfig {
    /// Embeddings 128/128 and hidden 256.
    pub fn large() -> Self {
        ModelConfig {
            word_dim: 128,
            action_dim: 128,
            hidden: 256,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let sizes = [
            ("word_dim", self.word_dim),
            ("action_dim", self.action_dim),
            ("hidden", self.hidden),
            ("beam", self.beam),
            ("batch_size", self.batch_size),
            ("max_decode_steps", self.max_decode_steps),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.clip > 0.0) {
            return Err(ModelError::Config(
                "learning_rate and clip must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// NL words and generatable tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    nl: Vec<String>,
    tokens: Vec<String>,
    nl_index: HashMap<String, usize>,
    token_index: HashMap<String, usize>,
}

impl Vocab {
    /// `nl` and `tokens` exclude the reserved entries.
    pub fn new(nl: Vec<String>, tokens: Vec<String>) -> Self {
        let mut all_nl = vec!["<unk>".to_string()];
        all_nl.extend(nl);
        let mut all_tokens = vec!["<unk>".to_string(), "<reduce>".to_string()];
        all_tokens.extend(tokens);
        let index = |v: &[String]| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Vocab {
            nl_index: index(&all_nl),
            token_index: index(&all_tokens),
            nl: all_nl,
            tokens: all_tokens,
        }
    }

    /// Sorted inventories of the training NL words and GenToken values.
    pub fn build(examples: &[Example]) -> Self {
        let mut nl = BTreeSet::new();
        let mut tokens = BTreeSet::new();
        for e in examples {
            nl.extend(e.nl.iter().cloned());
            for a in &e.actions {
                if let Action::GenToken(v) = a {
                    tokens.insert(v.clone());
                }
            }
        }
        Vocab::new(nl.into_iter().collect(), tokens.into_iter().collect())
    }

    pub fn nl_id(&self, word: &str) -> usize {
        self.nl_index.get(word).copied().unwrap_or(UNK)
    }

    /// Id of a generatable token, never [`UNK`] or [`REDUCE_TOKEN`].
    pub fn token_id(&self, token: &str) -> Option<usize> {
        self.token_index
            .get(token)
            .copied()
            .filter(|&i| i > REDUCE_TOKEN)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn nl_len(&self) -> usize {
        self.nl.len()
    }

    pub fn token_len(&self) -> usize {
        self.tokens.len()
    }

    fn nl_words(&self) -> &[String] {
        &self.nl[1..]
    }

    fn token_words(&self) -> &[String] {
        &self.tokens[2..]
    }
}

/// Legal next actions in model terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choices {
    /// Rule ids, sorted.
    Rules(Vec<usize>),
    Tokens {
        reduce: bool,
    },
}

impl Choices {
    pub fn from_valid(valid: &ValidActions<'_>) -> Self {
        if valid.gen_token {
            return Choices::Tokens {
                reduce: valid.reduce,
            };
        }
        let mut ids: Vec<usize> = valid.constructors.iter().map(|&c| c + 1).collect();
        if valid.reduce {
            ids.insert(0, REDUCE_RULE);
        }
        Choices::Rules(ids)
    }
}

/// Encoder output for one input.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub tokens: Vec<String>,
    pub z: Vec<Var>,
    /// Input positions whose token may be copied.
    pub copyable: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct DecoderState {
    pub h: Var,
    pub c: Var,
    /// Attentional vector, tanh-bounded.
    pub att: Var,
}

/// Per-step output heads restricted to the legal choices.
#[derive(Debug, Clone)]
pub enum StepHeads {
    Rules {
        ids: Vec<usize>,
        log_probs: Var,
    },
    Tokens {
        gen_ids: Vec<usize>,
        gen_log_probs: Option<Var>,
        /// Log weights of (generate, copy), each 0 when the other side is empty.
        gate: (Option<Var>, Option<Var>),
        copy_log_probs: Option<Var>,
    },
}

#[derive(Debug, Clone, Copy)]
struct Ids {
    word_emb: ParamId,
    enc_fwd_w: ParamId,
    enc_fwd_b: ParamId,
    enc_bwd_w: ParamId,
    enc_bwd_b: ParamId,
    init_w: ParamId,
    init_b: ParamId,
    dec_w: ParamId,
    dec_b: ParamId,
    att_w: ParamId,
    comb_w: ParamId,
    rule_emb: ParamId,
    rule_w: ParamId,
    token_emb: ParamId,
    token_w: ParamId,
    gate_w: ParamId,
    gate_b: ParamId,
    copy_w: ParamId,
}

impl Ids {
    fn lookup<T: Scalar>(p: &ParamSet<T>) -> Result<Self, ModelError> {
        let get = |n: &str| {
            p.id(n)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing tensor {n}")))
        };
        Ok(Ids {
            word_emb: get("word_emb")?,
            enc_fwd_w: get("enc_fwd.w")?,
            enc_fwd_b: get("enc_fwd.b")?,
            enc_bwd_w: get("enc_bwd.w")?,
            enc_bwd_b: get("enc_bwd.b")?,
            init_w: get("init.w")?,
            init_b: get("init.b")?,
            dec_w: get("dec.w")?,
            dec_b: get("dec.b")?,
            att_w: get("att.w")?,
            comb_w: get("comb.w")?,
            rule_emb: get("rule_emb")?,
            rule_w: get("rule.w")?,
            token_emb: get("token_emb")?,
            token_w: get("token.w")?,
            gate_w: get("gate.w")?,
            gate_b: get("gate.b")?,
            copy_w: get("copy.w")?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub grammar: Grammar,
    pub params: ParamSet<T>,
    ids: Ids,
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, grammar: Grammar, vocab: Vocab) -> Result<Self, ModelError> {
        config.validate()?;
        let (w, a, h) = (config.word_dim, config.action_dim, config.hidden);
        let rules = grammar.constructors().len() + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut p = ParamSet::new();
        let mut matrix = |p: &mut ParamSet<T>, name: &str, rows: usize, cols: usize| {
            let bound = 1.0 / (cols as f64).sqrt();
            p.add(name, Tensor::uniform(rows, cols, bound, &mut rng));
        };
        let lstm_bias = |p: &mut ParamSet<T>, name: &str| {
            let mut b = Tensor::zeros(4 * h, 1);
            b.data[h..2 * h].iter_mut().for_each(|v| *v = T::one());
            p.add(name, b);
        };
        matrix(&mut p, "word_emb", vocab.nl_len(), w);
        matrix(&mut p, "enc_fwd.w", 4 * h, w + h);
        lstm_bias(&mut p, "enc_fwd.b");
        matrix(&mut p, "enc_bwd.w", 4 * h, w + h);
        lstm_bias(&mut p, "enc_bwd.b");
        matrix(&mut p, "init.w", h, 2 * h);
        p.add("init.b", Tensor::zeros(h, 1));
        matrix(&mut p, "dec.w", 4 * h, 2 * a + 2 * h);
        lstm_bias(&mut p, "dec.b");
        matrix(&mut p, "att.w", 2 * h, h);
        matrix(&mut p, "comb.w", h, 3 * h);
        matrix(&mut p, "rule_emb", rules, a);
        matrix(&mut p, "rule.w", a, h);
        matrix(&mut p, "token_emb", vocab.token_len(), a);
        matrix(&mut p, "token.w", a, h);
        matrix(&mut p, "gate.w", 2, h);
        p.add("gate.b", Tensor::zeros(2, 1));
        matrix(&mut p, "copy.w", 2 * h, h);
        let ids = Ids::lookup(&p)?;
        Ok(Model {
            config,
            vocab,
            grammar,
            params: p,
            ids,
        })
    }

    /// Builds the vocabulary from `train` and initializes parameters.
    pub fn for_corpus(
        config: ModelConfig,
        grammar: Grammar,
        train: &[Example],
    ) -> Result<Self, ModelError> {
        let vocab = Vocab::build(train);
        Model::new(config, grammar, vocab)
    }

    fn lstm(
        &self,
        tape: &mut Tape<'_, T>,
        w: ParamId,
        b: ParamId,
        x: Var,
        h: Var,
        c: Var,
    ) -> (Var, Var) {
        let n = self.config.hidden;
        let xh = tape.concat(&[x, h]);
        let lin = tape.matvec(w, xh);
        let bias = tape.param(b);
        let gates = tape.add(lin, bias);
        let i = tape.slice(gates, 0, n);
        let i = tape.sigmoid(i);
        let f = tape.slice(gates, n, n);
        let f = tape.sigmoid(f);
        let o = tape.slice(gates, 2 * n, n);
        let o = tape.sigmoid(o);
        let u = tape.slice(gates, 3 * n, n);
        let u = tape.tanh(u);
        let fc = tape.mul(f, c);
        let iu = tape.mul(i, u);
        let c_new = tape.add(fc, iu);
        let tc = tape.tanh(c_new);
        (tape.mul(o, tc), c_new)
    }

    /// BiLSTM encodings `z_i = [forward_i ; backward_i]`.
    pub fn encode(&self, tape: &mut Tape<'_, T>, nl: &[String]) -> Result<Encoding, ModelError> {
        if nl.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let n = self.config.hidden;
        let emb: Vec<Var> = nl
            .iter()
            .map(|w| tape.row(self.ids.word_emb, self.vocab.nl_id(w)))
            .collect();
        let zero = tape.zeros(n);
        let (mut h, mut c) = (zero, zero);
        let mut fwd = Vec::with_capacity(nl.len());
        for &x in &emb {
            (h, c) = self.lstm(tape, self.ids.enc_fwd_w, self.ids.enc_fwd_b, x, h, c);
            fwd.push(h);
        }
        let (mut h, mut c) = (zero, zero);
        let mut bwd = vec![zero; nl.len()];
        for i in (0..nl.len()).rev() {
            (h, c) = self.lstm(tape, self.ids.enc_bwd_w, self.ids.enc_bwd_b, emb[i], h, c);
            bwd[i] = h;
        }
        let z = fwd
            .iter()
            .zip(&bwd)
            .map(|(&f, &b)| tape.concat(&[f, b]))
            .collect();
        let copyable = (0..nl.len()).filter(|&i| is_valid_token(&nl[i])).collect();
        Ok(Encoding {
            tokens: nl.to_vec(),
            z,
            copyable,
        })
    }

    pub fn initial_state(&self, tape: &mut Tape<'_, T>, enc: &Encoding) -> DecoderState {
        let n = self.config.hidden;
        let last = tape.slice(*enc.z.last().expect("non-empty"), 0, n);
        let first = tape.slice(enc.z[0], n, n);
        let summary = tape.concat(&[last, first]);
        let lin = tape.matvec(self.ids.init_w, summary);
        let b = tape.param(self.ids.init_b);
        let pre = tape.add(lin, b);
        let h = tape.tanh(pre);
        DecoderState {
            h,
            c: tape.zeros(n),
            att: tape.zeros(n),
        }
    }

    /// Embedding of an action fed back into the decoder.
    fn action_embedding(&self, tape: &mut Tape<'_, T>, action: Option<&Action>) -> Var {
        match action {
            None => tape.zeros(self.config.action_dim),
            Some(Action::Reduce) => tape.row(self.ids.rule_emb, REDUCE_RULE),
            Some(Action::ApplyRule(c)) => {
                let id = self
                    .grammar
                    .constructor_id(c)
                    .map_or(REDUCE_RULE, |i| i + 1);
                tape.row(self.ids.rule_emb, id)
            }
            Some(Action::GenToken(v)) => {
                let id = self.vocab.token_id(v).unwrap_or(UNK);
                tape.row(self.ids.token_emb, id)
            }
        }
    }

    /// One decoder step: new state and heads over `choices`.
    pub fn decode_step(
        &self,
        tape: &mut Tape<'_, T>,
        state: &DecoderState,
        prev: Option<&Action>,
        parent: Option<&Action>,
        enc: &Encoding,
        choices: &Choices,
    ) -> (DecoderState, StepHeads) {
        let e_prev = self.action_embedding(tape, prev);
        let p_t = self.action_embedding(tape, parent);
        let x = tape.concat(&[e_prev, state.att, p_t]);
        let (h, c) = self.lstm(tape, self.ids.dec_w, self.ids.dec_b, x, state.h, state.c);
        let u = tape.matvec(self.ids.att_w, h);
        let scores = tape.dots(&enc.z, u);
        let weights = tape.softmax(scores);
        let ctx = tape.weighted_sum(&enc.z, weights);
        let ch = tape.concat(&[ctx, h]);
        let pre = tape.matvec(self.ids.comb_w, ch);
        let att = tape.tanh(pre);
        let heads = match choices {
            Choices::Rules(ids) => {
                let q = tape.matvec(self.ids.rule_w, att);
                let logits = tape.matvec(self.ids.rule_emb, q);
                let sel = tape.gather(logits, ids);
                StepHeads::Rules {
                    ids: ids.clone(),
                    log_probs: tape.log_softmax(sel),
                }
            }
            Choices::Tokens { reduce } => {
                let mut gen_ids: Vec<usize> = Vec::with_capacity(self.vocab.token_len());
                if *reduce {
                    gen_ids.push(REDUCE_TOKEN);
                }
                gen_ids.extend(REDUCE_TOKEN + 1..self.vocab.token_len());
                let gen_log_probs = (!gen_ids.is_empty()).then(|| {
                    let q = tape.matvec(self.ids.token_w, att);
                    let logits = tape.matvec(self.ids.token_emb, q);
                    let sel = tape.gather(logits, &gen_ids);
                    tape.log_softmax(sel)
                });
                let copy_log_probs = (!enc.copyable.is_empty()).then(|| {
                    let q = tape.matvec(self.ids.copy_w, att);
                    let scores = tape.dots(&enc.z, q);
                    let sel = tape.gather(scores, &enc.copyable);
                    tape.log_softmax(sel)
                });
                let gate = if gen_log_probs.is_some() && copy_log_probs.is_some() {
                    let lin = tape.matvec(self.ids.gate_w, att);
                    let b = tape.param(self.ids.gate_b);
                    let logits = tape.add(lin, b);
                    let g = tape.log_softmax(logits);
                    (Some(tape.pick(g, 0)), Some(tape.pick(g, 1)))
                } else {
                    (None, None)
                };
                StepHeads::Tokens {
                    gen_ids,
                    gen_log_probs,
                    gate,
                    copy_log_probs,
                }
            }
        };
        (DecoderState { h, c, att }, heads)
    }

    /// Log-probability of `gold` under the heads, as a differentiable scalar.
    pub fn gold_log_prob(
        &self,
        tape: &mut Tape<'_, T>,
        heads: &StepHeads,
        enc: &Encoding,
        gold: &Action,
    ) -> Option<Var> {
        match heads {
            StepHeads::Rules { ids, log_probs } => {
                let rule = match gold {
                    Action::Reduce => REDUCE_RULE,
                    Action::ApplyRule(c) => self.grammar.constructor_id(c)? + 1,
                    Action::GenToken(_) => return None,
                };
                let pos = ids.iter().position(|&r| r == rule)?;
                Some(tape.pick(*log_probs, pos))
            }
            StepHeads::Tokens {
                gen_ids,
                gen_log_probs,
                gate,
                copy_log_probs,
            } => {
                let mut terms = Vec::new();
                let gen_id = match gold {
                    Action::Reduce => Some(REDUCE_TOKEN),
                    Action::GenToken(v) => self.vocab.token_id(v),
                    Action::ApplyRule(_) => return None,
                };
                if let (Some(id), Some(lp)) = (gen_id, gen_log_probs) {
                    if let Some(pos) = gen_ids.iter().position(|&g| g == id) {
                        let term = tape.pick(*lp, pos);
                        terms.push(match gate.0 {
                            Some(g) => tape.add(g, term),
                            None => term,
                        });
                    }
                }
                if let (Action::GenToken(v), Some(lp)) = (gold, copy_log_probs) {
                    for (k, &i) in enc.copyable.iter().enumerate() {
                        if enc.tokens[i] == *v {
                            let term = tape.pick(*lp, k);
                            terms.push(match gate.1 {
                                Some(g) => tape.add(g, term),
                                None => term,
                            });
                        }
                    }
                }
                match terms.len() {
                    0 => None,
                    1 => Some(terms[0]),
                    _ => {
                        let all = tape.concat(&terms);
                        Some(tape.log_sum_exp(all))
                    }
                }
            }
        }
    }

    /// Probabilities of every legal action; generated and copied mass for the
    /// same token is merged.
    pub fn distribution(
        &self,
        tape: &Tape<'_, T>,
        heads: &StepHeads,
        enc: &Encoding,
    ) -> Vec<(Action, T)> {
        match heads {
            StepHeads::Rules { ids, log_probs } => ids
                .iter()
                .zip(tape.value(*log_probs))
                .map(|(&r, &lp)| {
                    let action = if r == REDUCE_RULE {
                        Action::Reduce
                    } else {
                        Action::ApplyRule(self.grammar.constructors()[r - 1].name.clone())
                    };
                    (action, lp.exp())
                })
                .collect(),
            StepHeads::Tokens {
                gen_ids,
                gen_log_probs,
                gate,
                copy_log_probs,
            } => {
                let weight = |g: Option<Var>| g.map_or(T::one(), |g| tape.scalar(g).exp());
                let mut out: Vec<(Action, T)> = Vec::new();
                let mut index: HashMap<String, usize> = HashMap::new();
                if let Some(lp) = gen_log_probs {
                    let w = weight(gate.0);
                    for (&id, &l) in gen_ids.iter().zip(tape.value(*lp)) {
                        let action = if id == REDUCE_TOKEN {
                            Action::Reduce
                        } else {
                            index.insert(self.vocab.token(id).to_string(), out.len());
                            Action::GenToken(self.vocab.token(id).to_string())
                        };
                        out.push((action, w * l.exp()));
                    }
                }
                if let Some(lp) = copy_log_probs {
                    let w = weight(gate.1);
                    for (&i, &l) in enc.copyable.iter().zip(tape.value(*lp)) {
                        let p = w * l.exp();
                        match index.get(&enc.tokens[i]) {
                            Some(&k) => out[k].1 += p,
                            None => {
                                index.insert(enc.tokens[i].clone(), out.len());
                                out.push((Action::GenToken(enc.tokens[i].clone()), p));
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Runs encoder and decoder over a fixed prefix of actions and returns
    /// the distribution for the next one.
    pub fn next_distribution(
        &self,
        nl: &[String],
        prefix: &[Action],
    ) -> Result<Vec<(Action, T)>, ModelError> {
        let mut tape = Tape::new(&self.params);
        let enc = self.encode(&mut tape, nl)?;
        let mut state = self.initial_state(&mut tape, &enc);
        let mut frontier = FrontierState::new(&self.grammar, self.config.traversal);
        let mut prev: Option<Action> = None;
        let mut out = Vec::new();
        for t in 0..=prefix.len() {
            let valid = frontier.valid_actions()?;
            let parent = parent_action(&frontier);
            let (next, heads) = self.decode_step(
                &mut tape,
                &state,
                prev.as_ref(),
                parent.as_ref(),
                &enc,
                &Choices::from_valid(&valid),
            );
            if t == prefix.len() {
                out = self.distribution(&tape, &heads, &enc);
                break;
            }
            frontier.apply(prefix[t].clone())?;
            prev = Some(prefix[t].clone());
            state = next;
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> String {
        let record = CheckpointRecord {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            precision: precision_name::<T>().to_string(),
            config: self.config.clone(),
            grammar: self.grammar.to_text(),
            nl_vocab: self.vocab.nl_words().to_vec(),
            token_vocab: self.vocab.token_words().to_vec(),
            tensors: self.params.to_record(),
        };
        serde_json::to_string(&record).expect("checkpoint serializes")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, ModelError> {
        let record: CheckpointRecord =
            serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if record.format != CHECKPOINT_FORMAT || record.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                record.format, record.version
            )));
        }
        let grammar =
            Grammar::parse(&record.grammar).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let vocab = Vocab::new(record.nl_vocab, record.token_vocab);
        let params = ParamSet::from_record(&record.tensors).map_err(ModelError::Checkpoint)?;
        let ids = Ids::lookup(&params)?;
        let shape = Model::<T>::new(record.config.clone(), grammar.clone(), vocab.clone())?;
        for (name, t) in shape.params.iter() {
            let got = params.get(params.id(name).expect("looked up"));
            if (got.rows, got.cols) != (t.rows, t.cols) {
                return Err(ModelError::Checkpoint(format!(
                    "tensor {name} has the wrong shape"
                )));
            }
        }
        Ok(Model {
            config: record.config,
            vocab,
            grammar,
            params,
            ids,
        })
    }
}

fn precision_name<T: Scalar>() -> &'static str {
    if std::mem::size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

/// Scalar type a checkpoint was trained with (`f32` or `f64`).
pub fn checkpoint_precision(text: &str) -> Result<String, ModelError> {
    #[derive(Deserialize)]
    struct Header {
        #[serde(default)]
        precision: String,
    }
    let h: Header =
        serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    Ok(if h.precision.is_empty() {
        "f64".into()
    } else {
        h.precision
    })
}

/// Action of the ApplyRule owning the current frontier field.
pub fn parent_action(state: &FrontierState<'_>) -> Option<Action> {
    let owner = state.frontier()?.owner_step;
    (owner > 0).then(|| state.steps()[owner - 1].action.clone())
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    format: String,
    version: u32,
    #[serde(default)]
    precision: String,
    config: ModelConfig,
    grammar: String,
    nl_vocab: Vec<String>,
    token_vocab: Vec<String>,
    tensors: Vec<TensorRecord>,
}
