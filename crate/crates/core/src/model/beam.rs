use super::network::{parent_action, Choices, DecoderState, Model};
use super::tape::Tape;
use super::ModelError;
use crate::scalar::Scalar;
use crate::transition::{Action, FrontierState};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub actions: Vec<Action>,
    /// Total log-probability.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeamOutput {
    /// Complete derivations, best first.
    pub hypotheses: Vec<Hypothesis>,
    /// Set when no derivation completed.
    pub diagnostic: Option<String>,
}

struct Live<'g> {
    frontier: FrontierState<'g>,
    state: DecoderState,
    prev: Option<Action>,
    score: f64,
}

/// Grammar-constrained beam search; every returned sequence is a complete
/// derivation.
pub fn beam_search<T: Scalar>(
    model: &Model<T>,
    nl: &[String],
    beam: usize,
    max_steps: usize,
) -> Result<BeamOutput, ModelError> {
    if beam == 0 {
        return Err(ModelError::Config("beam must be >= 1".into()));
    }
    let mut tape = Tape::new(&model.params);
    let enc = model.encode(&mut tape, nl)?;
    let init = model.initial_state(&mut tape, &enc);
    let mut live = vec![Live {
        frontier: FrontierState::new(&model.grammar, model.config.traversal),
        state: init,
        prev: None,
        score: 0.0,
    }];
    let mut done: Vec<Hypothesis> = Vec::new();
    for _ in 0..max_steps {
        if live.is_empty() || done.len() >= beam {
            break;
        }
        let mut candidates: Vec<(usize, Action, f64, DecoderState)> = Vec::new();
        for (h, hyp) in live.iter().enumerate() {
            let choices = Choices::from_valid(&hyp.frontier.valid_actions()?);
            let parent = parent_action(&hyp.frontier);
            let (next, heads) = model.decode_step(
                &mut tape,
                &hyp.state,
                hyp.prev.as_ref(),
                parent.as_ref(),
                &enc,
                &choices,
            );
            let mut dist: Vec<(Action, f64)> = model
                .distribution(&tape, &heads, &enc)
                .into_iter()
                .map(|(a, p)| (a, p.as_f64()))
                .filter(|(_, p)| *p > 0.0)
                .collect();
            dist.sort_by(|a, b| b.1.total_cmp(&a.1));
            for (a, p) in dist.into_iter().take(beam) {
                candidates.push((h, a, hyp.score + p.ln(), next));
            }
        }
        candidates.sort_by(|a, b| b.2.total_cmp(&a.2));
        let mut next_live = Vec::with_capacity(beam);
        for (h, action, score, state) in candidates {
            if next_live.len() + done.len() >= beam {
                break;
            }
            let mut frontier = live[h].frontier.clone();
            frontier.apply(action.clone())?;
            if frontier.is_complete() {
                done.push(Hypothesis {
                    actions: frontier.steps().iter().map(|s| s.action.clone()).collect(),
                    score,
                });
            } else {
                next_live.push(Live {
                    frontier,
                    state,
                    prev: Some(action),
                    score,
                });
            }
        }
        live = next_live;
    }
    done.sort_by(|a, b| b.score.total_cmp(&a.score));
    let diagnostic = done
        .is_empty()
        .then(|| format!("no complete derivation within {max_steps} steps"));
    Ok(BeamOutput {
        hypotheses: done,
        diagnostic,
    })
}

/// Picks the most probable legal action at each step.
pub fn greedy_decode<T: Scalar>(
    model: &Model<T>,
    nl: &[String],
) -> Result<Option<Vec<Action>>, ModelError> {
    let mut tape = Tape::new(&model.params);
    let enc = model.encode(&mut tape, nl)?;
    let mut state = model.initial_state(&mut tape, &enc);
    let mut frontier = FrontierState::new(&model.grammar, model.config.traversal);
    let mut prev: Option<Action> = None;
    for _ in 0..model.config.max_decode_steps {
        let choices = Choices::from_valid(&frontier.valid_actions()?);
        let parent = parent_action(&frontier);
        let (next, heads) = model.decode_step(
            &mut tape,
            &state,
            prev.as_ref(),
            parent.as_ref(),
            &enc,
            &choices,
        );
        let dist = model.distribution(&tape, &heads, &enc);
        let mut best = 0;
        for (i, (_, p)) in dist.iter().enumerate() {
            if *p > dist[best].1 {
                best = i;
            }
        }
        let action = dist[best].0.clone();
        frontier.apply(action.clone())?;
        if frontier.is_complete() {
            return Ok(Some(
                frontier.steps().iter().map(|s| s.action.clone()).collect(),
            ));
        }
        prev = Some(action);
        state = next;
    }
    Ok(None)
}
