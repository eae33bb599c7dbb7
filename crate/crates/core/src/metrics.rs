//! Exact match, prefix exact match and corpus BLEU-4.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::ast::normalize_code;
use crate::transition::Action;

/// Prefix percentages reported in [`EvalReport`].
pub const PREFIX_PERCENTS: [u32; 4] = [5, 10, 20, 50];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("gold sequence is empty")]
    EmptyGold,
    #[error("percent must be in (0, 100], got {0}")]
    BadPercent(f64),
    #[error("{predictions} predictions for {references} references")]
    LengthMismatch {
        predictions: usize,
        references: usize,
    },
    #[error("empty corpus")]
    EmptyCorpus,
}

pub fn code_tokens(code: &str) -> Vec<String> {
    normalize_code(code)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

pub fn exact_match(pred: &str, gold: &str) -> bool {
    code_tokens(pred) == code_tokens(gold)
}

/// Number of leading gold elements compared at `percent`.
pub fn prefix_len(gold_len: usize, percent: f64) -> Result<usize, MetricError> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(MetricError::BadPercent(percent));
    }
    if gold_len == 0 {
        return Err(MetricError::EmptyGold);
    }
    let exact = percent * gold_len as f64 / 100.0;
    Ok(((exact - 1e-9).ceil() as usize).clamp(1, gold_len))
}

pub fn prefix_match<T: PartialEq>(
    pred: &[T],
    gold: &[T],
    percent: f64,
) -> Result<bool, MetricError> {
    let k = prefix_len(gold.len(), percent)?;
    Ok(pred.len() >= k && pred[..k] == gold[..k])
}

/// Corpus-level BLEU-4 with one reference per hypothesis and no smoothing.
pub fn bleu4<S: AsRef<str> + Eq + std::hash::Hash>(
    predictions: &[Vec<S>],
    references: &[Vec<S>],
) -> Result<f64, MetricError> {
    if predictions.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;
    for (hyp, reference) in predictions.iter().zip(references) {
        hyp_len += hyp.len();
        ref_len += reference.len();
        for n in 1..=4 {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(hyp, n) {
                matched[n - 1] += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
                total[n - 1] += count;
            }
        }
    }
    if matched.contains(&0) {
        return Ok(0.0);
    }
    let log_precision: f64 = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / 4.0;
    let brevity = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(brevity * log_precision.exp())
}

fn ngram_counts<S: Eq + std::hash::Hash>(tokens: &[S], n: usize) -> HashMap<&[S], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// One prediction paired with its gold answer. `pred_code` is `None` when
/// decoding produced no complete tree.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub pred_code: Option<String>,
    pub pred_actions: Vec<Action>,
    pub gold_code: String,
    pub gold_actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixScore {
    pub percent: u32,
    pub actions: f64,
    pub code: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub examples: usize,
    pub em: f64,
    pub prefix_em: Vec<PrefixScore>,
    pub bleu4: f64,
}

impl EvalReport {
    pub fn prefix_actions(&self, percent: u32) -> Option<f64> {
        self.prefix_em
            .iter()
            .find(|p| p.percent == percent)
            .map(|p| p.actions)
    }

    pub fn prefix_code(&self, percent: u32) -> Option<f64> {
        self.prefix_em
            .iter()
            .find(|p| p.percent == percent)
            .map(|p| p.code)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "examples  {}\nEM        {:.4}\nBLEU-4    {:.4}\n",
            self.examples, self.em, self.bleu4
        );
        out.push_str("prefix  actions  code\n");
        for p in &self.prefix_em {
            out.push_str(&format!(
                "{:>5}%  {:.4}   {:.4}\n",
                p.percent, p.actions, p.code
            ));
        }
        out
    }
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<EvalReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let n = pairs.len() as f64;
    let pred_tokens: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| p.pred_code.as_deref().map(code_tokens).unwrap_or_default())
        .collect();
    let gold_tokens: Vec<Vec<String>> = pairs.iter().map(|p| code_tokens(&p.gold_code)).collect();
    let em = pairs
        .iter()
        .filter(|p| {
            p.pred_code
                .as_deref()
                .is_some_and(|c| exact_match(c, &p.gold_code))
        })
        .count() as f64
        / n;
    let mut prefix_em = Vec::with_capacity(PREFIX_PERCENTS.len());
    for percent in PREFIX_PERCENTS {
        let pct = f64::from(percent);
        let mut actions = 0usize;
        let mut code = 0usize;
        for (i, p) in pairs.iter().enumerate() {
            actions += usize::from(prefix_match(&p.pred_actions, &p.gold_actions, pct)?);
            code += usize::from(prefix_match(&pred_tokens[i], &gold_tokens[i], pct)?);
        }
        prefix_em.push(PrefixScore {
            percent,
            actions: actions as f64 / n,
            code: code as f64 / n,
        });
    }
    Ok(EvalReport {
        examples: pairs.len(),
        em,
        prefix_em,
        bleu4: bleu4(&pred_tokens, &gold_tokens)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        code_tokens(s)
    }

    #[test]
    fn exact_match_cases() {
        assert!(exact_match("( len:i r0 )", "( len:i r0 )"));
        assert!(!exact_match("( len:i r0 )", "r0"));
        assert!(exact_match("(  len:i   r0 ) ", "( len:i r0 )"));
    }

    #[test]
    fn prefix_rules() {
        let gold: Vec<u32> = (0..10).collect();
        assert!(prefix_match(&gold, &gold, 37.0).unwrap());
        let mut last = gold.clone();
        last[9] = 99;
        assert!(prefix_match(&last, &gold, 50.0).unwrap());
        assert!(!prefix_match(&last, &gold, 100.0).unwrap());
        assert_eq!(prefix_len(10, 5.0).unwrap(), 1);
        assert_eq!(prefix_len(15, 20.0).unwrap(), 3);
        assert_eq!(prefix_len(19, 10.0).unwrap(), 2);
        assert!(!prefix_match(&gold[..1], &gold, 20.0).unwrap());
        assert_eq!(
            prefix_match::<u32>(&[], &[], 10.0),
            Err(MetricError::EmptyGold)
        );
        assert_eq!(
            prefix_match(&gold, &gold, 0.0),
            Err(MetricError::BadPercent(0.0))
        );
    }

    #[test]
    fn bleu_extremes() {
        let refs = vec![toks("( argmax $0 ( place:t $0 ) ( elevation:i $0 ) )")];
        assert!((bleu4(&refs, &refs).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(bleu4(&[toks("a b c d")], &[toks("e f g h")]).unwrap(), 0.0);
        assert_eq!(bleu4::<String>(&[], &[]), Err(MetricError::EmptyCorpus));
    }

    #[test]
    fn bleu_matches_reference_implementation() {
        // nltk.translate.bleu_score.corpus_bleu on the same corpus
        let refs = vec![
            toks("( len:i r0 )"),
            toks("( argmax $0 ( place:t $0 ) ( elevation:i $0 ) )"),
            toks("( and ( loc:t $0 c0 ) ( place:t $0 ) )"),
        ];
        let hyps = vec![
            toks("( len:i r0 )"),
            toks("( argmax $0 ( place:t $0 ) ( len:i $0 ) )"),
            toks("( and ( loc:t $0 c1 ) )"),
        ];
        let b = bleu4(&hyps, &refs).unwrap();
        assert!((b - 0.6066730739291444).abs() < 1e-12, "{b}");
        let mut rh = hyps.clone();
        let mut rr = refs.clone();
        rh.reverse();
        rr.reverse();
        assert!((bleu4(&rh, &rr).unwrap() - b).abs() < 1e-15);
    }

    #[test]
    fn report() {
        let gold = vec![
            Action::ApplyRule("Len".into()),
            Action::ApplyRule("Var".into()),
            Action::GenToken("r0".into()),
        ];
        let good = EvalPair {
            pred_code: Some("( len:i r0 )".into()),
            pred_actions: gold.clone(),
            gold_code: "( len:i r0 )".into(),
            gold_actions: gold.clone(),
        };
        let bad = EvalPair {
            pred_code: None,
            pred_actions: vec![],
            ..good.clone()
        };
        let r = evaluate(&[good, bad]).unwrap();
        assert_eq!(r.em, 0.5);
        assert_eq!(r.prefix_actions(10), Some(0.5));
        assert_eq!(r.prefix_code(50), Some(0.5));
        assert!(r.bleu4 > 0.0 && r.bleu4 < 1.0);
    }
}
