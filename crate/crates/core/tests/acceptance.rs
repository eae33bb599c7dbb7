#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seq2tree::aploss::{
    alpha_auto, ap_loss, cross_entropy, scaling_factor, Alpha, FactorMode, LossConfig,
};
use seq2tree::asdl::Grammar;
use seq2tree::ast::SurfaceSyntax;
use seq2tree::astvec::{ast2vec, displacement, vec2parents, vec_norm, Displacement, NodeVector};
use seq2tree::corpus::{
    generate_corpus, toy_grammar, toy_syntax, toy_templates, CorpusConfig, Dataset, Example,
};
use seq2tree::model::*;
use seq2tree::transition::{actions_to_ast, ast_to_actions, ActionStep, FrontierState, Traversal};
use seq2tree::{ast_to_code, code_to_ast, validate_ast, AstNode};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

/// Empirical outcomes that are printed but do not fail the run.
const REPORTED_ONLY: [usize; 1] = [9];

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const FIGURE_GRAMMAR: &str = "\
primitive identifier
root top
top = Top(mid body)
mid = Pair(inner left, triple right)
inner = Wrap(leafy x)
leafy = Leaf(identifier name)
triple = Triple(identifier a, identifier b, pairtok c)
pairtok = Two(identifier p, identifier q)
";

const FIGURE_CODE: &str = "( Top ( Pair ( Wrap ( Leaf n ) ) ( Triple a b ( Two p q ) ) ) )";

fn parents_of(steps: &[ActionStep]) -> Vec<Option<usize>> {
    steps.iter().map(|s| s.parent.checked_sub(1)).collect()
}

/// 10,000 mixed-cardinality trees of at most 200 nodes, as pre-order steps.
fn mixed_trees() -> Vec<Vec<ActionStep>> {
    let g = Grammar::parse(common::MIXED_GRAMMAR).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::with_capacity(10_000);
    while out.len() < 10_000 {
        let budget = rng.random_range(1..=150);
        let tree = common::random_tree(&g, &mut rng, budget);
        let steps = ast_to_actions(&g, &tree, Traversal::Preorder).unwrap();
        if steps.len() <= 200 {
            out.push(steps);
        }
    }
    out
}

fn reconstruction(trees: &[Vec<ActionStep>]) -> Outcome {
    let mut largest = 0;
    for (i, steps) in trees.iter().enumerate() {
        let vectors = ast2vec(steps).map_err(|e| e.to_string())?;
        let recovered = vec2parents(&vectors).map_err(|e| e.to_string())?;
        ensure!(
            recovered == parents_of(steps),
            "tree {i}: parent relation differs"
        );
        let distinct: HashSet<_> = vectors.iter().collect();
        ensure!(
            distinct.len() == vectors.len(),
            "tree {i}: duplicate vectors"
        );
        largest = largest.max(steps.len());
    }
    Ok(format!("{} trees, largest {largest} nodes", trees.len()))
}

fn norm_monotonicity(trees: &[Vec<ActionStep>]) -> Outcome {
    let mut pairs = 0usize;
    for (i, steps) in trees.iter().enumerate() {
        let vectors = ast2vec(steps).map_err(|e| e.to_string())?;
        for (child, parent) in parents_of(steps).into_iter().enumerate() {
            if let Some(p) = parent {
                ensure!(
                    vec_norm(vectors[p]) < vec_norm(vectors[child]),
                    "tree {i}: node {p} {} is not shorter than child {child} {}",
                    vectors[p],
                    vectors[child]
                );
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} parent-child pairs"))
}

fn figure_anchors() -> Outcome {
    let g = Grammar::parse(FIGURE_GRAMMAR).unwrap();
    let tree = code_to_ast(&g, &SurfaceSyntax::generic(&g), FIGURE_CODE).unwrap();
    let steps = ast_to_actions(&g, &tree, Traversal::Preorder).unwrap();
    let v = ast2vec(&steps).map_err(|e| e.to_string())?;
    ensure!(v[8] == NodeVector::new(3, 3), "node 8 is {}", v[8]);
    ensure!(v[9] == NodeVector::new(4, 3), "node 9 is {}", v[9]);
    let d = displacement(v[8], v[9]);
    ensure!(
        d == Displacement { depth: 1, horiz: 0 },
        "displacement {d:?}"
    );
    let parents = vec2parents(&v).map_err(|e| e.to_string())?;
    ensure!(
        parents[9] == Some(8) && parents[10] == Some(8),
        "parents of 9, 10: {:?}",
        &parents[9..]
    );
    Ok(format!(
        "node 8 {}, node 9 {}, 8 -> 9 ({}, {})",
        v[8], v[9], d.depth, d.horiz
    ))
}

fn scaling_anchors() -> Outcome {
    let f = scaling_factor(10.0f64, 2.0).map_err(|e| e.to_string())?;
    ensure!(f == 0.01, "f=10, gamma=2 gives {f}");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let f: f64 = rng.random_range(1.0..1000.0);
        ensure!(scaling_factor(f, 0.0).unwrap() == 1.0, "gamma=0 at f={f}");
    }
    let g = Grammar::parse(common::MIXED_GRAMMAR).unwrap();
    let ce_cfg = LossConfig::<f64>::cross_entropy();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let budget = rng.random_range(1..=60);
        let tree = common::random_tree(&g, &mut rng, budget);
        let steps = ast_to_actions(&g, &tree, Traversal::Preorder).unwrap();
        let lps: Vec<f64> = steps.iter().map(|_| -rng.random_range(0.0..10.0)).collect();
        let ap = ap_loss(&lps, &steps, &ce_cfg)
            .map_err(|e| e.to_string())?
            .total;
        let ce = cross_entropy(&lps);
        worst = worst.max((ap - ce).abs() / ce.abs().max(1.0));
    }
    ensure!(
        worst <= f64::EPSILON,
        "AP(0, 1) differs from CE by {worst:e}"
    );
    Ok(format!(
        "f^-2 at 10 = {f}; max |AP - CE| relative {worst:e} over 1000 vectors"
    ))
}

fn auto_alpha_anchors() -> Outcome {
    let cases: [(f64, f64, f64); 4] = [
        (0.4, 19.3, 1.96),
        (0.1, 31.5, 1.27),
        (0.4, 14.4, 1.75),
        (0.1, 23.2, 1.23),
    ];
    let mut shown = Vec::new();
    for (gamma, len, want) in cases {
        let got = alpha_auto(gamma, len);
        ensure!(
            (got - want).abs() <= 0.01,
            "gamma {gamma}, T {len}: {got:.4} vs {want}"
        );
        shown.push(format!("{got:.3}"));
    }
    Ok(shown.join(" "))
}

fn transition_round_trips() -> Outcome {
    let g = toy_grammar();
    let syntax = toy_syntax();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut steps_checked = 0usize;
    for i in 0..10_000 {
        let budget = rng.random_range(1..=60);
        let tree = common::random_tree(&g, &mut rng, budget);
        let code = ast_to_code(&tree, &syntax).map_err(|e| e.to_string())?;
        let parsed = code_to_ast(&g, &syntax, &code).map_err(|e| format!("tree {i}: {e}"))?;
        ensure!(parsed == tree, "tree {i}: code -> ast changed the tree");
        ensure!(
            ast_to_code(&parsed, &syntax).unwrap() == code,
            "tree {i}: code not stable"
        );
        for traversal in [Traversal::Preorder, Traversal::BreadthFirst] {
            let steps = ast_to_actions(&g, &tree, traversal).map_err(|e| e.to_string())?;
            let actions: Vec<_> = steps.iter().map(|s| s.action.clone()).collect();
            let back = actions_to_ast(&g, &actions, traversal).map_err(|e| e.to_string())?;
            ensure!(back == tree, "tree {i}: {traversal} round trip differs");
            let mut state = FrontierState::new(&g, traversal);
            for s in &steps {
                let valid = state.valid_actions().map_err(|e| e.to_string())?;
                ensure!(
                    valid.contains(&g, &s.action),
                    "tree {i} t={}: gold action not valid",
                    s.t
                );
                state.apply(s.action.clone()).map_err(|e| e.to_string())?;
                steps_checked += 1;
            }
        }
    }
    Ok(format!(
        "10000 trees x 2 traversals, {steps_checked} teacher-forcing steps valid"
    ))
}

fn corpus(n: usize, train: usize, dev: usize, seed: u64) -> Dataset {
    let cfg = CorpusConfig {
        n,
        seed,
        train_fraction: train as f64 / n as f64,
        dev_fraction: dev as f64 / n as f64,
        ..CorpusConfig::default()
    };
    generate_corpus(&toy_grammar(), &toy_templates(), &cfg).unwrap()
}

fn sized(hidden: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        word_dim: hidden,
        action_dim: hidden,
        hidden,
        seed,
        train_em_sample: 0,
        ..ModelConfig::default()
    }
}

fn gradients() -> Outcome {
    let data = corpus(12, 10, 1, 21);
    let train: Vec<Example> = data.train[..3].to_vec();
    let m =
        Model::<f64>::for_corpus(sized(8, 5), toy_grammar(), &train).map_err(|e| e.to_string())?;
    ensure!(
        m.vocab.nl_len() <= 30 && m.vocab.token_len() <= 30,
        "vocabulary too large"
    );
    let ap = LossConfig::ap(0.3, Alpha::Constant(2.0)).with_factor(FactorMode::AstvecNorm);
    let mut worst = 0.0f64;
    for (name, cfg) in [("CE", LossConfig::cross_entropy()), ("AP", ap)] {
        for ex in &train {
            let r = grad_check(&m, ex, &cfg).map_err(|e| e.to_string())?;
            ensure!(r.max_rel_error < 1e-4, "{name}: {r:?}");
            worst = worst.max(r.max_rel_error);
        }
    }
    Ok(format!(
        "max relative error {worst:.2e} over {} parameters",
        m.params.scalar_count()
    ))
}

fn grammatical_outputs() -> Outcome {
    let data = corpus(1000, 500, 0, 31);
    let mut cfg = sized(32, 3);
    cfg.epochs = 10;
    let g = toy_grammar();
    let mut m = Model::<f32>::for_corpus(cfg, g.clone(), &data.train).map_err(|e| e.to_string())?;
    train(
        &mut m,
        &data.train,
        &LossConfig::default(),
        SamplingSchedule::TeacherForcing,
    )
    .map_err(|e| e.to_string())?;
    ensure!(data.test.len() == 500, "{} test inputs", data.test.len());
    let syntax = toy_syntax();
    let (mut hyps, mut empty) = (0, 0);
    for (i, ex) in data.test.iter().enumerate() {
        let out =
            beam_search(&m, &ex.nl, 5, m.config.max_decode_steps).map_err(|e| e.to_string())?;
        if out.hypotheses.is_empty() {
            empty += 1;
            println!("    input {i}: {:?}", out.diagnostic);
        }
        for h in &out.hypotheses {
            let tree: AstNode = actions_to_ast(&g, &h.actions, Traversal::Preorder)
                .map_err(|e| format!("input {i}: {e}"))?;
            validate_ast(&g, &tree).map_err(|e| format!("input {i}: {e}"))?;
            ast_to_code(&tree, &syntax).map_err(|e| format!("input {i}: {e}"))?;
            hyps += 1;
        }
    }
    ensure!(empty == 0, "{empty} inputs without output");
    Ok(format!("500 inputs, {hyps} hypotheses, all valid"))
}

fn directional_experiment() -> Outcome {
    let data = corpus(1200, 1000, 100, 7);
    let g = toy_grammar();
    let syntax = toy_syntax();
    let run = |loss: &LossConfig<f32>, seed: u64| -> Result<[f64; 4], String> {
        let cfg = ModelConfig {
            seed,
            epochs: 30,
            beam: 5,
            train_em_sample: 0,
            ..ModelConfig::default()
        };
        let mut m =
            Model::<f32>::for_corpus(cfg, g.clone(), &data.train).map_err(|e| e.to_string())?;
        train(&mut m, &data.train, loss, SamplingSchedule::TeacherForcing)
            .map_err(|e| e.to_string())?;
        let (r, _) = evaluate_model(&m, &data.test, &syntax, 5).map_err(|e| e.to_string())?;
        let p = |pct| r.prefix_actions(pct).unwrap();
        Ok([p(10), p(20), p(50), r.em])
    };
    let ce = LossConfig::<f32>::cross_entropy();
    let ap = LossConfig::<f32>::ap(0.3, Alpha::Constant(2.0)).with_factor(FactorMode::AstvecNorm);
    let (mut wins, mut ce_em, mut ap_em) = (0, 0.0, 0.0);
    println!("    prefix-EM@10/20/50% on actions, then EM");
    for seed in 1..=5 {
        let c = run(&ce, seed)?;
        let a = run(&ap, seed)?;
        let show = |v: [f64; 4]| v.map(|x| format!("{x:.3}")).join(" ");
        println!("    seed {seed}: CE {} | AP {}", show(c), show(a));
        wins += usize::from(a[0] > c[0]);
        ce_em += c[3] / 5.0;
        ap_em += a[3] / 5.0;
    }
    let summary =
        format!("AP ahead on prefix@10% in {wins}/5 seeds; mean EM CE {ce_em:.3}, AP {ap_em:.3}");
    ensure!(wins >= 4, "{summary}");
    ensure!(ap_em >= ce_em - 0.01, "{summary}");
    Ok(summary)
}

fn schedule_sanity() -> Outcome {
    let data = corpus(30, 24, 3, 9);
    let mut cfg = sized(8, 4);
    cfg.epochs = 3;
    let fit = |s: SamplingSchedule| {
        let mut m = Model::<f64>::for_corpus(cfg.clone(), toy_grammar(), &data.train).unwrap();
        let log = train(&mut m, &data.train, &LossConfig::default(), s).unwrap();
        (log, m.params)
    };
    let (tf_log, tf_params) = fit(SamplingSchedule::TeacherForcing);
    let (fx_log, fx_params) = fit(SamplingSchedule::Fixed(1.0));
    ensure!(
        tf_log == fx_log && tf_params == fx_params,
        "Fixed(1) differs from teacher forcing"
    );
    let ed = SamplingSchedule::ExponentialDecay(0.99);
    for k in 0..100 {
        let p = ed.gold_probability(k, 100);
        ensure!(p == 0.99f64.powi(k as i32), "epoch {k}: {p}");
    }
    let (ed_log, _) = fit(ed);
    for (k, e) in ed_log.epochs.iter().enumerate() {
        ensure!(
            e.gold_probability == 0.99f64.powi(k as i32),
            "logged epoch {k}: {}",
            e.gold_probability
        );
    }
    Ok("Fixed(1) bitwise equal to teacher forcing; ED(0.99) gives 0.99^k".into())
}

fn main() -> ExitCode {
    let trees = mixed_trees();
    let criteria: Vec<Criterion> = vec![
        (
            "AST2Vec reconstruction",
            Box::new(|| reconstruction(&trees)),
        ),
        ("norm monotonicity", Box::new(|| norm_monotonicity(&trees))),
        ("figure anchors", Box::new(figure_anchors)),
        ("scaling-factor anchors", Box::new(scaling_anchors)),
        ("auto-alpha anchors", Box::new(auto_alpha_anchors)),
        ("transition round trips", Box::new(transition_round_trips)),
        ("gradient correctness", Box::new(gradients)),
        ("grammatical outputs", Box::new(grammatical_outputs)),
        ("directional experiment", Box::new(directional_experiment)),
        ("scheduled-sampling sanity", Box::new(schedule_sanity)),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) if REPORTED_ONLY.contains(&n) => {
                println!("criterion {n:>2} FAIL  {name} ({secs:.1}s, reported only): {detail}");
            }
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
