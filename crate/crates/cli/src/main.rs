mod manifest;
mod settings;

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use seq2tree::aploss::{factor_curve, step_weights, Alpha, FactorMode, LossConfig};
use seq2tree::asdl::Grammar;
use seq2tree::ast::SurfaceSyntax;
use seq2tree::astvec::ast2vec;
use seq2tree::corpus::{
    dataset_stats, generate_corpus, read_jsonl, toy_grammar, toy_syntax, toy_templates,
    write_jsonl, CorpusConfig, Example,
};
use seq2tree::metrics::{evaluate, EvalPair};
use seq2tree::model::{
    checkpoint_precision, evaluate_model, train_with, Model, ModelConfig, SamplingSchedule,
};
use seq2tree::transition::{
    actions_to_text, ast_to_actions, parse_actions, replay, Action, Traversal,
};
use seq2tree::{ast_to_code, code_to_ast, Scalar};

use manifest::RunManifest;
use settings::{parse_config, parse_value};

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "seq2tree",
    version,
    about = "Grammar-constrained sequence-to-tree toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grammar utilities
    #[command(subcommand)]
    Grammar(GrammarCommand),
    /// Convert between code and action sequences
    Transduce(TransduceArgs),
    /// Tree position vectors of an action sequence as CSV; `node` counts from 0
    Vectorize(VectorizeArgs),
    /// Per-step loss weights of an action sequence as CSV
    Weights(WeightsArgs),
    /// Scaling factor f^-gamma over f = 1..tmax as CSV
    FactorCurve(FactorCurveArgs),
    /// Generate a synthetic NL/code corpus
    GenCorpus(GenCorpusArgs),
    /// Train a model
    Train(TrainArgs),
    /// Score predictions or a trained model
    Evaluate(EvaluateArgs),
}

#[derive(Subcommand)]
enum GrammarCommand {
    /// Parse a grammar file and print its constructor table
    Check { file: PathBuf },
}

#[derive(Args, Clone)]
struct GrammarArg {
    /// Grammar file; the built-in toy grammar when omitted
    #[arg(long)]
    grammar: Option<PathBuf>,
}

impl GrammarArg {
    fn load(&self) -> Result<(Grammar, SurfaceSyntax)> {
        match &self.grammar {
            None => Ok((toy_grammar(), toy_syntax())),
            Some(path) => {
                let text = read(path)?;
                let g = Grammar::parse(&text).with_context(|| format!("{}", path.display()))?;
                let syntax = SurfaceSyntax::generic(&g);
                Ok((g, syntax))
            }
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("direction").required(true).args(["to_actions", "to_code"])))]
struct TransduceArgs {
    /// Read code, print one action per line
    #[arg(long)]
    to_actions: bool,
    /// Read actions, print code
    #[arg(long)]
    to_code: bool,
    #[arg(long, default_value = "preorder")]
    traversal: Traversal,
    #[command(flatten)]
    grammar: GrammarArg,
    /// Input file, stdin when omitted or `-`
    input: Option<PathBuf>,
}

#[derive(Args)]
struct VectorizeArgs {
    actions: PathBuf,
    #[arg(long, default_value = "preorder")]
    traversal: Traversal,
    #[command(flatten)]
    grammar: GrammarArg,
}

#[derive(Args)]
struct WeightsArgs {
    actions: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    /// A positive number or `auto`
    #[arg(long, default_value = "2")]
    alpha: Alpha<f64>,
    #[arg(long, default_value = "astvec")]
    factor: FactorMode,
    #[arg(long, default_value_t = 1.0)]
    root_clamp: f64,
    #[arg(long, default_value = "preorder")]
    traversal: Traversal,
    #[command(flatten)]
    grammar: GrammarArg,
}

#[derive(Args)]
struct FactorCurveArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.3,0.5,1,2")]
    gammas: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    tmax: usize,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Synonym-swap probability per NL word
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    dev_fraction: f64,
    /// Directory receiving train.jsonl, dev.jsonl and test.jsonl
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Directory with train.jsonl
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    grammar: GrammarArg,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    #[arg(long, default_value = "2")]
    alpha: Alpha<f64>,
    #[arg(long, default_value = "astvec")]
    factor: FactorMode,
    #[arg(long, default_value = "preorder")]
    traversal: Traversal,
    /// tf | fixed:P | ed:BASE | ld
    #[arg(long, default_value = "tf")]
    schedule: SamplingSchedule,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Train one run per seed in parallel processes
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    beam: usize,
    #[arg(long, default_value_t = 32)]
    word_dim: usize,
    #[arg(long, default_value_t = 32)]
    action_dim: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    batch_size: usize,
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    #[arg(long, default_value_t = 100)]
    train_em_sample: usize,
    /// f32 | f64
    #[arg(long, default_value = "f32")]
    precision: String,
    /// key = value file; its entries override flags
    #[arg(long)]
    config: Option<PathBuf>,
}

impl TrainArgs {
    fn apply_config(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            match k.as_str() {
                "gamma" => self.gamma = parse_value(k, v)?,
                "alpha" => self.alpha = parse_value(k, v)?,
                "factor" => self.factor = parse_value(k, v)?,
                "traversal" => self.traversal = parse_value(k, v)?,
                "schedule" => self.schedule = parse_value(k, v)?,
                "seed" => self.seed = parse_value(k, v)?,
                "epochs" => self.epochs = parse_value(k, v)?,
                "beam" => self.beam = parse_value(k, v)?,
                "word-dim" => self.word_dim = parse_value(k, v)?,
                "action-dim" => self.action_dim = parse_value(k, v)?,
                "hidden" => self.hidden = parse_value(k, v)?,
                "lr" => self.lr = parse_value(k, v)?,
                "batch-size" => self.batch_size = parse_value(k, v)?,
                "clip" => self.clip = parse_value(k, v)?,
                "train-em-sample" => self.train_em_sample = parse_value(k, v)?,
                "precision" => self.precision = v.clone(),
                other => return Err(usage(format!("unknown config key `{other}`"))),
            }
        }
        Ok(())
    }

    fn resolved(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("gamma", self.gamma.to_string()),
            ("alpha", self.alpha.to_string()),
            ("factor", self.factor.to_string()),
            ("traversal", self.traversal.to_string()),
            ("schedule", self.schedule.to_string()),
            ("seed", self.seed.to_string()),
            ("epochs", self.epochs.to_string()),
            ("beam", self.beam.to_string()),
            ("word-dim", self.word_dim.to_string()),
            ("action-dim", self.action_dim.to_string()),
            ("hidden", self.hidden.to_string()),
            ("lr", self.lr.to_string()),
            ("batch-size", self.batch_size.to_string()),
            ("clip", self.clip.to_string()),
            ("train-em-sample", self.train_em_sample.to_string()),
            ("precision", self.precision.clone()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn model_config(&self) -> ModelConfig {
        ModelConfig {
            word_dim: self.word_dim,
            action_dim: self.action_dim,
            hidden: self.hidden,
            seed: self.seed,
            learning_rate: self.lr,
            epochs: self.epochs,
            beam: self.beam,
            batch_size: self.batch_size,
            clip: self.clip,
            traversal: self.traversal,
            train_em_sample: self.train_em_sample,
            ..ModelConfig::default()
        }
    }

    fn loss_config<T: Scalar>(&self) -> LossConfig<T> {
        let alpha = match self.alpha {
            Alpha::Constant(a) => Alpha::Constant(T::of(a)),
            Alpha::Auto => Alpha::Auto,
        };
        LossConfig::ap(T::of(self.gamma), alpha).with_factor(self.factor)
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["pred", "checkpoint"])))]
struct EvaluateArgs {
    /// Predicted code, one per line (or JSON lines with a "code" field)
    #[arg(long, requires = "gold")]
    pred: Option<PathBuf>,
    /// Gold JSON-lines dataset
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Trained checkpoint to decode with
    #[arg(long, requires = "data")]
    checkpoint: Option<PathBuf>,
    /// JSON-lines dataset to decode
    #[arg(long)]
    data: Option<PathBuf>,
    /// Beam size; the checkpoint's setting when omitted
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long, default_value = "preorder")]
    traversal: Traversal,
    #[command(flatten)]
    grammar: GrammarArg,
    /// Directory for eval.json, predictions and manifest
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; its entries override flags
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Grammar(GrammarCommand::Check { file }) => {
            let g = Grammar::parse(&read(&file)?).with_context(|| format!("{}", file.display()))?;
            print!("{}", g.constructor_table());
            Ok(())
        }
        Command::Transduce(a) => transduce(a),
        Command::Vectorize(a) => vectorize(a),
        Command::Weights(a) => weights(a),
        Command::FactorCurve(a) => curve(a),
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => read(p),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn flush_csv(w: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    std::io::stdout().write_all(&bytes)?;
    Ok(())
}

fn transduce(a: TransduceArgs) -> Result<()> {
    let (g, syntax) = a.grammar.load()?;
    let input = read_input(a.input.as_deref())?;
    if a.to_actions {
        let tree = code_to_ast(&g, &syntax, input.trim())?;
        let steps = ast_to_actions(&g, &tree, a.traversal)?;
        print!("{}", actions_to_text(steps.iter().map(|s| &s.action)));
    } else {
        let actions = parse_actions(&input)?;
        let (tree, _) = replay(&g, actions, a.traversal)?;
        println!("{}", ast_to_code(&tree, &syntax)?);
    }
    Ok(())
}

fn load_steps(
    path: &Path,
    grammar: &GrammarArg,
    traversal: Traversal,
) -> Result<Vec<seq2tree::ActionStep>> {
    let (g, _) = grammar.load()?;
    let actions = parse_actions(&read(path)?)?;
    let (_, steps) = replay(&g, actions, traversal)?;
    Ok(steps)
}

fn vectorize(a: VectorizeArgs) -> Result<()> {
    let steps = load_steps(&a.actions, &a.grammar, a.traversal)?;
    let vectors = ast2vec(&steps)?;
    let mut w = csv_writer();
    w.write_record(["t", "node", "action", "depth", "horiz", "norm"])?;
    for (s, v) in steps.iter().zip(&vectors) {
        w.write_record([
            s.t.to_string(),
            (s.t - 1).to_string(),
            s.action.to_string(),
            v.depth.to_string(),
            v.horiz.to_string(),
            v.norm().to_string(),
        ])?;
    }
    flush_csv(w)
}

fn weights(a: WeightsArgs) -> Result<()> {
    let steps = load_steps(&a.actions, &a.grammar, a.traversal)?;
    let cfg = LossConfig {
        gamma: a.gamma,
        alpha: a.alpha,
        factor_mode: a.factor,
        root_clamp: a.root_clamp,
    };
    let ws = step_weights(&steps, &cfg)?;
    if !cfg.gamma_in_recommended_range() {
        eprintln!(
            "note: gamma {} is outside the recommended range 0.1..0.5",
            cfg.gamma
        );
    }
    let mut w = csv_writer();
    w.write_record(["t", "f", "weight"])?;
    for (s, (f, wt)) in steps.iter().zip(ws.factors.iter().zip(&ws.weights)) {
        w.write_record([s.t.to_string(), f.to_string(), wt.to_string()])?;
    }
    flush_csv(w)
}

fn curve(a: FactorCurveArgs) -> Result<()> {
    if a.tmax == 0 {
        return Err(usage("--tmax must be at least 1"));
    }
    let rows = factor_curve(&a.gammas, a.tmax)?;
    let mut w = csv_writer();
    w.write_record(["gamma", "f", "factor"])?;
    for (g, f, v) in rows {
        w.write_record([g.to_string(), f.to_string(), v.to_string()])?;
    }
    flush_csv(w)
}

fn gen_corpus(a: GenCorpusArgs) -> Result<()> {
    let cfg = CorpusConfig {
        n: a.n,
        max_depth: a.depth,
        seed: a.seed,
        noise: a.noise,
        train_fraction: a.train_fraction,
        dev_fraction: a.dev_fraction,
    };
    if !(0.0..=1.0).contains(&a.noise) {
        return Err(usage("--noise must be in [0, 1]"));
    }
    let g = toy_grammar();
    let data = generate_corpus(&g, &toy_templates(), &cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let files = [
        ("train", &data.train),
        ("dev", &data.dev),
        ("test", &data.test),
    ];
    let mut texts = Vec::new();
    println!("split  examples  nl_len  code_len  action_len");
    for (name, split) in files {
        let text = write_jsonl(split);
        write(&a.out.join(format!("{name}.jsonl")), &text)?;
        if let Ok(s) = dataset_stats(split) {
            println!(
                "{name:<5}  {:>8}  {:>6.2}  {:>8.2}  {:>10.2}",
                s.examples, s.avg_nl_len, s.avg_code_len, s.avg_action_len
            );
        }
        texts.push(text);
    }
    let config: BTreeMap<String, String> = [
        ("n", a.n.to_string()),
        ("depth", a.depth.to_string()),
        ("noise", a.noise.to_string()),
        ("train-fraction", a.train_fraction.to_string()),
        ("dev-fraction", a.dev_fraction.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let parts: Vec<&[u8]> = texts.iter().map(|t| t.as_bytes()).collect();
    let m = RunManifest::new("gen-corpus", config, Some(a.seed), &g.to_text(), &parts);
    write(&a.out.join("manifest.json"), m.to_json())
}

fn load_split(
    dir: &Path,
    name: &str,
    g: &Grammar,
    syntax: &SurfaceSyntax,
) -> Result<Option<(Vec<Example>, String)>> {
    let path = dir.join(format!("{name}.jsonl"));
    if !path.exists() {
        return Ok(None);
    }
    let text = read(&path)?;
    let examples = read_jsonl(&text, g, syntax).with_context(|| format!("{}", path.display()))?;
    Ok(Some((examples, text)))
}

fn train_cmd(mut a: TrainArgs) -> Result<()> {
    if let Some(path) = &a.config {
        let map = parse_config(&read(path)?)?;
        a.apply_config(&map)?;
    }
    if a.precision != "f32" && a.precision != "f64" {
        return Err(usage(format!(
            "unknown precision `{}` (f32|f64)",
            a.precision
        )));
    }
    if !a.seeds.is_empty() {
        return fan_out(&a);
    }
    match a.precision.as_str() {
        "f32" => train_one::<f32>(&a),
        _ => train_one::<f64>(&a),
    }
}

/// One child process per seed, each writing to `out/seed-N`.
fn fan_out(a: &TrainArgs) -> Result<()> {
    let exe = std::env::current_exe()?;
    let mut children = Vec::new();
    for &seed in &a.seeds {
        let out = a.out.join(format!("seed-{seed}"));
        let mut cmd = std::process::Command::new(&exe);
        cmd.arg("train")
            .arg("--data")
            .arg(&a.data)
            .arg("--out")
            .arg(&out);
        if let Some(g) = &a.grammar.grammar {
            cmd.arg("--grammar").arg(g);
        }
        for (k, v) in a.resolved() {
            if k != "seed" {
                cmd.arg(format!("--{k}")).arg(v);
            }
        }
        cmd.arg("--seed").arg(seed.to_string());
        children.push((seed, cmd.spawn().context("cannot spawn training process")?));
    }
    let mut failed = Vec::new();
    for (seed, mut child) in children {
        if !child.wait()?.success() {
            failed.push(seed);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        bail!("training failed for seeds {failed:?}")
    }
}

fn train_one<T: Scalar>(a: &TrainArgs) -> Result<()> {
    let (g, syntax) = a.grammar.load()?;
    let (train, train_text) = load_split(&a.data, "train", &g, &syntax)?
        .ok_or_else(|| anyhow!("{} has no train.jsonl", a.data.display()))?;
    let loss = a.loss_config::<T>();
    let mut model = Model::<T>::for_corpus(a.model_config(), g.clone(), &train)?;
    let log = train_with(&mut model, &train, &loss, a.schedule, |e| {
        let em = e
            .train_em
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        eprintln!(
            "epoch {:>3}  loss {:.6}  train_em {em}  p {:.4}",
            e.epoch, e.loss, e.gold_probability
        );
    })?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write(&a.out.join("checkpoint.json"), model.to_checkpoint())?;
    write(&a.out.join("train_log.csv"), log.to_csv())?;
    let m = RunManifest::new(
        "train",
        a.resolved(),
        Some(a.seed),
        &g.to_text(),
        &[train_text.as_bytes()],
    );
    write(&a.out.join("manifest.json"), m.to_json())
}

fn evaluate_cmd(mut a: EvaluateArgs) -> Result<()> {
    if let Some(path) = &a.config {
        for (k, v) in parse_config(&read(path)?)? {
            match k.as_str() {
                "beam" => a.beam = Some(parse_value(&k, &v)?),
                "traversal" => a.traversal = parse_value(&k, &v)?,
                other => return Err(usage(format!("unknown config key `{other}`"))),
            }
        }
    }
    if let (Some(pred), Some(gold)) = (&a.pred, &a.gold) {
        return evaluate_files(&a, pred, gold);
    }
    let (ckpt, data) = (
        a.checkpoint.clone().expect("clap group"),
        a.data.clone().expect("clap requires"),
    );
    let text = read(&ckpt)?;
    match checkpoint_precision(&text)?.as_str() {
        "f32" => evaluate_checkpoint(Model::<f32>::from_checkpoint(&text)?, &a, &data, &text),
        _ => evaluate_checkpoint(Model::<f64>::from_checkpoint(&text)?, &a, &data, &text),
    }
}

fn report_out(
    a: &EvaluateArgs,
    report: &seq2tree::metrics::EvalReport,
    predictions: Option<String>,
    manifest: RunManifest,
) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    eprint!("{}", report.table());
    if let Some(out) = &a.out {
        fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
        write(
            &out.join("eval.json"),
            serde_json::to_string_pretty(report)? + "\n",
        )?;
        if let Some(p) = predictions {
            write(&out.join("predictions.jsonl"), p)?;
        }
        write(&out.join("manifest.json"), manifest.to_json())?;
    }
    Ok(())
}

fn evaluate_files(a: &EvaluateArgs, pred: &Path, gold: &Path) -> Result<()> {
    let (g, syntax) = a.grammar.load()?;
    let gold_text = read(gold)?;
    let golds =
        read_jsonl(&gold_text, &g, &syntax).with_context(|| format!("{}", gold.display()))?;
    let pred_text = read(pred)?;
    let preds: Vec<Option<String>> = pred_text
        .lines()
        .map(|l| {
            let l = l.trim();
            if l.starts_with('{') {
                let v: serde_json::Value = serde_json::from_str(l)?;
                Ok(v.get("code").and_then(|c| c.as_str()).map(String::from))
            } else {
                Ok((!l.is_empty()).then(|| l.to_string()))
            }
        })
        .collect::<Result<_>>()?;
    if preds.len() != golds.len() {
        bail!(
            "{} predictions for {} gold examples",
            preds.len(),
            golds.len()
        );
    }
    let mut pairs = Vec::with_capacity(golds.len());
    for (p, gold_ex) in preds.into_iter().zip(&golds) {
        let pred_actions: Vec<Action> = p
            .as_deref()
            .and_then(|c| code_to_ast(&g, &syntax, c).ok())
            .and_then(|t| ast_to_actions(&g, &t, a.traversal).ok())
            .map(|s| s.into_iter().map(|s| s.action).collect())
            .unwrap_or_default();
        pairs.push(EvalPair {
            pred_code: p,
            pred_actions,
            gold_code: gold_ex.code.clone(),
            gold_actions: gold_ex.actions_for(&g, a.traversal)?,
        });
    }
    let report = evaluate(&pairs)?;
    let config = [("traversal".to_string(), a.traversal.to_string())]
        .into_iter()
        .collect();
    let m = RunManifest::new(
        "evaluate",
        config,
        None,
        &g.to_text(),
        &[gold_text.as_bytes(), pred_text.as_bytes()],
    );
    report_out(a, &report, None, m)
}

fn evaluate_checkpoint<T: Scalar>(
    model: Model<T>,
    a: &EvaluateArgs,
    data: &Path,
    ckpt_text: &str,
) -> Result<()> {
    let syntax = if model.grammar == toy_grammar() {
        toy_syntax()
    } else {
        SurfaceSyntax::generic(&model.grammar)
    };
    let data_text = read(data)?;
    let examples = read_jsonl(&data_text, &model.grammar, &syntax)
        .with_context(|| format!("{}", data.display()))?;
    let beam = a.beam.unwrap_or(model.config.beam);
    let (report, predictions) = evaluate_model(&model, &examples, &syntax, beam)?;
    let mut lines = String::new();
    for p in &predictions {
        lines.push_str(&serde_json::to_string(
            &serde_json::json!({ "nl": p.nl, "code": p.code, "score": p.score }),
        )?);
        lines.push('\n');
    }
    let config = [("beam".to_string(), beam.to_string())]
        .into_iter()
        .collect();
    let m = RunManifest::new(
        "evaluate",
        config,
        Some(model.config.seed),
        &model.grammar.to_text(),
        &[data_text.as_bytes(), ckpt_text.as_bytes()],
    );
    report_out(a, &report, Some(lines), m)
}
