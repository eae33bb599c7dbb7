//! Toy lambda-form language and a deterministic synthetic NL/code corpus.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asdl::{Cardinality, Grammar};
use crate::ast::{
    ast_to_code, code_to_ast, tokenize_code, AstNode, CodeError, Head, SurfaceSyntax,
};
use crate::transition::{actions_to_ast, ast_to_actions, Action, TransitionError, Traversal};

pub const TOY_GRAMMAR: &str = "\
-- lambda-form toy language
primitive identifier
root expr
expr = Len(var arg)
     | Argmax(var bound, expr domain, expr score)
     | And(expr* conjuncts)
     | Loc(var subject, var? object)
     | Place(var subject)
     | Elevation(var subject)
     | Const(identifier name)
var = Var(identifier name)
";

/// Values sampled for `identifier` fields.
pub const TOY_IDENTIFIERS: &[&str] = &["$0", "$1", "c0", "c1", "r0", "r1", "s0", "s1"];

pub fn toy_grammar() -> Grammar {
    Grammar::parse(TOY_GRAMMAR).expect("built-in grammar parses")
}

pub fn toy_templates() -> TemplateSet {
    let t = |ctor: &str, pattern: &str, head: Head| Template::new(ctor, pattern, head);
    let s = |h: &str| Head::Sexp(h.to_string());
    TemplateSet::new(vec![
        t("Len", "what length is the {arg}", s("len:i")),
        t(
            "Argmax",
            "which {bound} in {domain} has the highest {score}",
            s("argmax"),
        ),
        t("And", "both {conjuncts}", s("and")).joined_by("and"),
        t("Loc", "{subject} located [in {object}]", s("loc:t")),
        t("Place", "{subject} is a place", s("place:t")),
        t("Elevation", "elevation of {subject}", s("elevation:i")),
        t("Const", "{name}", Head::Bare),
        t("Var", "{name}", Head::Bare),
    ])
}

pub fn toy_syntax() -> SurfaceSyntax {
    toy_templates().syntax()
}

/// Word replacements used by the optional paraphrase noise.
const SYNONYMS: &[(&str, &str)] = &[
    ("length", "size"),
    ("highest", "largest"),
    ("located", "situated"),
    ("place", "location"),
    ("elevation", "height"),
    ("which", "what"),
    ("both", "all"),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("no template for constructor `{0}`")]
    MissingTemplate(String),
    #[error("template for `{constructor}`: {message}")]
    BadTemplate {
        constructor: String,
        message: String,
    },
    #[error("type `{type_name}` needs depth {needed}, limit is {limit}")]
    DepthUnsatisfiable {
        type_name: String,
        needed: usize,
        limit: usize,
    },
    #[error("only {found} distinct examples found, {requested} requested")]
    Exhausted { requested: usize, found: usize },
    #[error("no identifier pool for primitive type `{0}`")]
    NoTokenPool(String),
    #[error("n must be >= 1 and max depth >= 1")]
    BadConfig,
    #[error("empty dataset")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Word(String),
    Slot(String),
    /// Omitted when its slot's field is empty.
    Group(Vec<Piece>),
}

/// Surface forms of one constructor: NL pattern and code head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub constructor: String,
    pub pattern: String,
    pub head: Head,
    /// Word placed between children of a multiple field.
    pub joiner: Option<String>,
}

impl Template {
    pub fn new(constructor: &str, pattern: &str, head: Head) -> Self {
        Template {
            constructor: constructor.to_string(),
            pattern: pattern.to_string(),
            head,
            joiner: None,
        }
    }

    pub fn joined_by(mut self, word: &str) -> Self {
        self.joiner = Some(word.to_string());
        self
    }

    fn pieces(&self) -> Result<Vec<Piece>, String> {
        fn parse(
            words: &mut std::iter::Peekable<std::str::SplitWhitespace<'_>>,
            nested: bool,
        ) -> Result<Vec<Piece>, String> {
            let mut out = Vec::new();
            while let Some(word) = words.next() {
                if let Some(rest) = word.strip_prefix('[') {
                    if nested {
                        return Err("nested optional groups".into());
                    }
                    // re-feed the remainder of the word inside the group
                    let mut inner_words: Vec<String> = vec![rest.to_string()];
                    let mut closed = rest.ends_with(']');
                    while !closed {
                        let Some(w) = words.next() else {
                            return Err("unclosed `[`".into());
                        };
                        closed = w.ends_with(']');
                        inner_words.push(w.to_string());
                    }
                    let last = inner_words.last_mut().expect("non-empty");
                    last.pop();
                    let joined = inner_words.join(" ");
                    let mut it = joined.split_whitespace().peekable();
                    out.push(Piece::Group(parse(&mut it, true)?));
                } else if let Some(name) = word.strip_prefix('{').and_then(|w| w.strip_suffix('}'))
                {
                    out.push(Piece::Slot(name.to_string()));
                } else if word.contains(['{', '}', '[', ']']) {
                    return Err(format!("malformed word `{word}`"));
                } else {
                    out.push(Piece::Word(word.to_string()));
                }
            }
            Ok(out)
        }
        parse(&mut self.pattern.split_whitespace().peekable(), false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

impl TemplateSet {
    pub fn new(templates: Vec<Template>) -> Self {
        TemplateSet { templates }
    }

    pub fn get(&self, constructor: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.constructor == constructor)
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn syntax(&self) -> SurfaceSyntax {
        self.templates.iter().fold(SurfaceSyntax::new(), |s, t| {
            s.with(t.constructor.clone(), t.head.clone())
        })
    }

    /// Every constructor has exactly one template whose slots are its fields.
    pub fn check(&self, grammar: &Grammar) -> Result<(), CorpusError> {
        for ctor in grammar.constructors() {
            let matching: Vec<&Template> = self
                .templates
                .iter()
                .filter(|t| t.constructor == ctor.name)
                .collect();
            let template = match matching.as_slice() {
                [] => return Err(CorpusError::MissingTemplate(ctor.name.clone())),
                [one] => *one,
                _ => {
                    return Err(CorpusError::BadTemplate {
                        constructor: ctor.name.clone(),
                        message: "more than one template".into(),
                    })
                }
            };
            let bad = |message: String| CorpusError::BadTemplate {
                constructor: ctor.name.clone(),
                message,
            };
            let pieces = template.pieces().map_err(bad)?;
            let mut slots = Vec::new();
            collect_slots(&pieces, &mut slots);
            let mut expected: Vec<&str> = ctor.fields.iter().map(|f| f.name.as_str()).collect();
            let mut found: Vec<&str> = slots.iter().map(String::as_str).collect();
            expected.sort_unstable();
            found.sort_unstable();
            if expected != found {
                return Err(bad(format!(
                    "slots {found:?} do not match fields {expected:?}"
                )));
            }
        }
        self.syntax().check(grammar)?;
        Ok(())
    }

    /// Renders the NL description of a tree.
    pub fn render_nl(&self, grammar: &Grammar, node: &AstNode) -> Result<Vec<String>, CorpusError> {
        let mut out = Vec::new();
        self.render_into(grammar, node, &mut out)?;
        Ok(out)
    }

    fn render_into(
        &self,
        grammar: &Grammar,
        node: &AstNode,
        out: &mut Vec<String>,
    ) -> Result<(), CorpusError> {
        let (constructor, fields) = match node {
            AstNode::Token(v) => {
                out.push(v.clone());
                return Ok(());
            }
            AstNode::Composite {
                constructor,
                fields,
            } => (constructor, fields),
        };
        let template = self
            .get(constructor)
            .ok_or_else(|| CorpusError::MissingTemplate(constructor.clone()))?;
        let pieces = template
            .pieces()
            .map_err(|message| CorpusError::BadTemplate {
                constructor: constructor.clone(),
                message,
            })?;
        let by_name: HashMap<&str, &[AstNode]> = fields
            .iter()
            .map(|f| (f.name.as_str(), f.children.as_slice()))
            .collect();
        self.render_pieces(grammar, &pieces, &by_name, template.joiner.as_deref(), out)
    }

    fn render_pieces(
        &self,
        grammar: &Grammar,
        pieces: &[Piece],
        fields: &HashMap<&str, &[AstNode]>,
        joiner: Option<&str>,
        out: &mut Vec<String>,
    ) -> Result<(), CorpusError> {
        for piece in pieces {
            match piece {
                Piece::Word(w) => out.push(w.clone()),
                Piece::Slot(name) => {
                    let children = fields.get(name.as_str()).copied().unwrap_or(&[]);
                    for (i, child) in children.iter().enumerate() {
                        if i > 0 {
                            if let Some(j) = joiner {
                                out.push(j.to_string());
                            }
                        }
                        self.render_into(grammar, child, out)?;
                    }
                }
                Piece::Group(inner) => {
                    let mut slots = Vec::new();
                    collect_slots(inner, &mut slots);
                    let present = slots
                        .iter()
                        .all(|s| fields.get(s.as_str()).is_some_and(|c| !c.is_empty()));
                    if present {
                        self.render_pieces(grammar, inner, fields, joiner, out)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn collect_slots(pieces: &[Piece], out: &mut Vec<String>) {
    for p in pieces {
        match p {
            Piece::Slot(s) => out.push(s.clone()),
            Piece::Group(inner) => collect_slots(inner, out),
            Piece::Word(_) => {}
        }
    }
}

/// One NL/code pair with its gold pre-order actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub nl: Vec<String>,
    pub code: String,
    pub actions: Vec<Action>,
}

impl Example {
    pub fn from_code(
        grammar: &Grammar,
        syntax: &SurfaceSyntax,
        nl: Vec<String>,
        code: &str,
    ) -> Result<Self, CorpusError> {
        let tree = code_to_ast(grammar, syntax, code)?;
        let code = ast_to_code(&tree, syntax)?;
        let actions = ast_to_actions(grammar, &tree, Traversal::Preorder)?
            .into_iter()
            .map(|s| s.action)
            .collect();
        Ok(Example { nl, code, actions })
    }

    pub fn tree(&self, grammar: &Grammar) -> Result<AstNode, TransitionError> {
        actions_to_ast(grammar, &self.actions, Traversal::Preorder)
    }

    /// Gold actions under another traversal.
    pub fn actions_for(
        &self,
        grammar: &Grammar,
        traversal: Traversal,
    ) -> Result<Vec<Action>, TransitionError> {
        if traversal == Traversal::Preorder {
            return Ok(self.actions.clone());
        }
        let tree = self.tree(grammar)?;
        Ok(ast_to_actions(grammar, &tree, traversal)?
            .into_iter()
            .map(|s| s.action)
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct ExampleRecord {
    nl: Vec<String>,
    code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
}

impl Dataset {
    /// Splits in order: the first `train` go to train, the next `dev` to dev,
    /// the rest to test.
    pub fn from_examples(mut examples: Vec<Example>, train: usize, dev: usize) -> Self {
        let test = examples.split_off((train + dev).min(examples.len()));
        let dev_part = examples.split_off(train.min(examples.len()));
        Dataset {
            train: examples,
            dev: dev_part,
            test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = &Example> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub n: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Probability of swapping an NL word for its synonym.
    pub noise: f64,
    pub train_fraction: f64,
    pub dev_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n: 1000,
            max_depth: 4,
            seed: 7,
            noise: 0.0,
            train_fraction: 0.8,
            dev_fraction: 0.1,
        }
    }
}

impl CorpusConfig {
    fn split_sizes(&self) -> (usize, usize) {
        let train = (self.n as f64 * self.train_fraction).round() as usize;
        let dev = (self.n as f64 * self.dev_fraction).round() as usize;
        let train = train.min(self.n);
        (train, dev.min(self.n - train))
    }
}

/// Samples `config.n` distinct trees top-down and renders them.
pub fn generate_corpus(
    grammar: &Grammar,
    templates: &TemplateSet,
    config: &CorpusConfig,
) -> Result<Dataset, CorpusError> {
    if config.n == 0 || config.max_depth == 0 {
        return Err(CorpusError::BadConfig);
    }
    templates.check(grammar)?;
    for p in grammar.primitive_types() {
        if p != "identifier" {
            return Err(CorpusError::NoTokenPool(p.clone()));
        }
    }
    let heights = min_heights(grammar);
    let root_height = heights[grammar.root_type()];
    if root_height > config.max_depth {
        return Err(CorpusError::DepthUnsatisfiable {
            type_name: grammar.root_type().to_string(),
            needed: root_height,
            limit: config.max_depth,
        });
    }
    let syntax = templates.syntax();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen = HashSet::new();
    let mut examples = Vec::with_capacity(config.n);
    let max_attempts = config.n.saturating_mul(200).max(10_000);
    let mut attempts = 0;
    while examples.len() < config.n {
        if attempts == max_attempts {
            return Err(CorpusError::Exhausted {
                requested: config.n,
                found: examples.len(),
            });
        }
        attempts += 1;
        let tree = sample_tree(
            grammar,
            &heights,
            grammar.root_type(),
            config.max_depth,
            &mut rng,
        );
        let code = ast_to_code(&tree, &syntax)?;
        if !seen.insert(code.clone()) {
            continue;
        }
        let mut nl = templates.render_nl(grammar, &tree)?;
        if config.noise > 0.0 {
            for word in nl.iter_mut() {
                if let Some((_, syn)) = SYNONYMS.iter().find(|(w, _)| w == word) {
                    if rng.random_bool(config.noise) {
                        *word = syn.to_string();
                    }
                }
            }
        }
        let actions = ast_to_actions(grammar, &tree, Traversal::Preorder)?
            .into_iter()
            .map(|s| s.action)
            .collect();
        examples.push(Example { nl, code, actions });
    }
    examples.shuffle(&mut rng);
    let (train, dev) = config.split_sizes();
    Ok(Dataset::from_examples(examples, train, dev))
}

/// Minimum number of composite levels needed to complete each type.
fn min_heights(grammar: &Grammar) -> HashMap<String, usize> {
    let mut heights: HashMap<String, usize> = HashMap::new();
    loop {
        let mut changed = false;
        for ty in grammar.composite_types() {
            let best = grammar
                .constructors_of(ty)
                .iter()
                .filter_map(|&id| {
                    let ctor = &grammar.constructors()[id];
                    let mut h = 1;
                    for f in &ctor.fields {
                        if f.cardinality == Cardinality::Single
                            && grammar.is_composite(&f.type_name)
                        {
                            h = h.max(1 + *heights.get(&f.type_name)?);
                        }
                    }
                    Some(h)
                })
                .min();
            if let Some(b) = best {
                if heights.get(ty).is_none_or(|&cur| b < cur) {
                    heights.insert(ty.clone(), b);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    heights
}

fn ctor_height(grammar: &Grammar, heights: &HashMap<String, usize>, id: usize) -> usize {
    let ctor = &grammar.constructors()[id];
    ctor.fields
        .iter()
        .filter(|f| f.cardinality == Cardinality::Single && grammar.is_composite(&f.type_name))
        .map(|f| 1 + heights.get(&f.type_name).copied().unwrap_or(usize::MAX / 2))
        .max()
        .unwrap_or(1)
}

fn sample_tree(
    grammar: &Grammar,
    heights: &HashMap<String, usize>,
    type_name: &str,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> AstNode {
    let feasible: Vec<usize> = grammar
        .constructors_of(type_name)
        .iter()
        .copied()
        .filter(|&id| ctor_height(grammar, heights, id) <= budget)
        .collect();
    let id = feasible[rng.random_range(0..feasible.len())];
    let ctor = &grammar.constructors()[id];
    let mut children = Vec::with_capacity(ctor.fields.len());
    for field in &ctor.fields {
        let primitive = grammar.is_primitive(&field.type_name);
        let fits_below = primitive || heights.get(&field.type_name).is_some_and(|&h| h < budget);
        let count = match field.cardinality {
            Cardinality::Single => 1,
            Cardinality::Optional => usize::from(fits_below && rng.random_bool(0.5)),
            Cardinality::Multiple if fits_below => rng.random_range(1..=3),
            Cardinality::Multiple => 0,
        };
        let values = (0..count)
            .map(|_| {
                if primitive {
                    AstNode::token(TOY_IDENTIFIERS[rng.random_range(0..TOY_IDENTIFIERS.len())])
                } else {
                    sample_tree(grammar, heights, &field.type_name, budget - 1, rng)
                }
            })
            .collect();
        children.push(values);
    }
    AstNode::apply(grammar, &ctor.name, children)
}

/// Aggregate lengths over one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitStats {
    pub examples: usize,
    pub avg_nl_len: f64,
    pub avg_code_len: f64,
    pub avg_action_len: f64,
}

pub fn dataset_stats(examples: &[Example]) -> Result<SplitStats, CorpusError> {
    if examples.is_empty() {
        return Err(CorpusError::Empty);
    }
    let n = examples.len() as f64;
    let mut nl = 0usize;
    let mut code = 0usize;
    let mut actions = 0usize;
    for e in examples {
        nl += e.nl.len();
        code += tokenize_code(&e.code).map(|t| t.len()).unwrap_or(0);
        actions += e.actions.len();
    }
    Ok(SplitStats {
        examples: examples.len(),
        avg_nl_len: nl as f64 / n,
        avg_code_len: code as f64 / n,
        avg_action_len: actions as f64 / n,
    })
}

pub fn write_jsonl(examples: &[Example]) -> String {
    let mut out = String::new();
    for e in examples {
        let record = ExampleRecord {
            nl: e.nl.clone(),
            code: e.code.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("plain strings serialize"));
        out.push('\n');
    }
    out
}

/// Reads `{"nl": [...], "code": "..."}` lines, deriving gold actions.
pub fn read_jsonl(
    text: &str,
    grammar: &Grammar,
    syntax: &SurfaceSyntax,
) -> Result<Vec<Example>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let record: ExampleRecord =
                serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            Example::from_code(grammar, syntax, record.nl, &record.code).map_err(|e| {
                CorpusError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::FrontierState;

    #[test]
    fn toy_assets_are_consistent() {
        let g = toy_grammar();
        assert_eq!(g.constructors().len(), 8);
        assert_eq!(g.root_type(), "expr");
        toy_templates().check(&g).unwrap();
    }

    #[test]
    fn renders_length_question() {
        let g = toy_grammar();
        let tree = code_to_ast(&g, &toy_syntax(), "( len:i r0 )").unwrap();
        let nl = toy_templates().render_nl(&g, &tree).unwrap();
        assert_eq!(nl.join(" "), "what length is the r0");
    }

    #[test]
    fn optional_group_is_dropped() {
        let g = toy_grammar();
        let t = toy_templates();
        let with = code_to_ast(&g, &toy_syntax(), "( loc:t $0 c0 )").unwrap();
        let without = code_to_ast(&g, &toy_syntax(), "( loc:t $0 )").unwrap();
        assert_eq!(
            t.render_nl(&g, &with).unwrap().join(" "),
            "$0 located in c0"
        );
        assert_eq!(t.render_nl(&g, &without).unwrap().join(" "), "$0 located");
    }

    #[test]
    fn deterministic_for_seed() {
        let g = toy_grammar();
        let cfg = CorpusConfig {
            n: 10,
            seed: 7,
            ..CorpusConfig::default()
        };
        let a = generate_corpus(&g, &toy_templates(), &cfg).unwrap();
        let b = generate_corpus(&g, &toy_templates(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train.len(), a.dev.len(), a.test.len()), (8, 1, 1));
        let other =
            generate_corpus(&g, &toy_templates(), &CorpusConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn examples_are_valid_and_distinct() {
        let g = toy_grammar();
        let syntax = toy_syntax();
        let cfg = CorpusConfig {
            n: 300,
            ..CorpusConfig::default()
        };
        let data = generate_corpus(&g, &toy_templates(), &cfg).unwrap();
        let codes: HashSet<&str> = data.all().map(|e| e.code.as_str()).collect();
        assert_eq!(codes.len(), 300);
        for e in data.all() {
            let tree = code_to_ast(&g, &syntax, &e.code).unwrap();
            assert!(tree.depth() <= 2 * cfg.max_depth);
            let mut state = FrontierState::new(&g, Traversal::Preorder);
            for a in &e.actions {
                assert!(state.valid_actions().unwrap().contains(&g, a));
                state.apply(a.clone()).unwrap();
            }
            assert_eq!(
                ast_to_code(&state.finish().unwrap(), &syntax).unwrap(),
                e.code
            );
        }
    }

    #[test]
    fn depth_limit() {
        let g = Grammar::parse("a = Wrap(b inner)\nb = Leaf").unwrap();
        let t = TemplateSet::new(vec![
            Template::new("Wrap", "wrap {inner}", Head::Sexp("wrap".into())),
            Template::new("Leaf", "leaf", Head::Sexp("leaf".into())),
        ]);
        let cfg = CorpusConfig {
            n: 1,
            max_depth: 1,
            ..CorpusConfig::default()
        };
        assert!(matches!(
            generate_corpus(&g, &t, &cfg),
            Err(CorpusError::DepthUnsatisfiable { needed: 2, .. })
        ));
        let data = generate_corpus(
            &g,
            &t,
            &CorpusConfig {
                max_depth: 2,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(data.train[0].code, "( wrap ( leaf ) )");
        let cfg2 = CorpusConfig {
            n: 2,
            max_depth: 2,
            ..cfg
        };
        assert!(matches!(
            generate_corpus(&g, &t, &cfg2),
            Err(CorpusError::Exhausted { found: 1, .. })
        ));
    }

    #[test]
    fn template_coverage_gap() {
        let g = toy_grammar();
        let mut t = toy_templates();
        t.templates.retain(|t| t.constructor != "Place");
        assert_eq!(
            t.check(&g),
            Err(CorpusError::MissingTemplate("Place".into()))
        );
        let mut t = toy_templates();
        t.templates[0] = Template::new("Len", "length of", Head::Sexp("len:i".into()));
        assert!(matches!(t.check(&g), Err(CorpusError::BadTemplate { .. })));
    }

    #[test]
    fn stats() {
        let g = toy_grammar();
        let e = Example::from_code(
            &g,
            &toy_syntax(),
            "a b c d e".split(' ').map(String::from).collect(),
            "( len:i r0 )",
        )
        .unwrap();
        let s = dataset_stats(std::slice::from_ref(&e)).unwrap();
        assert_eq!(s.avg_nl_len, 5.0);
        assert_eq!(s.avg_code_len, 4.0);
        assert_eq!(s.avg_action_len, 3.0);
        assert_eq!(dataset_stats(&[]), Err(CorpusError::Empty));
    }

    #[test]
    fn jsonl_round_trip() {
        let g = toy_grammar();
        let syntax = toy_syntax();
        let data = generate_corpus(
            &g,
            &toy_templates(),
            &CorpusConfig {
                n: 20,
                ..CorpusConfig::default()
            },
        )
        .unwrap();
        let text = write_jsonl(&data.train);
        assert!(text.lines().next().unwrap().starts_with("{\"nl\":["));
        assert_eq!(read_jsonl(&text, &g, &syntax).unwrap(), data.train);
        assert!(matches!(
            read_jsonl("{\"nl\": []}", &g, &syntax),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn noise_swaps_words() {
        let g = toy_grammar();
        let cfg = CorpusConfig {
            n: 50,
            noise: 1.0,
            ..CorpusConfig::default()
        };
        let data = generate_corpus(&g, &toy_templates(), &cfg).unwrap();
        assert!(data
            .all()
            .all(|e| !e.nl.iter().any(|w| w == "length" || w == "highest")));
    }
}
