//! The ApplyRule / Reduce / GenToken transition system.
//!
//! A derivation keeps an arena of partially built nodes and a deque of nodes
//! whose fields are still open. The front of the deque owns the unique
//! frontier field. Under pre-order a freshly applied constructor is pushed to
//! the front (depth first); under breadth-first it is pushed to the back, so a
//! node's fields are all filled before any of its children is expanded.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asdl::{Cardinality, Constructor, Field, Grammar};
use crate::ast::{is_valid_token, validate_ast, AstNode, FieldValue, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    ApplyRule(String),
    Reduce,
    GenToken(String),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::ApplyRule(c) => write!(f, "APPLY[{c}]"),
            Action::Reduce => write!(f, "REDUCE"),
            Action::GenToken(v) => write!(f, "GEN[{v}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: cannot parse action {text:?}")]
pub struct ActionParseError {
    pub line: usize,
    pub text: String,
}

impl FromStr for Action {
    type Err = ActionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let err = || ActionParseError {
            line: 0,
            text: s.to_string(),
        };
        if s == "REDUCE" {
            return Ok(Action::Reduce);
        }
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(']'))
                .filter(|r| !r.is_empty())
        };
        if let Some(c) = inner("APPLY[") {
            return Ok(Action::ApplyRule(c.to_string()));
        }
        if let Some(v) = inner("GEN[") {
            return Ok(Action::GenToken(v.to_string()));
        }
        Err(err())
    }
}

/// Parses one action per line; blank lines are skipped.
pub fn parse_actions(text: &str) -> Result<Vec<Action>, ActionParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse::<Action>().map_err(|mut e| {
                e.line = i + 1;
                e
            })
        })
        .collect()
}

pub fn actions_to_text<'a>(actions: impl IntoIterator<Item = &'a Action>) -> String {
    actions.into_iter().map(|a| format!("{a}\n")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Traversal {
    #[default]
    #[serde(rename = "preorder")]
    Preorder,
    #[serde(rename = "bfs")]
    BreadthFirst,
}

impl FromStr for Traversal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preorder" | "pre-order" => Ok(Traversal::Preorder),
            "bfs" | "breadth-first" | "breadth_first" => Ok(Traversal::BreadthFirst),
            other => Err(format!("unknown traversal `{other}` (preorder|bfs)")),
        }
    }
}

impl fmt::Display for Traversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Traversal::Preorder => "preorder",
            Traversal::BreadthFirst => "bfs",
        })
    }
}

/// One action with its 1-based position `t` and the position of the
/// `ApplyRule` that opened the field it fills (0 for the first action).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionStep {
    pub t: usize,
    pub action: Action,
    pub parent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionTemplate {
    ApplyRule(String),
    Reduce,
    GenToken,
}

impl fmt::Display for ActionTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionTemplate::ApplyRule(c) => write!(f, "APPLY[{c}]"),
            ActionTemplate::Reduce => write!(f, "REDUCE"),
            ActionTemplate::GenToken => write!(f, "GEN[*]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("illegal action {action} at t={t}; expected one of {}", fmt_templates(.expected))]
    IllegalAction {
        t: usize,
        action: Action,
        expected: Vec<ActionTemplate>,
    },
    #[error("action sequence ends with open fields: {}", .open_fields.join(", "))]
    PrematureEnd { open_fields: Vec<String> },
    #[error("trailing action at t={t} after the derivation completed")]
    Trailing { t: usize },
    #[error("derivation is already complete")]
    Complete,
    #[error("invalid AST: {0}")]
    InvalidAst(#[from] Violation),
}

fn fmt_templates(ts: &[ActionTemplate]) -> String {
    let parts: Vec<String> = ts.iter().map(ToString::to_string).collect();
    format!("{{{}}}", parts.join(", "))
}

/// The field the next action must fill.
#[derive(Debug, Clone, Copy)]
pub struct Frontier<'g> {
    /// `t` of the ApplyRule owning the field, 0 for the root slot.
    pub owner_step: usize,
    pub owner: Option<&'g Constructor>,
    /// `None` for the root slot.
    pub field: Option<&'g Field>,
    pub type_name: &'g str,
    pub cardinality: Cardinality,
    /// Children already placed in this field.
    pub count: usize,
    pub primitive: bool,
}

/// Actions legal at a frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidActions<'g> {
    /// Constructor ids (empty for primitive fields).
    pub constructors: &'g [usize],
    pub reduce: bool,
    pub gen_token: bool,
}

impl<'g> ValidActions<'g> {
    pub fn contains(&self, grammar: &Grammar, action: &Action) -> bool {
        match action {
            Action::ApplyRule(c) => grammar
                .constructor_id(c)
                .is_some_and(|id| self.constructors.contains(&id)),
            Action::Reduce => self.reduce,
            Action::GenToken(v) => self.gen_token && is_valid_token(v),
        }
    }

    pub fn templates(&self, grammar: &Grammar) -> Vec<ActionTemplate> {
        let mut out: Vec<ActionTemplate> = self
            .constructors
            .iter()
            .map(|&id| ActionTemplate::ApplyRule(grammar.constructors()[id].name.clone()))
            .collect();
        if self.gen_token {
            out.push(ActionTemplate::GenToken);
        }
        if self.reduce {
            out.push(ActionTemplate::Reduce);
        }
        out
    }

    /// Number of distinct choices when GenToken counts as one.
    pub fn len(&self) -> usize {
        self.constructors.len() + usize::from(self.reduce) + usize::from(self.gen_token)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
enum Child {
    Node(usize),
    Token(String),
}

#[derive(Debug, Clone)]
struct Partial {
    constructor: usize,
    step: usize,
    fields: Vec<Vec<Child>>,
    current: usize,
}

/// Incremental derivation state; see the module docs.
#[derive(Debug, Clone)]
pub struct FrontierState<'g> {
    grammar: &'g Grammar,
    traversal: Traversal,
    nodes: Vec<Partial>,
    open: VecDeque<usize>,
    steps: Vec<ActionStep>,
}

impl<'g> FrontierState<'g> {
    pub fn new(grammar: &'g Grammar, traversal: Traversal) -> Self {
        FrontierState {
            grammar,
            traversal,
            nodes: Vec::new(),
            open: VecDeque::new(),
            steps: Vec::new(),
        }
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }

    pub fn traversal(&self) -> Traversal {
        self.traversal
    }

    pub fn is_complete(&self) -> bool {
        !self.nodes.is_empty() && self.open.is_empty()
    }

    pub fn steps(&self) -> &[ActionStep] {
        &self.steps
    }

    pub fn frontier(&self) -> Option<Frontier<'g>> {
        let g = self.grammar;
        if self.nodes.is_empty() {
            return Some(Frontier {
                owner_step: 0,
                owner: None,
                field: None,
                type_name: g.root_type(),
                cardinality: Cardinality::Single,
                count: 0,
                primitive: false,
            });
        }
        let &active = self.open.front()?;
        let node = &self.nodes[active];
        let ctor = &g.constructors()[node.constructor];
        let field = &ctor.fields[node.current];
        Some(Frontier {
            owner_step: node.step,
            owner: Some(ctor),
            field: Some(field),
            type_name: &field.type_name,
            cardinality: field.cardinality,
            count: node.fields[node.current].len(),
            primitive: g.is_primitive(&field.type_name),
        })
    }

    pub fn valid_actions(&self) -> Result<ValidActions<'g>, TransitionError> {
        let frontier = self.frontier().ok_or(TransitionError::Complete)?;
        Ok(valid_for(self.grammar, &frontier))
    }

    /// Applies one action, returning the recorded step.
    pub fn apply(&mut self, action: Action) -> Result<&ActionStep, TransitionError> {
        let t = self.steps.len() + 1;
        let Some(frontier) = self.frontier() else {
            return Err(TransitionError::Trailing { t });
        };
        let valid = valid_for(self.grammar, &frontier);
        if !valid.contains(self.grammar, &action) {
            return Err(TransitionError::IllegalAction {
                t,
                action,
                expected: valid.templates(self.grammar),
            });
        }
        match &action {
            Action::ApplyRule(name) => {
                let id = self
                    .grammar
                    .constructor_id(name)
                    .expect("checked by contains");
                let n_fields = self.grammar.constructors()[id].fields.len();
                let new = self.nodes.len();
                self.nodes.push(Partial {
                    constructor: id,
                    step: t,
                    fields: vec![Vec::new(); n_fields],
                    current: 0,
                });
                if new > 0 {
                    self.attach(Child::Node(new), frontier.cardinality);
                }
                match self.traversal {
                    Traversal::Preorder => self.open.push_front(new),
                    Traversal::BreadthFirst => self.open.push_back(new),
                }
            }
            Action::GenToken(v) => self.attach(Child::Token(v.clone()), frontier.cardinality),
            Action::Reduce => {
                let active = self.open[0];
                self.nodes[active].current += 1;
            }
        }
        self.settle();
        self.steps.push(ActionStep {
            t,
            action,
            parent: frontier.owner_step,
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    fn attach(&mut self, child: Child, cardinality: Cardinality) {
        let active = self.open[0];
        let node = &mut self.nodes[active];
        node.fields[node.current].push(child);
        if cardinality.is_saturated(node.fields[node.current].len()) {
            node.current += 1;
        }
    }

    /// Drops finished nodes from the front of the deque.
    fn settle(&mut self) {
        while let Some(&front) = self.open.front() {
            let node = &self.nodes[front];
            if node.current < node.fields.len() {
                break;
            }
            self.open.pop_front();
        }
    }

    /// Descriptions of the fields still open, frontier first.
    pub fn open_fields(&self) -> Vec<String> {
        if self.nodes.is_empty() {
            return vec![format!("<root> ({})", self.grammar.root_type())];
        }
        self.open
            .iter()
            .filter(|&&i| self.nodes[i].current < self.nodes[i].fields.len())
            .map(|&i| {
                let node = &self.nodes[i];
                let ctor = &self.grammar.constructors()[node.constructor];
                let field = &ctor.fields[node.current];
                format!(
                    "{}.{} ({}{}, {} placed)",
                    ctor.name,
                    field.name,
                    field.type_name,
                    field.cardinality.suffix(),
                    node.fields[node.current].len()
                )
            })
            .collect()
    }

    /// Builds the finished tree.
    pub fn finish(&self) -> Result<AstNode, TransitionError> {
        if !self.is_complete() {
            return Err(TransitionError::PrematureEnd {
                open_fields: self.open_fields(),
            });
        }
        Ok(self.build(0))
    }

    fn build(&self, index: usize) -> AstNode {
        let node = &self.nodes[index];
        let ctor = &self.grammar.constructors()[node.constructor];
        AstNode::Composite {
            constructor: ctor.name.clone(),
            fields: ctor
                .fields
                .iter()
                .zip(&node.fields)
                .map(|(f, children)| FieldValue {
                    name: f.name.clone(),
                    children: children
                        .iter()
                        .map(|c| match c {
                            Child::Node(i) => self.build(*i),
                            Child::Token(v) => AstNode::Token(v.clone()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

fn valid_for<'g>(grammar: &'g Grammar, frontier: &Frontier<'g>) -> ValidActions<'g> {
    let reduce = frontier.field.is_some() && frontier.cardinality.accepts_reduce(frontier.count);
    if frontier.primitive {
        ValidActions {
            constructors: &[],
            reduce,
            gen_token: true,
        }
    } else {
        ValidActions {
            constructors: grammar.constructors_of(frontier.type_name),
            reduce,
            gen_token: false,
        }
    }
}

/// Runs `actions` through the transition system, returning the tree and the
/// steps with parent links.
pub fn replay(
    grammar: &Grammar,
    actions: impl IntoIterator<Item = Action>,
    traversal: Traversal,
) -> Result<(AstNode, Vec<ActionStep>), TransitionError> {
    let mut state = FrontierState::new(grammar, traversal);
    for action in actions {
        state.apply(action)?;
    }
    let tree = state.finish()?;
    Ok((tree, state.steps))
}

pub fn actions_to_ast(
    grammar: &Grammar,
    actions: &[Action],
    traversal: Traversal,
) -> Result<AstNode, TransitionError> {
    replay(grammar, actions.iter().cloned(), traversal).map(|(tree, _)| tree)
}

/// Linearizes a valid tree into its action sequence.
pub fn ast_to_actions(
    grammar: &Grammar,
    root: &AstNode,
    traversal: Traversal,
) -> Result<Vec<ActionStep>, TransitionError> {
    validate_ast(grammar, root)?;
    let mut out = Vec::with_capacity(root.size() + 4);
    let mut emit = |out: &mut Vec<ActionStep>, action: Action, parent: usize| {
        let t = out.len() + 1;
        out.push(ActionStep { t, action, parent });
        t
    };
    match traversal {
        Traversal::Preorder => {
            fn walk(
                grammar: &Grammar,
                node: &AstNode,
                parent: usize,
                out: &mut Vec<ActionStep>,
                emit: &mut dyn FnMut(&mut Vec<ActionStep>, Action, usize) -> usize,
            ) {
                let AstNode::Composite {
                    constructor,
                    fields,
                } = node
                else {
                    unreachable!("tokens are emitted by their parent")
                };
                let me = emit(out, Action::ApplyRule(constructor.clone()), parent);
                let ctor = grammar.constructor(constructor).expect("validated");
                for (spec, value) in ctor.fields.iter().zip(fields) {
                    for child in &value.children {
                        match child {
                            AstNode::Token(v) => {
                                emit(out, Action::GenToken(v.clone()), me);
                            }
                            composite => walk(grammar, composite, me, out, emit),
                        }
                    }
                    if spec.cardinality.accepts_reduce(value.children.len()) {
                        emit(out, Action::Reduce, me);
                    }
                }
            }
            walk(grammar, root, 0, &mut out, &mut emit);
        }
        Traversal::BreadthFirst => {
            let root_ctor = root.constructor().expect("validated").to_string();
            let root_t = emit(&mut out, Action::ApplyRule(root_ctor), 0);
            let mut queue = VecDeque::from([(root, root_t)]);
            while let Some((node, me)) = queue.pop_front() {
                let AstNode::Composite {
                    constructor,
                    fields,
                } = node
                else {
                    continue;
                };
                let ctor = grammar.constructor(constructor).expect("validated");
                for (spec, value) in ctor.fields.iter().zip(fields) {
                    for child in &value.children {
                        match child {
                            AstNode::Token(v) => {
                                emit(&mut out, Action::GenToken(v.clone()), me);
                            }
                            AstNode::Composite { constructor, .. } => {
                                let t = emit(&mut out, Action::ApplyRule(constructor.clone()), me);
                                queue.push_back((child, t));
                            }
                        }
                    }
                    if spec.cardinality.accepts_reduce(value.children.len()) {
                        emit(&mut out, Action::Reduce, me);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Tree depth of every step (root action = 0), following parent links.
pub fn step_depths(steps: &[ActionStep]) -> Vec<usize> {
    let mut depth = vec![0usize; steps.len()];
    for (i, s) in steps.iter().enumerate() {
        if s.parent > 0 && s.parent <= i {
            depth[i] = depth[s.parent - 1] + 1;
        }
    }
    depth
}
