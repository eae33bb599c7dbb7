//! Typed abstract syntax trees over a [`Grammar`], their validation, JSON
//! form, and the s-expression surface syntax used to render them as code.

use std::collections::HashMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::asdl::{Cardinality, Grammar};

/// Children of one constructor field, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldValue {
    pub name: String,
    pub children: Vec<AstNode>,
}

/// A realized tree. Node ids are pre-order positions, root = 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AstNode {
    Composite {
        constructor: String,
        fields: Vec<FieldValue>,
    },
    Token(String),
}

impl AstNode {
    pub fn token(value: impl Into<String>) -> Self {
        AstNode::Token(value.into())
    }

    pub fn composite<N: Into<String>>(
        constructor: impl Into<String>,
        fields: impl IntoIterator<Item = (N, Vec<AstNode>)>,
    ) -> Self {
        AstNode::Composite {
            constructor: constructor.into(),
            fields: fields
                .into_iter()
                .map(|(name, children)| FieldValue {
                    name: name.into(),
                    children,
                })
                .collect(),
        }
    }

    /// Builds a composite node taking field names from the grammar.
    ///
    /// Panics if `constructor` is unknown or the number of child lists differs
    /// from the constructor's field count.
    pub fn apply(grammar: &Grammar, constructor: &str, children: Vec<Vec<AstNode>>) -> Self {
        let ctor = grammar
            .constructor(constructor)
            .unwrap_or_else(|| panic!("unknown constructor {constructor}"));
        assert_eq!(
            ctor.fields.len(),
            children.len(),
            "field count of {constructor}"
        );
        AstNode::Composite {
            constructor: constructor.to_string(),
            fields: ctor
                .fields
                .iter()
                .zip(children)
                .map(|(f, children)| FieldValue {
                    name: f.name.clone(),
                    children,
                })
                .collect(),
        }
    }

    pub fn is_token(&self) -> bool {
        matches!(self, AstNode::Token(_))
    }

    pub fn constructor(&self) -> Option<&str> {
        match self {
            AstNode::Composite { constructor, .. } => Some(constructor),
            AstNode::Token(_) => None,
        }
    }

    /// Direct children in field order.
    pub fn children(&self) -> impl Iterator<Item = &AstNode> {
        let fields: &[FieldValue] = match self {
            AstNode::Composite { fields, .. } => fields,
            AstNode::Token(_) => &[],
        };
        fields.iter().flat_map(|f| f.children.iter())
    }

    /// Number of nodes, tokens included.
    pub fn size(&self) -> usize {
        1 + self.children().map(AstNode::size).sum::<usize>()
    }

    /// Depth of the tree; a lone node has depth 0.
    pub fn depth(&self) -> usize {
        self.children().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// Nodes in pre-order; the index of a node is its id.
    pub fn preorder(&self) -> Vec<&AstNode> {
        let mut out = Vec::with_capacity(16);
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            let children: Vec<&AstNode> = node.children().collect();
            stack.extend(children.into_iter().rev());
        }
        out
    }

    /// Parent id of every node in pre-order (`None` for the root).
    pub fn preorder_parents(&self) -> Vec<Option<usize>> {
        fn walk(node: &AstNode, parent: Option<usize>, out: &mut Vec<Option<usize>>) {
            let id = out.len();
            out.push(parent);
            for child in node.children() {
                walk(child, Some(id), out);
            }
        }
        let mut out = Vec::new();
        walk(self, None, &mut out);
        out
    }

    pub fn to_json(&self) -> Value {
        match self {
            AstNode::Token(v) => {
                let mut m = Map::new();
                m.insert("token".into(), Value::String(v.clone()));
                Value::Object(m)
            }
            AstNode::Composite {
                constructor,
                fields,
            } => {
                let mut fm = Map::new();
                for f in fields {
                    fm.insert(
                        f.name.clone(),
                        Value::Array(f.children.iter().map(AstNode::to_json).collect()),
                    );
                }
                let mut m = Map::new();
                m.insert("ctor".into(), Value::String(constructor.clone()));
                m.insert("fields".into(), Value::Object(fm));
                Value::Object(m)
            }
        }
    }

    pub fn from_json(value: &Value) -> Result<Self, String> {
        let obj = value.as_object().ok_or("AST node must be a JSON object")?;
        if let Some(tok) = obj.get("token") {
            let v = tok.as_str().ok_or("`token` must be a string")?;
            return Ok(AstNode::Token(v.to_string()));
        }
        let ctor = obj
            .get("ctor")
            .and_then(Value::as_str)
            .ok_or("AST node needs `ctor` or `token`")?;
        let mut fields = Vec::new();
        if let Some(fv) = obj.get("fields") {
            let fm = fv.as_object().ok_or("`fields` must be an object")?;
            for (name, children) in fm {
                let arr = children
                    .as_array()
                    .ok_or_else(|| format!("field `{name}` must hold an array"))?;
                fields.push(FieldValue {
                    name: name.clone(),
                    children: arr
                        .iter()
                        .map(AstNode::from_json)
                        .collect::<Result<_, _>>()?,
                });
            }
        }
        Ok(AstNode::Composite {
            constructor: ctor.to_string(),
            fields,
        })
    }
}

impl Serialize for AstNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AstNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        AstNode::from_json(&value).map_err(D::Error::custom)
    }
}

/// Token values are non-empty and contain no whitespace or parentheses.
pub fn is_valid_token(value: &str) -> bool {
    !value.is_empty()
        && !value
            .chars()
            .any(|c| c.is_whitespace() || c == '(' || c == ')')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    RootNotComposite,
    UnknownConstructor(String),
    WrongType {
        expected: String,
        found: String,
    },
    ExpectedToken {
        field: String,
    },
    ExpectedComposite {
        field: String,
    },
    FieldNames {
        expected: Vec<String>,
        found: Vec<String>,
    },
    Arity {
        field: String,
        cardinality: Cardinality,
        count: usize,
    },
    InvalidToken(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {node}: {kind}")]
pub struct Violation {
    pub node: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::RootNotComposite => write!(f, "root must be a constructor application"),
            ViolationKind::UnknownConstructor(c) => write!(f, "unknown constructor `{c}`"),
            ViolationKind::WrongType { expected, found } => {
                write!(
                    f,
                    "expected type `{expected}`, constructor builds `{found}`"
                )
            }
            ViolationKind::ExpectedToken { field } => {
                write!(f, "field `{field}` has primitive type and needs a token")
            }
            ViolationKind::ExpectedComposite { field } => {
                write!(
                    f,
                    "field `{field}` has composite type and cannot hold a token"
                )
            }
            ViolationKind::FieldNames { expected, found } => {
                write!(
                    f,
                    "fields {found:?} do not match constructor fields {expected:?}"
                )
            }
            ViolationKind::Arity {
                field,
                cardinality,
                count,
            } => write!(
                f,
                "field `{field}` ({cardinality:?}) holds {count} children"
            ),
            ViolationKind::InvalidToken(t) => write!(f, "invalid token {t:?}"),
        }
    }
}

/// Checks every node against the grammar. Reports the first violation in pre-order.
pub fn validate_ast(grammar: &Grammar, root: &AstNode) -> Result<(), Violation> {
    if root.is_token() {
        return Err(Violation {
            node: 0,
            kind: ViolationKind::RootNotComposite,
        });
    }
    let mut next_id = 0;
    check_node(grammar, root, grammar.root_type(), &mut next_id)
}

fn check_node(
    grammar: &Grammar,
    node: &AstNode,
    expected_type: &str,
    next_id: &mut usize,
) -> Result<(), Violation> {
    let id = *next_id;
    *next_id += 1;
    let fail = |kind| Err(Violation { node: id, kind });

    let (constructor, fields) = match node {
        AstNode::Token(v) => {
            return if is_valid_token(v) {
                Ok(())
            } else {
                fail(ViolationKind::InvalidToken(v.clone()))
            };
        }
        AstNode::Composite {
            constructor,
            fields,
        } => (constructor, fields),
    };
    let Some(ctor) = grammar.constructor(constructor) else {
        return fail(ViolationKind::UnknownConstructor(constructor.clone()));
    };
    if ctor.result_type != expected_type {
        return fail(ViolationKind::WrongType {
            expected: expected_type.to_string(),
            found: ctor.result_type.clone(),
        });
    }
    let names_match = ctor.fields.len() == fields.len()
        && ctor
            .fields
            .iter()
            .zip(fields)
            .all(|(a, b)| a.name == b.name);
    if !names_match {
        return fail(ViolationKind::FieldNames {
            expected: ctor.fields.iter().map(|f| f.name.clone()).collect(),
            found: fields.iter().map(|f| f.name.clone()).collect(),
        });
    }
    for (spec, value) in ctor.fields.iter().zip(fields) {
        let count = value.children.len();
        let arity_ok = match spec.cardinality {
            Cardinality::Single => count == 1,
            Cardinality::Optional => count <= 1,
            Cardinality::Multiple => true,
        };
        if !arity_ok {
            return fail(ViolationKind::Arity {
                field: spec.name.clone(),
                cardinality: spec.cardinality,
                count,
            });
        }
    }
    for (spec, value) in ctor.fields.iter().zip(fields) {
        let primitive = grammar.is_primitive(&spec.type_name);
        for child in &value.children {
            match (primitive, child.is_token()) {
                (true, false) => {
                    return Err(Violation {
                        node: *next_id,
                        kind: ViolationKind::ExpectedToken {
                            field: spec.name.clone(),
                        },
                    })
                }
                (false, true) => {
                    return Err(Violation {
                        node: *next_id,
                        kind: ViolationKind::ExpectedComposite {
                            field: spec.name.clone(),
                        },
                    })
                }
                _ => check_node(grammar, child, &spec.type_name, next_id)?,
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("tokenization error: {0}")]
    Tokenize(String),
    #[error("unknown head symbol `{0}`")]
    UnknownHead(String),
    #[error("no rendering template for constructor `{0}`")]
    NoTemplate(String),
    #[error("arity mismatch in `{head}`: {message}")]
    Arity { head: String, message: String },
    #[error("type mismatch: expected `{expected}`, found {found}")]
    Type { expected: String, found: String },
    #[error("invalid surface syntax: {0}")]
    Syntax(String),
}

/// How a constructor is written in code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    /// `( head child ... )`
    Sexp(String),
    /// The constructor's single token, written bare.
    Bare,
}

/// Constructor → surface template table for s-expression code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SurfaceSyntax {
    heads: HashMap<String, Head>,
}

impl SurfaceSyntax {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, constructor: impl Into<String>, head: Head) -> Self {
        self.heads.insert(constructor.into(), head);
        self
    }

    /// Every constructor written as `( CtorName ... )`.
    pub fn generic(grammar: &Grammar) -> Self {
        let heads = grammar
            .constructors()
            .iter()
            .map(|c| (c.name.clone(), Head::Sexp(c.name.clone())))
            .collect();
        SurfaceSyntax { heads }
    }

    pub fn head(&self, constructor: &str) -> Option<&Head> {
        self.heads.get(constructor)
    }

    /// Checks the table can be parsed back unambiguously under `grammar`.
    pub fn check(&self, grammar: &Grammar) -> Result<(), CodeError> {
        let mut seen_heads: HashMap<&str, &str> = HashMap::new();
        let mut bare_types: HashMap<&str, &str> = HashMap::new();
        for ctor in grammar.constructors() {
            match self.heads.get(&ctor.name) {
                None => return Err(CodeError::NoTemplate(ctor.name.clone())),
                Some(Head::Sexp(h)) => {
                    if !is_valid_token(h) {
                        return Err(CodeError::Syntax(format!(
                            "head {h:?} is not a valid token"
                        )));
                    }
                    if let Some(other) = seen_heads.insert(h, &ctor.name) {
                        return Err(CodeError::Syntax(format!(
                            "head `{h}` used by both `{other}` and `{}`",
                            ctor.name
                        )));
                    }
                }
                Some(Head::Bare) => {
                    let ok = ctor.fields.len() == 1
                        && ctor.fields[0].cardinality == Cardinality::Single
                        && grammar.is_primitive(&ctor.fields[0].type_name);
                    if !ok {
                        return Err(CodeError::Syntax(format!(
                            "bare constructor `{}` must have exactly one single primitive field",
                            ctor.name
                        )));
                    }
                    if let Some(other) = bare_types.insert(&ctor.result_type, &ctor.name) {
                        return Err(CodeError::Syntax(format!(
                            "type `{}` has two bare constructors (`{other}`, `{}`)",
                            ctor.result_type, ctor.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn bare_constructor<'g>(&self, grammar: &'g Grammar, type_name: &str) -> Option<&'g str> {
        grammar
            .constructors_of(type_name)
            .iter()
            .map(|&id| grammar.constructors()[id].name.as_str())
            .find(|name| self.heads.get(*name) == Some(&Head::Bare))
    }

    fn constructor_for_head(&self, head: &str) -> Option<&str> {
        self.heads.iter().find_map(|(ctor, h)| match h {
            Head::Sexp(s) if s == head => Some(ctor.as_str()),
            _ => None,
        })
    }
}

/// Renders a tree as normalized code text.
pub fn ast_to_code(root: &AstNode, syntax: &SurfaceSyntax) -> Result<String, CodeError> {
    let mut tokens = Vec::new();
    render(root, syntax, &mut tokens)?;
    Ok(tokens.join(" "))
}

fn render(node: &AstNode, syntax: &SurfaceSyntax, out: &mut Vec<String>) -> Result<(), CodeError> {
    match node {
        AstNode::Token(v) => out.push(v.clone()),
        AstNode::Composite { constructor, .. } => match syntax.head(constructor) {
            None => return Err(CodeError::NoTemplate(constructor.clone())),
            Some(Head::Bare) => {
                let mut children = node.children();
                match (children.next(), children.next()) {
                    (Some(AstNode::Token(v)), None) => out.push(v.clone()),
                    _ => {
                        return Err(CodeError::Syntax(format!(
                            "bare constructor `{constructor}` needs exactly one token child"
                        )))
                    }
                }
            }
            Some(Head::Sexp(head)) => {
                out.push("(".into());
                out.push(head.clone());
                for child in node.children() {
                    render(child, syntax, out)?;
                }
                out.push(")".into());
            }
        },
    }
    Ok(())
}

/// Splits code into tokens; parentheses are always tokens of their own.
pub fn tokenize_code(code: &str) -> Result<Vec<String>, CodeError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in code.chars() {
        if c.is_whitespace() || c == '(' || c == ')' {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if c == '(' || c == ')' {
                tokens.push(c.to_string());
            }
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    if tokens.is_empty() {
        return Err(CodeError::Tokenize("empty input".into()));
    }
    Ok(tokens)
}

/// Canonical spacing: tokens separated by single spaces.
pub fn normalize_code(code: &str) -> String {
    tokenize_code(code).map(|t| t.join(" ")).unwrap_or_default()
}

enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn read_sexp(tokens: &[String]) -> Result<Sexp, CodeError> {
    fn read(tokens: &[String], pos: &mut usize) -> Result<Sexp, CodeError> {
        let Some(tok) = tokens.get(*pos) else {
            return Err(CodeError::Tokenize("unexpected end of input".into()));
        };
        *pos += 1;
        match tok.as_str() {
            ")" => Err(CodeError::Tokenize(format!(
                "unbalanced `)` at token {}",
                *pos
            ))),
            "(" => {
                let mut items = Vec::new();
                loop {
                    match tokens.get(*pos).map(String::as_str) {
                        None => return Err(CodeError::Tokenize("unclosed `(`".into())),
                        Some(")") => {
                            *pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(read(tokens, pos)?),
                    }
                }
            }
            _ => Ok(Sexp::Atom(tok.clone())),
        }
    }
    let mut pos = 0;
    let expr = read(tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(CodeError::Tokenize(format!(
            "trailing input after token {pos}: `{}`",
            tokens[pos]
        )));
    }
    Ok(expr)
}

/// Parses code into a tree of the grammar's root type.
pub fn code_to_ast(
    grammar: &Grammar,
    syntax: &SurfaceSyntax,
    code: &str,
) -> Result<AstNode, CodeError> {
    let tokens = tokenize_code(code)?;
    let sexp = read_sexp(&tokens)?;
    interpret(grammar, syntax, &sexp, grammar.root_type())
}

fn fits(grammar: &Grammar, syntax: &SurfaceSyntax, item: &Sexp, type_name: &str) -> bool {
    if grammar.is_primitive(type_name) {
        return matches!(item, Sexp::Atom(_));
    }
    match item {
        Sexp::Atom(_) => syntax.bare_constructor(grammar, type_name).is_some(),
        Sexp::List(items) => match items.first() {
            Some(Sexp::Atom(head)) => syntax
                .constructor_for_head(head)
                .and_then(|c| grammar.constructor(c))
                .is_some_and(|c| c.result_type == type_name),
            _ => false,
        },
    }
}

fn interpret(
    grammar: &Grammar,
    syntax: &SurfaceSyntax,
    sexp: &Sexp,
    type_name: &str,
) -> Result<AstNode, CodeError> {
    match sexp {
        Sexp::Atom(a) => {
            let Some(ctor) = syntax.bare_constructor(grammar, type_name) else {
                return Err(CodeError::Type {
                    expected: type_name.to_string(),
                    found: format!("bare token `{a}`"),
                });
            };
            Ok(AstNode::apply(
                grammar,
                ctor,
                vec![vec![AstNode::token(a.clone())]],
            ))
        }
        Sexp::List(items) => {
            let head = match items.first() {
                Some(Sexp::Atom(h)) => h,
                Some(Sexp::List(_)) => {
                    return Err(CodeError::Syntax("list head must be a symbol".into()))
                }
                None => return Err(CodeError::Syntax("empty list `( )`".into())),
            };
            let ctor_name = syntax
                .constructor_for_head(head)
                .ok_or_else(|| CodeError::UnknownHead(head.clone()))?;
            let ctor = grammar
                .constructor(ctor_name)
                .ok_or_else(|| CodeError::UnknownHead(head.clone()))?;
            if ctor.result_type != type_name {
                return Err(CodeError::Type {
                    expected: type_name.to_string(),
                    found: format!("`{head}` of type `{}`", ctor.result_type),
                });
            }
            let rest = &items[1..];
            let mut pos = 0;
            let mut fields = Vec::with_capacity(ctor.fields.len());
            for field in &ctor.fields {
                let mut children = Vec::new();
                let take = |pos: usize| {
                    rest.get(pos)
                        .filter(|item| fits(grammar, syntax, item, &field.type_name))
                };
                match field.cardinality {
                    Cardinality::Single => {
                        let Some(item) = rest.get(pos) else {
                            return Err(CodeError::Arity {
                                head: head.clone(),
                                message: format!("missing field `{}`", field.name),
                            });
                        };
                        children.push(interpret_child(grammar, syntax, item, &field.type_name)?);
                        pos += 1;
                    }
                    Cardinality::Optional => {
                        if let Some(item) = take(pos) {
                            children.push(interpret_child(
                                grammar,
                                syntax,
                                item,
                                &field.type_name,
                            )?);
                            pos += 1;
                        }
                    }
                    Cardinality::Multiple => {
                        while let Some(item) = take(pos) {
                            children.push(interpret_child(
                                grammar,
                                syntax,
                                item,
                                &field.type_name,
                            )?);
                            pos += 1;
                        }
                    }
                }
                fields.push(children);
            }
            if pos != rest.len() {
                return Err(CodeError::Arity {
                    head: head.clone(),
                    message: format!("{} unexpected trailing argument(s)", rest.len() - pos),
                });
            }
            Ok(AstNode::apply(grammar, ctor_name, fields))
        }
    }
}

fn interpret_child(
    grammar: &Grammar,
    syntax: &SurfaceSyntax,
    item: &Sexp,
    type_name: &str,
) -> Result<AstNode, CodeError> {
    if grammar.is_primitive(type_name) {
        return match item {
            Sexp::Atom(a) => Ok(AstNode::token(a.clone())),
            Sexp::List(_) => Err(CodeError::Type {
                expected: type_name.to_string(),
                found: "a list".into(),
            }),
        };
    }
    interpret(grammar, syntax, item, type_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asdl::parse_grammar;
    use crate::corpus::{toy_grammar, toy_syntax};

    fn fig2() -> Grammar {
        parse_grammar(
            "primitive identifier\nmod = Module(stmt* body)\nstmt = Expr(expr value)\nexpr = Attribute(expr value, identifier attr) | Name(identifier id)\n",
        )
        .unwrap()
    }

    fn fig2_tree(g: &Grammar) -> AstNode {
        let name = AstNode::apply(g, "Name", vec![vec![AstNode::token("x")]]);
        let attr = AstNode::apply(
            g,
            "Attribute",
            vec![vec![name], vec![AstNode::token("append")]],
        );
        let expr = AstNode::apply(g, "Expr", vec![vec![attr]]);
        AstNode::apply(g, "Module", vec![vec![expr]])
    }

    #[test]
    fn fig2_tree_validates() {
        let g = fig2();
        let tree = fig2_tree(&g);
        assert_eq!(validate_ast(&g, &tree), Ok(()));
        assert_eq!(tree.size(), 6);
        assert_eq!(
            tree.preorder_parents(),
            vec![None, Some(0), Some(1), Some(2), Some(3), Some(2)]
        );
    }

    #[test]
    fn token_root_is_rejected() {
        let g = fig2();
        let err = validate_ast(&g, &AstNode::token("x")).unwrap_err();
        assert_eq!(err.node, 0);
        assert_eq!(err.kind, ViolationKind::RootNotComposite);
    }

    #[test]
    fn attribute_with_missing_child() {
        let g = fig2();
        let name = AstNode::apply(&g, "Name", vec![vec![AstNode::token("x")]]);
        let attr = AstNode::apply(&g, "Attribute", vec![vec![name], vec![]]);
        let tree = AstNode::apply(
            &g,
            "Module",
            vec![vec![AstNode::apply(&g, "Expr", vec![vec![attr]])]],
        );
        let err = validate_ast(&g, &tree).unwrap_err();
        assert_eq!(err.node, 2);
        assert!(
            matches!(err.kind, ViolationKind::Arity { ref field, count: 0, .. } if field == "attr")
        );
    }

    #[test]
    fn type_mismatches_are_located() {
        let g = fig2();
        // Name placed where a stmt is expected.
        let bad = AstNode::apply(
            &g,
            "Module",
            vec![vec![AstNode::apply(
                &g,
                "Name",
                vec![vec![AstNode::token("x")]],
            )]],
        );
        let err = validate_ast(&g, &bad).unwrap_err();
        assert_eq!(err.node, 1);
        assert!(matches!(err.kind, ViolationKind::WrongType { .. }));
        // composite where a token is required
        let inner = AstNode::apply(&g, "Name", vec![vec![AstNode::token("x")]]);
        let bad = AstNode::apply(&g, "Name", vec![vec![inner]]);
        let bad = AstNode::apply(
            &g,
            "Module",
            vec![vec![AstNode::apply(&g, "Expr", vec![vec![bad]])]],
        );
        let err = validate_ast(&g, &bad).unwrap_err();
        assert_eq!(err.node, 3);
        assert!(matches!(err.kind, ViolationKind::ExpectedToken { .. }));
        let bad_token = AstNode::apply(&g, "Name", vec![vec![AstNode::token("a b")]]);
        let bad = AstNode::apply(
            &g,
            "Module",
            vec![vec![AstNode::apply(&g, "Expr", vec![vec![bad_token]])]],
        );
        assert_eq!(validate_ast(&g, &bad).unwrap_err().node, 3);
    }

    #[test]
    fn renders_table_forms() {
        let g = toy_grammar();
        let syntax = toy_syntax();
        let var = AstNode::apply(&g, "Var", vec![vec![AstNode::token("r0")]]);
        let len = AstNode::apply(&g, "Len", vec![vec![var]]);
        assert_eq!(ast_to_code(&len, &syntax).unwrap(), "( len:i r0 )");
        let c0 = AstNode::apply(&g, "Var", vec![vec![AstNode::token("c0")]]);
        assert_eq!(ast_to_code(&c0, &syntax).unwrap(), "c0");
        let unknown = AstNode::composite("Mystery", Vec::<(String, Vec<AstNode>)>::new());
        assert_eq!(
            ast_to_code(&unknown, &syntax),
            Err(CodeError::NoTemplate("Mystery".into()))
        );
    }

    #[test]
    fn parses_table_forms() {
        let g = toy_grammar();
        let syntax = toy_syntax();
        let len = code_to_ast(&g, &syntax, "( len:i r0 )").unwrap();
        let expected = AstNode::apply(
            &g,
            "Len",
            vec![vec![AstNode::apply(
                &g,
                "Var",
                vec![vec![AstNode::token("r0")]],
            )]],
        );
        assert_eq!(len, expected);

        let code = "( argmax $0 ( and ( place:t $0 ) ( loc:t $0 c0 ) ) ( elevation:i $0 ) )";
        let tree = code_to_ast(&g, &syntax, code).unwrap();
        assert_eq!(tree.constructor(), Some("Argmax"));
        assert_eq!(tree.children().count(), 3);
        assert_eq!(validate_ast(&g, &tree), Ok(()));
        assert_eq!(ast_to_code(&tree, &syntax).unwrap(), code);
    }

    #[test]
    fn parse_errors() {
        let g = toy_grammar();
        let syntax = toy_syntax();
        assert!(matches!(
            code_to_ast(&g, &syntax, ""),
            Err(CodeError::Tokenize(_))
        ));
        assert!(matches!(
            code_to_ast(&g, &syntax, "   "),
            Err(CodeError::Tokenize(_))
        ));
        assert!(matches!(
            code_to_ast(&g, &syntax, "( len:i r0"),
            Err(CodeError::Tokenize(_))
        ));
        assert!(matches!(
            code_to_ast(&g, &syntax, "( len:i r0 ) )"),
            Err(CodeError::Tokenize(_))
        ));
        assert!(matches!(
            code_to_ast(&g, &syntax, "( size:i r0 )"),
            Err(CodeError::UnknownHead(_))
        ));
        assert!(matches!(
            code_to_ast(&g, &syntax, "( len:i r0 r1 )"),
            Err(CodeError::Arity { .. })
        ));
        assert!(matches!(
            code_to_ast(&g, &syntax, "( len:i )"),
            Err(CodeError::Arity { .. })
        ));
    }

    #[test]
    fn normalization_is_idempotent() {
        assert_eq!(normalize_code("(len:i   r0)"), "( len:i r0 )");
        assert_eq!(
            normalize_code(&normalize_code("(len:i   r0)\n")),
            "( len:i r0 )"
        );
    }

    #[test]
    fn json_shape() {
        let g = fig2();
        let tree = fig2_tree(&g);
        let json = tree.to_json();
        assert_eq!(json["ctor"], "Module");
        assert_eq!(
            json["fields"]["body"][0]["fields"]["value"][0]["ctor"],
            "Attribute"
        );
        assert_eq!(
            json["fields"]["body"][0]["fields"]["value"][0]["fields"]["attr"][0]["token"],
            "append"
        );
        let text = serde_json::to_string(&tree).unwrap();
        let back: AstNode = serde_json::from_str(&text).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn generic_syntax_round_trips() {
        let g = fig2();
        let syntax = SurfaceSyntax::generic(&g);
        syntax.check(&g).unwrap();
        let tree = fig2_tree(&g);
        let code = ast_to_code(&tree, &syntax).unwrap();
        assert_eq!(code, "( Module ( Expr ( Attribute ( Name x ) append ) ) )");
        assert_eq!(code_to_ast(&g, &syntax, &code).unwrap(), tree);
    }
}
