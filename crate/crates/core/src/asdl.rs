//! ASDL-style grammar definitions.
//!
//! The accepted text format is line oriented:
//!
//! ```text
//! -- comments start with `--` or `#`
//! primitive identifier, string
//! root mod
//! mod  = Module(stmt* body)
//! stmt = Expr(expr value)
//! expr = Attribute(expr value, identifier attr) | Name(identifier id)
//!      | Call(expr func, expr* args)
//! ```
//!
//! A field is `type name`, where the type may carry a `*` (multiple) or `?`
//! (optional) cardinality suffix. Lines starting with `|` continue the
//! previous rule. Without a `root` directive the first composite type is the
//! root.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source line, result type and `(line, constructor)` alternatives.
type Rule = (usize, String, Vec<(usize, Constructor)>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: undeclared type `{name}`")]
    UndeclaredType { line: usize, name: String },
    #[error("line {line}: duplicate constructor `{name}`")]
    DuplicateConstructor { line: usize, name: String },
    #[error("line {line}: type `{name}` is defined twice")]
    DuplicateType { line: usize, name: String },
    #[error("line {line}: constructor `{constructor}` has two fields named `{field}`")]
    DuplicateField {
        line: usize,
        constructor: String,
        field: String,
    },
    #[error("line {line}: `{name}` is declared both primitive and composite")]
    TypeKindClash { line: usize, name: String },
    #[error("root type `{0}` is not a composite type")]
    BadRoot(String),
    #[error("grammar declares no root type")]
    NoRootType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    Single,
    /// `?`
    Optional,
    /// `*`
    Multiple,
}

impl Cardinality {
    pub fn suffix(self) -> &'static str {
        match self {
            Cardinality::Single => "",
            Cardinality::Optional => "?",
            Cardinality::Multiple => "*",
        }
    }

    /// Can the field be closed (by `Reduce`) after `count` children?
    pub fn accepts_reduce(self, count: usize) -> bool {
        match self {
            Cardinality::Single => false,
            Cardinality::Optional => count == 0,
            Cardinality::Multiple => true,
        }
    }

    /// Is the field finished without an explicit `Reduce` after `count` children?
    pub fn is_saturated(self, count: usize) -> bool {
        match self {
            Cardinality::Single | Cardinality::Optional => count >= 1,
            Cardinality::Multiple => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub type_name: String,
    pub cardinality: Cardinality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constructor {
    pub name: String,
    pub result_type: String,
    pub fields: Vec<Field>,
}

impl fmt::Display for Constructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if self.fields.is_empty() {
            return Ok(());
        }
        write!(f, "(")?;
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "{}{} {}",
                field.type_name,
                field.cardinality.suffix(),
                field.name
            )?;
        }
        write!(f, ")")
    }
}

/// A validated grammar. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    primitive_types: Vec<String>,
    composite_types: Vec<String>,
    constructors: Vec<Constructor>,
    root_type: String,
    by_name: HashMap<String, usize>,
    by_type: HashMap<String, Vec<usize>>,
}

pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    Grammar::parse(text)
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let lines = logical_lines(text)?;

        let mut primitive_types: Vec<String> = Vec::new();
        let mut root: Option<(usize, String)> = None;
        let mut rules: Vec<Rule> = Vec::new();

        for line in &lines {
            let mut cur = Cursor::new(&line.text, line.number);
            let head = cur.ident()?;
            match head.as_str() {
                "primitive" if !cur.peek_is('=') => loop {
                    let name = cur.ident()?;
                    if primitive_types.contains(&name) {
                        return Err(GrammarError::DuplicateType {
                            line: line.number,
                            name,
                        });
                    }
                    primitive_types.push(name);
                    if cur.at_end() {
                        break;
                    }
                    cur.expect(',')?;
                },
                "root" if !cur.peek_is('=') => {
                    root = Some((line.number, cur.ident()?));
                    cur.finish()?;
                }
                _ => {
                    cur.expect('=')?;
                    let mut ctors = Vec::new();
                    loop {
                        ctors.push((line.number, cur.constructor(&head)?));
                        if cur.at_end() {
                            break;
                        }
                        cur.expect('|')?;
                    }
                    rules.push((line.number, head, ctors));
                }
            }
        }

        let mut composite_types = Vec::new();
        for (line, name, _) in &rules {
            if composite_types.contains(name) {
                return Err(GrammarError::DuplicateType {
                    line: *line,
                    name: name.clone(),
                });
            }
            if primitive_types.contains(name) {
                return Err(GrammarError::TypeKindClash {
                    line: *line,
                    name: name.clone(),
                });
            }
            composite_types.push(name.clone());
        }

        let mut constructors = Vec::new();
        let mut by_name = HashMap::new();
        let mut by_type: HashMap<String, Vec<usize>> = HashMap::new();
        for (_, type_name, ctors) in rules {
            for (line, ctor) in ctors {
                for field in &ctor.fields {
                    if !primitive_types.contains(&field.type_name)
                        && !composite_types.contains(&field.type_name)
                    {
                        return Err(GrammarError::UndeclaredType {
                            line,
                            name: field.type_name.clone(),
                        });
                    }
                }
                if by_name.contains_key(&ctor.name) {
                    return Err(GrammarError::DuplicateConstructor {
                        line,
                        name: ctor.name,
                    });
                }
                let id = constructors.len();
                by_name.insert(ctor.name.clone(), id);
                by_type.entry(type_name.clone()).or_default().push(id);
                constructors.push(ctor);
            }
        }

        let root_type = match root {
            Some((_, name)) => {
                if !composite_types.contains(&name) {
                    return Err(GrammarError::BadRoot(name));
                }
                name
            }
            None => composite_types
                .first()
                .cloned()
                .ok_or(GrammarError::NoRootType)?,
        };

        Ok(Grammar {
            primitive_types,
            composite_types,
            constructors,
            root_type,
            by_name,
            by_type,
        })
    }

    pub fn root_type(&self) -> &str {
        &self.root_type
    }

    pub fn primitive_types(&self) -> &[String] {
        &self.primitive_types
    }

    pub fn composite_types(&self) -> &[String] {
        &self.composite_types
    }

    /// All constructors in declaration order; the position is the constructor id.
    pub fn constructors(&self) -> &[Constructor] {
        &self.constructors
    }

    pub fn constructor(&self, name: &str) -> Option<&Constructor> {
        self.by_name.get(name).map(|&id| &self.constructors[id])
    }

    pub fn constructor_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Ids of every constructor whose result type is `type_name`.
    pub fn constructors_of(&self, type_name: &str) -> &[usize] {
        self.by_type
            .get(type_name)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn is_primitive(&self, type_name: &str) -> bool {
        self.primitive_types.iter().any(|t| t == type_name)
    }

    pub fn is_composite(&self, type_name: &str) -> bool {
        self.by_type.contains_key(type_name)
    }

    /// Canonical text form; parses back to an equal grammar.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.primitive_types.is_empty() {
            out.push_str("primitive ");
            out.push_str(&self.primitive_types.join(", "));
            out.push('\n');
        }
        out.push_str(&format!("root {}\n", self.root_type));
        for ty in &self.composite_types {
            let alts: Vec<String> = self
                .constructors_of(ty)
                .iter()
                .map(|&id| self.constructors[id].to_string())
                .collect();
            out.push_str(&format!("{} = {}\n", ty, alts.join(" | ")));
        }
        out
    }

    /// Human-readable constructor table (one constructor per row).
    pub fn constructor_table(&self) -> String {
        let width = self
            .constructors
            .iter()
            .map(|c| c.result_type.len())
            .max()
            .unwrap_or(0)
            .max(4);
        let mut out = format!("{:<4}  {:<width$}  constructor\n", "id", "type");
        for (id, ctor) in self.constructors.iter().enumerate() {
            let marker = if ctor.result_type == self.root_type {
                "*"
            } else {
                ""
            };
            out.push_str(&format!(
                "{:<4}  {:<width$}  {}{}\n",
                id, ctor.result_type, ctor, marker
            ));
        }
        out.push_str(&format!(
            "root: {}; primitives: {}\n",
            self.root_type,
            if self.primitive_types.is_empty() {
                "-".to_string()
            } else {
                self.primitive_types.join(", ")
            }
        ));
        out
    }
}

struct LogicalLine {
    number: usize,
    text: String,
}

/// Strips comments and folds `|` continuation lines into the preceding rule.
fn logical_lines(text: &str) -> Result<Vec<LogicalLine>, GrammarError> {
    let mut out: Vec<LogicalLine> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let mut line = raw;
        if let Some(pos) = line.find("--") {
            line = &line[..pos];
        }
        if let Some(pos) = line.find('#') {
            line = &line[..pos];
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('|') {
            match out.last_mut() {
                Some(prev) if prev.text.contains('=') => {
                    prev.text.push(' ');
                    prev.text.push_str(trimmed);
                }
                _ => {
                    return Err(GrammarError::Syntax {
                        line: number,
                        column: raw.find('|').unwrap_or(0) + 1,
                        message: "continuation line without a preceding rule".into(),
                    })
                }
            }
            continue;
        }
        out.push(LogicalLine {
            number,
            text: line.to_string(),
        });
    }
    Ok(out)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(text: &str, line: usize) -> Self {
        Cursor {
            chars: text.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.skip_ws();
        self.chars.get(self.pos) == Some(&c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek_is(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), GrammarError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = match self.chars.get(self.pos) {
                Some(ch) => format!("`{ch}`"),
                None => "end of line".to_string(),
            };
            Err(self.error(format!("expected `{c}`, found {found}")))
        }
    }

    fn finish(&mut self) -> Result<(), GrammarError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    fn ident(&mut self) -> Result<String, GrammarError> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == '_' => self.pos += 1,
            _ => return Err(self.error("expected an identifier")),
        }
        while let Some(c) = self.chars.get(self.pos) {
            if c.is_ascii_alphanumeric() || *c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn constructor(&mut self, result_type: &str) -> Result<Constructor, GrammarError> {
        let name = self.ident()?;
        let mut fields: Vec<Field> = Vec::new();
        if self.eat('(') && !self.eat(')') {
            loop {
                let field_start = self.pos;
                let type_name = self.ident()?;
                let cardinality = if self.eat('*') {
                    Cardinality::Multiple
                } else if self.eat('?') {
                    Cardinality::Optional
                } else {
                    Cardinality::Single
                };
                let field_name = self.ident()?;
                if fields.iter().any(|f| f.name == field_name) {
                    self.pos = field_start;
                    return Err(GrammarError::DuplicateField {
                        line: self.line,
                        constructor: name,
                        field: field_name,
                    });
                }
                fields.push(Field {
                    name: field_name,
                    type_name,
                    cardinality,
                });
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        Ok(Constructor {
            name,
            result_type: result_type.to_string(),
            fields,
        })
    }
}
