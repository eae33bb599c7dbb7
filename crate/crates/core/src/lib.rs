//! Grammar-constrained sequence-to-tree code generation: ASDL grammars, the
//! ApplyRule/Reduce/GenToken transition system, tree position vectors,
//! position-weighted training loss, a small attentional model and metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aploss;
pub mod asdl;
pub mod ast;
pub mod astvec;
pub mod corpus;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod transition;

pub use asdl::{parse_grammar, Cardinality, Grammar, GrammarError};
pub use ast::{ast_to_code, code_to_ast, validate_ast, AstNode, SurfaceSyntax};
pub use astvec::{ast2vec, displacement, vec2parents, vec_norm, NodeVector};
pub use scalar::Scalar;
pub use transition::{
    actions_to_ast, ast_to_actions, Action, ActionStep, FrontierState, Traversal,
};

pub type LossConfig32 = aploss::LossConfig<f32>;
pub type LossConfig64 = aploss::LossConfig<f64>;

pub type Model32 = model::Model<f32>;
pub type Model64 = model::Model<f64>;
