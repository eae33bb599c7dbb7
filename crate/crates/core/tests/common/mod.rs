#![allow(dead_code)]

use rand::Rng;
use seq2tree::asdl::{Cardinality, Grammar};
use seq2tree::AstNode;

pub const TOKENS: &[&str] = &["$0", "$1", "c0", "c1", "r0", "r1", "s0", "s1"];

/// Random tree of `grammar` using roughly `budget` nodes.
pub fn random_tree<R: Rng>(grammar: &Grammar, rng: &mut R, budget: usize) -> AstNode {
    let mut left = budget;
    grow(grammar, grammar.root_type(), rng, &mut left, 0)
}

fn grow<R: Rng>(g: &Grammar, ty: &str, rng: &mut R, left: &mut usize, depth: usize) -> AstNode {
    let ids = g.constructors_of(ty);
    let composite_singles = |id: usize| {
        g.constructors()[id]
            .fields
            .iter()
            .filter(|f| f.cardinality == Cardinality::Single && g.is_composite(&f.type_name))
            .count()
    };
    let id = if *left < 6 || depth > 25 {
        *ids.iter().min_by_key(|&&id| composite_singles(id)).unwrap()
    } else {
        ids[rng.random_range(0..ids.len())]
    };
    *left = left.saturating_sub(1);
    let ctor = &g.constructors()[id];
    let mut children = Vec::new();
    for f in &ctor.fields {
        let count = match f.cardinality {
            Cardinality::Single => 1,
            Cardinality::Optional => usize::from(*left > 4 && rng.random_bool(0.5)),
            Cardinality::Multiple if *left > 6 => rng.random_range(0..=4),
            Cardinality::Multiple => 0,
        };
        let mut values = Vec::new();
        for _ in 0..count {
            if g.is_primitive(&f.type_name) {
                *left = left.saturating_sub(1);
                values.push(AstNode::token(TOKENS[rng.random_range(0..TOKENS.len())]));
            } else {
                values.push(grow(g, &f.type_name, rng, left, depth + 1));
            }
        }
        children.push(values);
    }
    AstNode::apply(g, &ctor.name, children)
}

/// Pre-order parent array of a random recursive tree with `n` nodes.
pub fn random_shape<R: Rng>(rng: &mut R, n: usize) -> Vec<Option<usize>> {
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = rng.random_range(0..i);
        kids[p].push(i);
    }
    let mut label = vec![0usize; n];
    let mut parents = vec![None; n];
    let mut next = 0;
    let mut stack = vec![(0usize, None::<usize>)];
    while let Some((node, parent)) = stack.pop() {
        label[node] = next;
        parents[next] = parent;
        next += 1;
        for &k in kids[node].iter().rev() {
            stack.push((k, Some(label[node])));
        }
    }
    parents
}

/// Grammar with every cardinality and a deep recursion.
pub const MIXED_GRAMMAR: &str = "\
primitive identifier
root stmt
stmt = Block(stmt* body) | Assign(identifier* targets, expr value) | Pass | If(expr test, stmt body, stmt? orelse)
expr = Call(expr func, expr* args) | Name(identifier id) | Attr(expr value, identifier attr) | Lambda(identifier? arg, expr body)
";
