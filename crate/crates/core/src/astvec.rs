//! Two-dimensional position vectors for tree nodes.
//!
//! Walking the nodes in order, the root gets `(0, 0)`; the first child seen
//! for a parent sits directly below it at `(parent.depth + 1, parent.horiz)`;
//! every later child opens a new column `(parent.depth + 1, maxn + 1)` where
//! `maxn` counts the columns opened so far. Under pre-order the vectors are
//! pairwise distinct and the parent of any node can be recovered from the
//! vectors alone.

use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

use crate::transition::ActionStep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeVector {
    pub depth: u32,
    pub horiz: u32,
}

impl NodeVector {
    pub const ROOT: NodeVector = NodeVector { depth: 0, horiz: 0 };

    pub fn new(depth: u32, horiz: u32) -> Self {
        NodeVector { depth, horiz }
    }

    /// Euclidean norm.
    pub fn norm(self) -> f64 {
        f64::from(self.depth).hypot(f64::from(self.horiz))
    }
}

impl fmt::Display for NodeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.depth, self.horiz)
    }
}

/// Signed difference between two node vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Displacement {
    pub depth: i64,
    pub horiz: i64,
}

impl Add for Displacement {
    type Output = Displacement;

    fn add(self, rhs: Self) -> Self {
        Displacement {
            depth: self.depth + rhs.depth,
            horiz: self.horiz + rhs.horiz,
        }
    }
}

impl Sub for NodeVector {
    type Output = Displacement;

    fn sub(self, rhs: Self) -> Displacement {
        displacement(rhs, self)
    }
}

/// `b - a`, component-wise.
pub fn displacement(a: NodeVector, b: NodeVector) -> Displacement {
    Displacement {
        depth: i64::from(b.depth) - i64::from(a.depth),
        horiz: i64::from(b.horiz) - i64::from(a.horiz),
    }
}

pub fn vec_norm(v: NodeVector) -> f64 {
    v.norm()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstVecError {
    #[error("node {index} names parent {parent}, which does not precede it")]
    InconsistentParent { index: usize, parent: usize },
    #[error("node {index} is a second root")]
    ExtraRoot { index: usize },
    #[error("no parent candidate for node {index} at {vector}")]
    NoParent { index: usize, vector: NodeVector },
    #[error("first vector must be the root (0, 0), found {0}")]
    BadRoot(NodeVector),
}

/// Vectorizes nodes given each node's parent (`None` only for the first).
///
/// Parents must precede their children; any such order is accepted.
pub fn ast2vec_parents(parents: &[Option<usize>]) -> Result<Vec<NodeVector>, AstVecError> {
    let mut vectors = Vec::with_capacity(parents.len());
    let mut has_child = vec![false; parents.len()];
    let mut maxn: u32 = 0;
    for (index, parent) in parents.iter().enumerate() {
        let Some(p) = *parent else {
            if index > 0 {
                return Err(AstVecError::ExtraRoot { index });
            }
            vectors.push(NodeVector::ROOT);
            continue;
        };
        if p >= index {
            return Err(AstVecError::InconsistentParent { index, parent: p });
        }
        let pv: NodeVector = vectors[p];
        let v = if !has_child[p] {
            has_child[p] = true;
            NodeVector::new(pv.depth + 1, pv.horiz)
        } else {
            maxn += 1;
            NodeVector::new(pv.depth + 1, maxn)
        };
        vectors.push(v);
    }
    Ok(vectors)
}

/// Vectorizes an action sequence through its parent links.
pub fn ast2vec(steps: &[ActionStep]) -> Result<Vec<NodeVector>, AstVecError> {
    let parents: Vec<Option<usize>> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.parent == 0 {
                if i == 0 {
                    Ok(None)
                } else {
                    Err(AstVecError::ExtraRoot { index: i })
                }
            } else if s.parent > i {
                Err(AstVecError::InconsistentParent {
                    index: i,
                    parent: s.parent - 1,
                })
            } else {
                Ok(Some(s.parent - 1))
            }
        })
        .collect::<Result<_, _>>()?;
    ast2vec_parents(&parents)
}

/// Recovers each node's parent (0-based, `None` for the root) from vectors in
/// pre-order: the nearest earlier node one level up whose column is not to
/// the right.
pub fn vec2parents(vectors: &[NodeVector]) -> Result<Vec<Option<usize>>, AstVecError> {
    let mut out = Vec::with_capacity(vectors.len());
    for (index, &v) in vectors.iter().enumerate() {
        if index == 0 {
            if v != NodeVector::ROOT {
                return Err(AstVecError::BadRoot(v));
            }
            out.push(None);
            continue;
        }
        if v.depth == 0 {
            return Err(AstVecError::NoParent { index, vector: v });
        }
        let parent = vectors[..index]
            .iter()
            .rposition(|c| c.depth + 1 == v.depth && c.horiz <= v.horiz)
            .ok_or(AstVecError::NoParent { index, vector: v })?;
        out.push(Some(parent));
    }
    Ok(out)
}
