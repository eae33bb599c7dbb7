use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Row-major matrix; vectors have `cols == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| T::of(rng.random_range(-bound..bound)))
            .collect();
        Tensor { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Named parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Panics on a duplicate name.
    pub fn add(&mut self, name: &str, tensor: Tensor<T>) -> ParamId {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        self.index.insert(name.to_string(), self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn zero_grads(&self) -> Gradients<T> {
        Gradients(
            self.tensors
                .iter()
                .map(|t| vec![T::zero(); t.data.len()])
                .collect(),
        )
    }

    pub fn to_record(&self) -> Vec<TensorRecord> {
        self.iter()
            .map(|(name, t)| TensorRecord {
                name: name.to_string(),
                rows: t.rows,
                cols: t.cols,
                data: t.data.iter().map(|v| v.as_f64()).collect(),
            })
            .collect()
    }

    pub fn from_record(records: &[TensorRecord]) -> Result<Self, String> {
        let mut set = ParamSet::new();
        for r in records {
            if r.data.len() != r.rows * r.cols {
                return Err(format!(
                    "tensor {} has {} values for shape {}x{}",
                    r.name,
                    r.data.len(),
                    r.rows,
                    r.cols
                ));
            }
            if set.id(&r.name).is_some() {
                return Err(format!("duplicate tensor {}", r.name));
            }
            set.add(
                &r.name,
                Tensor {
                    rows: r.rows,
                    cols: r.cols,
                    data: r.data.iter().map(|&v| T::of(v)).collect(),
                },
            );
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Accumulated gradients, one flat buffer per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T>(pub Vec<Vec<T>>);

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: ParamId) -> &[T] {
        &self.0[id.0]
    }

    pub fn fill_zero(&mut self) {
        for g in &mut self.0 {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn scale(&mut self, factor: T) {
        for g in &mut self.0 {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn norm(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// Rescales to at most `max_norm` in global L2 norm; returns the norm
    /// before clipping.
    pub fn clip(&mut self, max_norm: T) -> T {
        let n = self.norm();
        if n > max_norm {
            self.scale(max_norm / n);
        }
        n
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}
