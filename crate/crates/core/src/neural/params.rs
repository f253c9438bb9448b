use std::collections::HashMap;

use rand::distr::{Distribution, Uniform};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named parameters with same-shape gradient accumulators.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    grads: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name `{name}`")));
        }
        let id = self.values.len();
        self.index.insert(name.clone(), id);
        self.grads.push(Tensor::zeros(value.shape()));
        self.values.push(value);
        self.names.push(name);
        Ok(ParamId(id))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.grads[id.0]
    }

    /// Adds `g` into the gradient slot of `id`.
    pub fn accumulate(&mut self, id: ParamId, g: &Tensor) {
        self.grads[id.0].add_assign(g);
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Replaces a parameter's value, keeping its shape.
    pub fn set_value(&mut self, id: ParamId, value: Tensor) -> Result<()> {
        if value.shape() != self.values[id.0].shape() {
            return Err(Error::Shape(format!(
                "parameter `{}` has shape {:?}, got {:?}",
                self.names[id.0],
                self.values[id.0].shape(),
                value.shape()
            )));
        }
        self.values[id.0] = value;
        Ok(())
    }
}

/// Uniform Glorot initialization. For rank ≥ 2 the last axis is fan-out and
/// the product of the others is fan-in; a vector uses its length for both.
pub fn xavier_init(shape: &[usize], rng: &mut Rng) -> Result<Tensor> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Shape(format!("cannot initialize shape {shape:?}")));
    }
    let (fan_in, fan_out) = if shape.len() == 1 {
        (shape[0], shape[0])
    } else {
        let out = shape[shape.len() - 1];
        (shape.iter().product::<usize>() / out, out)
    };
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new(-a, a).map_err(|e| Error::Domain(e.to_string()))?;
    let data = (0..shape.iter().product::<usize>())
        .map(|_| dist.sample(rng))
        .collect();
    Tensor::from_vec(shape, data)
}
