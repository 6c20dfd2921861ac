use std::collections::HashMap;

use super::graph::Graph;
use super::{Element, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Updated by the optimizer.
    Trainable,
    /// State carried in checkpoints but never optimized (batchnorm running stats).
    Buffer,
}

impl ParamKind {
    pub fn is_trainable(self) -> bool {
        matches!(self, ParamKind::Trainable)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub kind: ParamKind,
}

/// Ordered, name-unique collection of parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    entries: Vec<Parameter<T>>,
    index: HashMap<String, usize>,
}

impl<T: Element> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>, kind: ParamKind) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name '{name}'")));
        }
        let grad = Tensor::zeros(value.shape());
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push(Parameter {
            name,
            value,
            grad,
            kind,
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Parameter<T>> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter<T>> {
        self.index.get(name).map(|&i| &mut self.entries[i])
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<T>> {
        self.get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::Config(format!("unknown parameter '{name}'")))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| Error::Config(format!("unknown parameter '{name}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.entries.iter()
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Parameter<T>] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of scalar entries across trainable parameters.
    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|p| p.kind.is_trainable())
            .map(|p| p.value.len())
            .sum()
    }

    /// Add the gradients recorded on `graph` for parameters of this store.
    pub fn accumulate_grads(&mut self, graph: &Graph<T>) {
        for (name, var) in graph.bound_params() {
            let Some(&i) = self.index.get(name) else {
                continue;
            };
            if let Some(g) = graph.grad(var) {
                let acc = self.entries[i].grad.data_mut();
                for (a, b) in acc.iter_mut().zip(g.data()) {
                    *a = *a + *b;
                }
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.entries {
            p.grad.data_mut().iter_mut().for_each(|g| *g = T::zero());
        }
    }

    pub fn cast<U: Element>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|p| Parameter {
                    name: p.name.clone(),
                    value: p.value.cast(),
                    grad: p.grad.cast(),
                    kind: p.kind,
                })
                .collect(),
            index: self.index.clone(),
        }
    }

    /// Entries whose name starts with `prefix`, cloned into a new store.
    pub fn filter_prefix(&self, prefix: &str) -> ParamStore<T> {
        let mut out = ParamStore::new();
        for p in self.entries.iter().filter(|p| p.name.starts_with(prefix)) {
            out.insert(p.name.clone(), p.value.clone(), p.kind)
                .expect("names are unique in the source store");
        }
        out
    }
}
