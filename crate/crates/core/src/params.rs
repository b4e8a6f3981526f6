//! Named parameter registry. Trainable parameters carry gradient buffers;
//! plain buffers (batch-norm running statistics) are saved to checkpoints but
//! skipped by the optimizer and the gradient checker.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CatError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Trainable,
    Buffer,
}

#[derive(Debug, Clone)]
pub struct ParamEntry<S: Scalar> {
    pub name: String,
    pub kind: ParamKind,
    pub value: Tensor<S>,
    /// Gradient accumulator, same shape as value. Empty for buffers.
    pub grad: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct ParamSet<S: Scalar> {
    entries: Vec<ParamEntry<S>>,
    by_name: HashMap<String, ParamId>,
}

impl<S: Scalar> Default for ParamSet<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        ParamSet { entries: Vec::new(), by_name: HashMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, kind: ParamKind, value: Tensor<S>) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(CatError::Config(format!("duplicate parameter name {name:?}")));
        }
        let id = ParamId(self.entries.len());
        let grad = match kind {
            ParamKind::Trainable => vec![S::ZERO; value.len()],
            ParamKind::Buffer => Vec::new(),
        };
        self.by_name.insert(name.clone(), id);
        self.entries.push(ParamEntry { name, kind, value, grad });
        Ok(id)
    }

    pub fn trainable(&mut self, name: impl Into<String>, value: Tensor<S>) -> Result<ParamId> {
        self.insert(name, ParamKind::Trainable, value)
    }

    pub fn buffer(&mut self, name: impl Into<String>, value: Tensor<S>) -> Result<ParamId> {
        self.insert(name, ParamKind::Buffer, value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<S> {
        &self.entries[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        &mut self.entries[id.0].value
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry<S> {
        &self.entries[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn entries(&self) -> impl Iterator<Item = (ParamId, &ParamEntry<S>)> {
        self.entries.iter().enumerate().map(|(i, e)| (ParamId(i), e))
    }

    pub fn trainable_ids(&self) -> Vec<ParamId> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == ParamKind::Trainable)
            .map(|(i, _)| ParamId(i))
            .collect()
    }

    pub fn grad(&self, id: ParamId) -> &[S] {
        &self.entries[id.0].grad
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            for g in &mut e.grad {
                *g = S::ZERO;
            }
        }
    }

    pub fn accumulate_grad(&mut self, id: ParamId, delta: &[S]) {
        let e = &mut self.entries[id.0];
        debug_assert_eq!(e.grad.len(), delta.len(), "grad shape mismatch for {}", e.name);
        for (g, d) in e.grad.iter_mut().zip(delta) {
            *g += *d;
        }
    }

    /// Total number of trainable scalar values.
    pub fn num_trainable_values(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == ParamKind::Trainable)
            .map(|e| e.value.len())
            .sum()
    }

    /// Cast the whole set to another element type, preserving names and order.
    pub fn cast<T: Scalar>(&self) -> ParamSet<T> {
        let mut out = ParamSet::new();
        for e in &self.entries {
            out.insert(e.name.clone(), e.kind, e.value.cast::<T>()).expect("names stay unique");
        }
        out
    }
}

/// Truncated normal init: std 0.02, resampled outside two standard deviations.
pub fn trunc_normal<S: Scalar>(shape: Vec<usize>, std: f64, rng: &mut ChaCha8Rng) -> Tensor<S> {
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    while data.len() < n {
        // Box-Muller from two uniform draws.
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if z.abs() <= 2.0 {
            data.push(S::from_f64(z * std));
        }
    }
    Tensor::new(shape, data).expect("counted")
}

/// Kaiming-uniform init for conv weights: U(-b, b) with b = sqrt(6 / fan_in).
pub fn kaiming_uniform<S: Scalar>(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<S> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| S::from_f64(rng.gen_range(-bound..bound))).collect();
    Tensor::new(shape, data).expect("counted")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn duplicate_names_rejected() {
        let mut p = ParamSet::<f32>::new();
        p.trainable("w", Tensor::zeros(vec![2])).unwrap();
        assert!(p.trainable("w", Tensor::zeros(vec![2])).is_err());
    }

    #[test]
    fn buffers_have_no_grad() {
        let mut p = ParamSet::<f32>::new();
        let w = p.trainable("w", Tensor::zeros(vec![3])).unwrap();
        let b = p.buffer("stats", Tensor::zeros(vec![3])).unwrap();
        assert_eq!(p.grad(w).len(), 3);
        assert_eq!(p.grad(b).len(), 0);
        assert_eq!(p.trainable_ids(), vec![w]);
    }

    #[test]
    fn trunc_normal_respects_bounds() {
        let mut rng = stream(3, Domain::Test, 0);
        let t = trunc_normal::<f64>(vec![4096], 0.02, &mut rng);
        assert!(t.data().iter().all(|v| v.abs() <= 0.04 + 1e-12));
        let mean: f64 = t.data().iter().sum::<f64>() / 4096.0;
        assert!(mean.abs() < 0.005, "mean {mean}");
    }
}
