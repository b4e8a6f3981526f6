//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Ops execute eagerly and append a backward step; `backward` replays the
//! steps in exact reverse order. Values live in an arena indexed by
//! [`TensorId`]. The tape is single-writer: one tape per thread, every op
//! deterministic, so identical inputs give bit-identical outputs.

use crate::error::{CatError, Result};
use crate::params::{ParamId, ParamKind, ParamSet};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Handle to a value recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(pub(crate) usize);

/// Gradient slots, one per tape value. `None` until gradient flows there.
pub type Grads<S> = [Option<Vec<S>>];

type BackStep<S> = Box<dyn Fn(&[Tensor<S>], &mut Grads<S>) + Send>;

pub struct Tape<S: Scalar> {
    vals: Vec<Tensor<S>>,
    needs_grad: Vec<bool>,
    bindings: Vec<(TensorId, ParamId)>,
    steps: Vec<BackStep<S>>,
    grad_enabled: bool,
    grads: Option<Vec<Option<Vec<S>>>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    /// Recording tape for training and gradient checks.
    pub fn new() -> Self {
        Tape { vals: Vec::new(), needs_grad: Vec::new(), bindings: Vec::new(), steps: Vec::new(), grad_enabled: true, grads: None }
    }

    /// Forward-only tape: no backward steps are recorded.
    pub fn inference() -> Self {
        Tape { grad_enabled: false, ..Tape::new() }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    fn push_value(&mut self, t: Tensor<S>, needs: bool) -> TensorId {
        debug_assert!(t.all_finite(), "non-finite value entered the tape");
        let id = TensorId(self.vals.len());
        self.vals.push(t);
        self.needs_grad.push(needs && self.grad_enabled);
        id
    }

    /// Leaf that never receives a gradient (inputs, labels-as-tensors).
    pub fn constant(&mut self, t: Tensor<S>) -> TensorId {
        self.push_value(t, false)
    }

    /// Leaf with an explicit requires-grad flag (op-level tests).
    pub fn leaf(&mut self, t: Tensor<S>, requires_grad: bool) -> TensorId {
        self.push_value(t, requires_grad)
    }

    /// Bring a registry parameter onto the tape. Trainable parameters receive
    /// gradients on `export_param_grads`; buffers enter as constants.
    pub fn param(&mut self, params: &ParamSet<S>, pid: ParamId) -> TensorId {
        let e = params.entry(pid);
        let trainable = e.kind == ParamKind::Trainable;
        let id = self.push_value(e.value.clone(), trainable);
        if trainable && self.grad_enabled {
            self.bindings.push((id, pid));
        }
        id
    }

    pub fn value(&self, id: TensorId) -> &Tensor<S> {
        &self.vals[id.0]
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        self.vals[id.0].shape()
    }

    pub fn needs_grad(&self, id: TensorId) -> bool {
        self.needs_grad[id.0]
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Record an op result. `back` receives the value arena and the gradient
    /// slots; it must add the op's vector-Jacobian product into its inputs'
    /// slots. Skipped entirely when no input needs a gradient.
    pub(crate) fn push_op(
        &mut self,
        inputs: &[TensorId],
        out: Tensor<S>,
        back: impl Fn(&[Tensor<S>], &mut Grads<S>) + Send + 'static,
    ) -> TensorId {
        let needs = inputs.iter().any(|i| self.needs_grad[i.0]);
        let id = self.push_value(out, needs);
        if needs && self.grad_enabled {
            self.steps.push(Box::new(back));
        }
        id
    }

    /// Reverse pass from a scalar loss. Populates gradient slots for every
    /// value the loss depends on; unreached values keep `None`.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if self.vals[loss.0].len() != 1 {
            return Err(CatError::shape(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.vals[loss.0].shape()),
            ));
        }
        if !self.grad_enabled {
            return Err(CatError::Numeric("backward on an inference tape".into()));
        }
        let mut grads: Vec<Option<Vec<S>>> = vec![None; self.vals.len()];
        grads[loss.0] = Some(vec![S::ONE]);
        for step in self.steps.iter().rev() {
            step(&self.vals, &mut grads);
        }
        self.grads = Some(grads);
        Ok(())
    }

    /// Gradient of the last `backward` loss w.r.t. a tape value.
    pub fn grad(&self, id: TensorId) -> Option<&[S]> {
        self.grads.as_ref()?.get(id.0)?.as_deref()
    }

    /// Add this tape's parameter gradients into the registry buffers.
    /// Parameters the loss never reached contribute zero.
    pub fn export_param_grads(&self, params: &mut ParamSet<S>) {
        if let Some(grads) = &self.grads {
            for &(tid, pid) in &self.bindings {
                if let Some(g) = &grads[tid.0] {
                    params.accumulate_grad(pid, g);
                }
            }
        }
    }
}

/// Get the gradient slot for `id`, creating a zero buffer of `len` on first
/// touch. Backward steps add their contributions in place.
pub(crate) fn slot<S: Scalar>(grads: &mut Grads<S>, id: TensorId, len: usize) -> &mut [S] {
    grads[id.0].get_or_insert_with(|| vec![S::ZERO; len])
}

/// Take the upstream gradient of `out` for the duration of a backward step.
/// Returns `None` when no gradient reached the output.
pub(crate) fn take_out_grad<S: Scalar>(grads: &mut Grads<S>, out: TensorId) -> Option<Vec<S>> {
    grads[out.0].take()
}

/// Put the upstream gradient back so later queries still see it.
pub(crate) fn restore_out_grad<S: Scalar>(grads: &mut Grads<S>, out: TensorId, g: Vec<S>) {
    grads[out.0] = Some(g);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_rejects_non_scalar() {
        let mut t = Tape::<f32>::new();
        let x = t.leaf(Tensor::zeros(vec![2, 2]), true);
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn inference_tape_refuses_backward() {
        let mut t = Tape::<f32>::inference();
        let x = t.leaf(Tensor::scalar(1.0), true);
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn disconnected_param_gets_zero_grad() {
        let mut params = ParamSet::<f32>::new();
        let pid = params.trainable("w", Tensor::zeros(vec![3])).unwrap();
        let mut t = Tape::new();
        let _w = t.param(&params, pid);
        let loss = t.leaf(Tensor::scalar(1.0), true);
        t.backward(loss).unwrap();
        t.export_param_grads(&mut params);
        assert_eq!(params.grad(pid), &[0.0, 0.0, 0.0]);
    }
}
