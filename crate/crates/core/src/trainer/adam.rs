//! Adam optimizer with bias correction.

use crate::nn::{Grads, NetworkParams};
use crate::tensor::{Scalar, Tensor};

use super::train::TrainError;

/// First/second moment buffers mirroring the parameter tensors, plus the
/// step counter. Constants are the optimizer's published defaults.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &NetworkParams<T>) -> Self {
        let zeros: Vec<Tensor<T>> =
            params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update, in place:
/// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², θ ← θ − lr·m̂/(√v̂ + ε)
/// with m̂, v̂ the bias-corrected moments.
pub fn adam_step<T: Scalar>(
    params: &mut NetworkParams<T>,
    grads: &Grads<T>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<(), TrainError> {
    for ((p, g), (m, _)) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(TrainError::Shape(format!(
                "adam buffers disagree: params {:?}, grads {:?}, moments {:?}",
                p.shape(),
                g.shape(),
                m.shape()
            )));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    for ((p, g), (m, v)) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        let (ps, gs) = (p.as_mut_slice(), g.as_slice());
        let (ms, vs) = (m.as_mut_slice(), v.as_mut_slice());
        for i in 0..ps.len() {
            let gi = gs[i].to_f64();
            let mi = state.beta1 * ms[i].to_f64() + (1.0 - state.beta1) * gi;
            let vi = state.beta2 * vs[i].to_f64() + (1.0 - state.beta2) * gi * gi;
            ms[i] = T::from_f64(mi);
            vs[i] = T::from_f64(vi);
            let update = lr * (mi / bc1) / ((vi / bc2).sqrt() + state.epsilon);
            ps[i] = T::from_f64(ps[i].to_f64() - update);
        }
    }
    Ok(())
}
