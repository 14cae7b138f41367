//! The screening CNN: parameter container, forward pass with trace capture,
//! and the full backward pass.
//!
//! Layer order: conv(64 kernels 2×20) → relu → maxpool(1×20, stride 1×5) →
//! conv(64×64 kernels 2×10) → relu → maxpool(1×4, stride 1×2) → flatten →
//! fc(1024) → relu → dropout → fc(512) → relu → dropout → fc(2) → softmax.
//! On a 6×300 input the stage shapes are 64×6×300 → 64×6×60 → 64×6×60 →
//! 64×6×30 → 11 520 → 1024 → 512 → 2.

use rand::Rng;

use super::layers::{
    conv2d, conv2d_backward, dense, dense_backward, dropout, dropout_backward, maxpool2d,
    maxpool2d_backward, relu, relu_backward, softmax,
};
use super::{Mode, NnError};
use crate::features::NormalizationStats;
use crate::tensor::{Scalar, Tensor};

/// Training configuration. All defaults follow the published setup; epochs,
/// patience, and seed are local choices.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    /// L2 coefficient λ.
    pub lambda: f64,
    /// Dropout keep probability for both FC layers.
    pub keep_prob: f64,
    pub batch_size: u32,
    pub max_epochs: u32,
    pub patience: u32,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.00015822,
            lambda: 0.000076253698849,
            keep_prob: 0.85565561,
            batch_size: 256,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0)
            || !(self.keep_prob > 0.0 && self.keep_prob <= 1.0)
            || self.batch_size == 0
            || self.lambda < 0.0
        {
            return Err(NnError::Shape(format!(
                "invalid hyperparameters: lr {}, keep {}, batch {}, lambda {}",
                self.learning_rate, self.keep_prob, self.batch_size, self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub size: (usize, usize),
    pub stride: (usize, usize),
}

/// Static network geometry. The production shape is [`Architecture::standard`];
/// smaller instances exist so gradient tests can afford exhaustive checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    /// Input (channels, height, width).
    pub input: (usize, usize, usize),
    /// (kernel count, kh, kw) for the first convolution.
    pub conv1: (usize, usize, usize),
    pub pool1: PoolSpec,
    pub conv2: (usize, usize, usize),
    pub pool2: PoolSpec,
    pub fc1: usize,
    pub fc2: usize,
}

pub const OUTPUT_CLASSES: usize = 2;

impl Architecture {
    pub fn standard() -> Self {
        Architecture {
            input: (1, 6, 300),
            conv1: (64, 2, 20),
            pool1: PoolSpec { size: (1, 20), stride: (1, 5) },
            conv2: (64, 2, 10),
            pool2: PoolSpec { size: (1, 4), stride: (1, 2) },
            fc1: 1024,
            fc2: 512,
        }
    }

    fn pooled(extent: usize, stride: usize) -> usize {
        extent.div_ceil(stride)
    }

    /// Spatial dims after each stage: (h1, w1) post pool1, (h2, w2) post pool2.
    pub fn pooled_dims(&self) -> ((usize, usize), (usize, usize)) {
        let (_, h, w) = self.input;
        let h1 = Self::pooled(h, self.pool1.stride.0);
        let w1 = Self::pooled(w, self.pool1.stride.1);
        let h2 = Self::pooled(h1, self.pool2.stride.0);
        let w2 = Self::pooled(w1, self.pool2.stride.1);
        ((h1, w1), (h2, w2))
    }

    pub fn flatten_len(&self) -> usize {
        let (_, (h2, w2)) = self.pooled_dims();
        self.conv2.0 * h2 * w2
    }
}

pub const PARAM_NAMES: [&str; 10] = [
    "conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b", "out_w",
    "out_b",
];

/// All trainable tensors plus the input-normalization statistics and the
/// hyper-parameters they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T: Scalar> {
    pub conv1_w: Tensor<T>,
    pub conv1_b: Tensor<T>,
    pub conv2_w: Tensor<T>,
    pub conv2_b: Tensor<T>,
    pub fc1_w: Tensor<T>,
    pub fc1_b: Tensor<T>,
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
    pub fc2_w: Tensor<T>,
    pub fc2_b: Tensor<T>,
    pub pool1: PoolSpec,
    pub pool2: PoolSpec,
    pub norm_stats: NormalizationStats,
    pub hyper: Hyperparams,
}

impl<T: Scalar> NetworkParams<T> {
    /// He-style uniform initialization: weights drawn from
    /// ±sqrt(6/fan_in) in a fixed tensor order, biases zero. Draws go
    /// through f64 so f32 and f64 networks share a random stream.
    pub fn init<R: Rng>(
        arch: &Architecture,
        hyper: Hyperparams,
        norm_stats: NormalizationStats,
        rng: &mut R,
    ) -> Self {
        let (c_in, _, _) = arch.input;
        let (c1, k1h, k1w) = arch.conv1;
        let (c2, k2h, k2w) = arch.conv2;
        let flat = arch.flatten_len();

        let mut draw = |shape: &[usize], fan_in: usize| -> Tensor<T> {
            let limit = (6.0 / fan_in as f64).sqrt();
            let len = shape.iter().product();
            let data = (0..len)
                .map(|_| T::from_f64(rng.random_range(-limit..limit)))
                .collect();
            Tensor::from_vec(shape, data)
        };

        let conv1_w = draw(&[c1, c_in, k1h, k1w], c_in * k1h * k1w);
        let conv2_w = draw(&[c2, c1, k2h, k2w], c1 * k2h * k2w);
        let fc1_w = draw(&[arch.fc1, flat], flat);
        let fc2_w = draw(&[arch.fc2, arch.fc1], arch.fc1);
        let out_w = draw(&[OUTPUT_CLASSES, arch.fc2], arch.fc2);

        NetworkParams {
            conv1_w,
            conv1_b: Tensor::zeros(&[c1]),
            conv2_w,
            conv2_b: Tensor::zeros(&[c2]),
            fc1_w,
            fc1_b: Tensor::zeros(&[arch.fc1]),
            fc2_w,
            fc2_b: Tensor::zeros(&[arch.fc2]),
            out_w,
            out_b: Tensor::zeros(&[OUTPUT_CLASSES]),
            pool1: arch.pool1,
            pool2: arch.pool2,
            norm_stats,
            hyper,
        }
    }

    /// Tensors in the canonical order of [`PARAM_NAMES`].
    pub fn tensors(&self) -> [&Tensor<T>; 10] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<T>; 10] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn cast<U: Scalar>(&self) -> NetworkParams<U> {
        NetworkParams {
            conv1_w: self.conv1_w.cast(),
            conv1_b: self.conv1_b.cast(),
            conv2_w: self.conv2_w.cast(),
            conv2_b: self.conv2_b.cast(),
            fc1_w: self.fc1_w.cast(),
            fc1_b: self.fc1_b.cast(),
            fc2_w: self.fc2_w.cast(),
            fc2_b: self.fc2_b.cast(),
            out_w: self.out_w.cast(),
            out_b: self.out_b.cast(),
            pool1: self.pool1,
            pool2: self.pool2,
            norm_stats: self.norm_stats.clone(),
            hyper: self.hyper.clone(),
        }
    }
}

/// Gradient buffers mirroring the parameter tensors.
#[derive(Debug, Clone)]
pub struct Grads<T: Scalar> {
    pub conv1_w: Tensor<T>,
    pub conv1_b: Tensor<T>,
    pub conv2_w: Tensor<T>,
    pub conv2_b: Tensor<T>,
    pub fc1_w: Tensor<T>,
    pub fc1_b: Tensor<T>,
    pub fc2_w: Tensor<T>,
    pub fc2_b: Tensor<T>,
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
}

impl<T: Scalar> Grads<T> {
    pub fn zeros_like(params: &NetworkParams<T>) -> Self {
        let z = |t: &Tensor<T>| Tensor::zeros(t.shape());
        Grads {
            conv1_w: z(&params.conv1_w),
            conv1_b: z(&params.conv1_b),
            conv2_w: z(&params.conv2_w),
            conv2_b: z(&params.conv2_b),
            fc1_w: z(&params.fc1_w),
            fc1_b: z(&params.fc1_b),
            fc2_w: z(&params.fc2_w),
            fc2_b: z(&params.fc2_b),
            out_w: z(&params.out_w),
            out_b: z(&params.out_b),
        }
    }

    pub fn tensors(&self) -> [&Tensor<T>; 10] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<T>; 10] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    /// self += other, entry by entry.
    pub fn accumulate(&mut self, other: &Grads<T>) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
                *d = *d + s;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = *v * factor;
            }
        }
    }
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T: Scalar> {
    pub mode: Mode,
    input: Tensor<T>,
    conv1_pre: Tensor<T>,
    pool1_out: Tensor<T>,
    pool1_arg: Vec<u32>,
    conv2_pre: Tensor<T>,
    pool2_out: Tensor<T>,
    pool2_arg: Vec<u32>,
    fc1_pre: Vec<T>,
    fc1_dropped: Vec<T>,
    mask1: Option<Vec<bool>>,
    fc2_pre: Vec<T>,
    fc2_dropped: Vec<T>,
    mask2: Option<Vec<bool>>,
    pub logits: Vec<T>,
    pub probabilities: Vec<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    /// Stage shapes for shape-chain assertions:
    /// input → conv1 → pool1 → conv2 → pool2 → flatten/fc1/fc2/out widths.
    pub fn stage_shapes(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>, [usize; 4]) {
        (
            self.input.shape().to_vec(),
            self.conv1_pre.shape().to_vec(),
            self.pool1_out.shape().to_vec(),
            self.conv2_pre.shape().to_vec(),
            self.pool2_out.shape().to_vec(),
            [
                self.pool2_out.len(),
                self.fc1_pre.len(),
                self.fc2_pre.len(),
                self.logits.len(),
            ],
        )
    }
}

fn relu_tensor<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    Tensor::from_vec(t.shape(), relu(t.as_slice()))
}

/// Runs the network on one [C, H, W] input. Train mode draws dropout masks
/// from `rng` and records them in the trace; Eval mode is deterministic.
pub fn network_forward<T: Scalar, R: Rng>(
    input: &Tensor<T>,
    params: &NetworkParams<T>,
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<T>, ForwardTrace<T>), NnError> {
    if input.shape().len() != 3 {
        return Err(NnError::Shape(format!(
            "network input must be rank 3, got {:?}",
            input.shape()
        )));
    }
    let keep = params.hyper.keep_prob;

    let conv1_pre = conv2d(input, &params.conv1_w, &params.conv1_b)?;
    let (pool1_out, pool1_arg) =
        maxpool2d(&relu_tensor(&conv1_pre), params.pool1.size, params.pool1.stride)?;
    let conv2_pre = conv2d(&pool1_out, &params.conv2_w, &params.conv2_b)?;
    let (pool2_out, pool2_arg) =
        maxpool2d(&relu_tensor(&conv2_pre), params.pool2.size, params.pool2.stride)?;

    let fc1_pre = dense(pool2_out.as_slice(), &params.fc1_w, &params.fc1_b)?;
    let (fc1_dropped, mask1) = dropout(&relu(&fc1_pre), keep, mode, rng);
    let fc2_pre = dense(&fc1_dropped, &params.fc2_w, &params.fc2_b)?;
    let (fc2_dropped, mask2) = dropout(&relu(&fc2_pre), keep, mode, rng);
    let logits = dense(&fc2_dropped, &params.out_w, &params.out_b)?;
    let probabilities = softmax(&logits);

    let trace = ForwardTrace {
        mode,
        input: input.clone(),
        conv1_pre,
        pool1_out,
        pool1_arg,
        conv2_pre,
        pool2_out,
        pool2_arg,
        fc1_pre,
        fc1_dropped,
        mask1,
        fc2_pre,
        fc2_dropped,
        mask2,
        logits,
        probabilities: probabilities.clone(),
    };
    Ok((probabilities, trace))
}

/// Backpropagates a gradient w.r.t. the logits through the whole network.
/// Requires a Train-mode trace so the dropout masks are available.
pub fn network_backward<T: Scalar>(
    trace: &ForwardTrace<T>,
    params: &NetworkParams<T>,
    dlogits: &[T],
) -> Result<Grads<T>, NnError> {
    if trace.mode != Mode::Train {
        return Err(NnError::Trace(
            "backward needs a Train-mode trace (Eval traces hold no dropout masks)".into(),
        ));
    }
    if dlogits.len() != trace.logits.len() {
        return Err(NnError::Shape(format!(
            "dlogits length {} != logits length {}",
            dlogits.len(),
            trace.logits.len()
        )));
    }
    let keep = params.hyper.keep_prob;
    let mask1 = trace.mask1.as_ref().expect("Train trace carries mask1");
    let mask2 = trace.mask2.as_ref().expect("Train trace carries mask2");

    let (d_fc2_dropped, d_out_w, d_out_b) =
        dense_backward(&trace.fc2_dropped, &params.out_w, dlogits)?;
    let d_fc2_relu = dropout_backward(mask2, keep, &d_fc2_dropped);
    let d_fc2_pre = relu_backward(&trace.fc2_pre, &d_fc2_relu);
    let (d_fc1_dropped, d_fc2_w, d_fc2_b) =
        dense_backward(&trace.fc1_dropped, &params.fc2_w, &d_fc2_pre)?;
    let d_fc1_relu = dropout_backward(mask1, keep, &d_fc1_dropped);
    let d_fc1_pre = relu_backward(&trace.fc1_pre, &d_fc1_relu);
    let (d_flat, d_fc1_w, d_fc1_b) =
        dense_backward(trace.pool2_out.as_slice(), &params.fc1_w, &d_fc1_pre)?;

    let d_pool2_out = Tensor::from_vec(trace.pool2_out.shape(), d_flat);
    let d_relu2 = maxpool2d_backward(trace.conv2_pre.shape(), &trace.pool2_arg, &d_pool2_out)?;
    let d_conv2_pre = Tensor::from_vec(
        trace.conv2_pre.shape(),
        relu_backward(trace.conv2_pre.as_slice(), d_relu2.as_slice()),
    );
    let (d_pool1_out, d_conv2_w, d_conv2_b) =
        conv2d_backward(&trace.pool1_out, &params.conv2_w, &d_conv2_pre)?;

    let d_relu1 = maxpool2d_backward(trace.conv1_pre.shape(), &trace.pool1_arg, &d_pool1_out)?;
    let d_conv1_pre = Tensor::from_vec(
        trace.conv1_pre.shape(),
        relu_backward(trace.conv1_pre.as_slice(), d_relu1.as_slice()),
    );
    let (_, d_conv1_w, d_conv1_b) = conv2d_backward(&trace.input, &params.conv1_w, &d_conv1_pre)?;

    Ok(Grads {
        conv1_w: d_conv1_w,
        conv1_b: d_conv1_b,
        conv2_w: d_conv2_w,
        conv2_b: d_conv2_b,
        fc1_w: d_fc1_w,
        fc1_b: d_fc1_b,
        fc2_w: d_fc2_w,
        fc2_b: d_fc2_b,
        out_w: d_out_w,
        out_b: d_out_b,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn empty_stats() -> NormalizationStats {
        NormalizationStats { mean: vec![0.0; 6], std: vec![1.0; 6] }
    }

    /// Small enough that exhaustive finite differences stay cheap:
    /// 1×3×6 → conv(2 k 2×2) → pool(1×2, s 1×2) → conv(2 k 2×2) →
    /// pool(1×2, s 1×2) → flatten 12 → 4 → 3 → 2.
    pub(crate) fn tiny_arch() -> Architecture {
        Architecture {
            input: (1, 3, 6),
            conv1: (2, 2, 2),
            pool1: PoolSpec { size: (1, 2), stride: (1, 2) },
            conv2: (2, 2, 2),
            pool2: PoolSpec { size: (1, 2), stride: (1, 2) },
            fc1: 4,
            fc2: 3,
        }
    }

    pub(crate) fn tiny_params(seed: u64) -> NetworkParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hyper = Hyperparams { keep_prob: 1.0, ..Hyperparams::default() };
        NetworkParams::init(&tiny_arch(), hyper, empty_stats(), &mut rng)
    }

    #[test]
    fn tiny_architecture_dims() {
        let arch = tiny_arch();
        assert_eq!(arch.flatten_len(), 12);
        assert_eq!(arch.pooled_dims(), ((3, 3), (3, 2)));
    }

    #[test]
    fn standard_shape_chain() {
        let arch = Architecture::standard();
        assert_eq!(arch.flatten_len(), 11_520);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params =
            NetworkParams::<f32>::init(&arch, Hyperparams::default(), empty_stats(), &mut rng);
        let input = Tensor::<f32>::zeros(&[1, 6, 300]);
        let (probs, trace) = network_forward(&input, &params, Mode::Eval, &mut rng).unwrap();
        let (s_in, s_c1, s_p1, s_c2, s_p2, widths) = trace.stage_shapes();
        assert_eq!(s_in, vec![1, 6, 300]);
        assert_eq!(s_c1, vec![64, 6, 300]);
        assert_eq!(s_p1, vec![64, 6, 60]);
        assert_eq!(s_c2, vec![64, 6, 60]);
        assert_eq!(s_p2, vec![64, 6, 30]);
        assert_eq!(widths, [11_520, 1024, 512, 2]);
        assert!((probs.iter().map(|p| p.to_f64()).sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn eval_forward_is_bit_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = tiny_params(3);
        let input = Tensor::from_vec(
            &[1, 3, 6],
            (0..18).map(|i| (i as f64 * 0.37).sin()).collect(),
        );
        let (p1, _) = network_forward(&input, &params, Mode::Eval, &mut rng).unwrap();
        let (p2, _) = network_forward(&input, &params, Mode::Eval, &mut rng).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn zero_network_outputs_a_coin_flip() {
        let arch = tiny_arch();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params =
            NetworkParams::<f64>::init(&arch, Hyperparams::default(), empty_stats(), &mut rng);
        for t in params.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = 0.0;
            }
        }
        let input = Tensor::<f64>::zeros(&[1, 3, 6]);
        let (probs, _) = network_forward(&input, &params, Mode::Eval, &mut rng).unwrap();
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn wrong_input_shape_is_a_shape_error() {
        let params = tiny_params(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = Tensor::<f64>::zeros(&[1, 4, 6]);
        assert!(matches!(
            network_forward(&bad, &params, Mode::Eval, &mut rng),
            Err(NnError::Shape(_))
        ));
        let bad_rank = Tensor::<f64>::zeros(&[18]);
        assert!(matches!(
            network_forward(&bad_rank, &params, Mode::Eval, &mut rng),
            Err(NnError::Shape(_))
        ));
    }

    #[test]
    fn eval_trace_rejects_backward() {
        let params = tiny_params(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let input = Tensor::<f64>::zeros(&[1, 3, 6]);
        let (_, trace) = network_forward(&input, &params, Mode::Eval, &mut rng).unwrap();
        assert!(matches!(
            network_backward(&trace, &params, &[1.0, -1.0]),
            Err(NnError::Trace(_))
        ));
    }

    #[test]
    fn zero_logit_gradient_gives_zero_parameter_gradients() {
        let params = tiny_params(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = Tensor::from_vec(&[1, 3, 6], (0..18).map(|i| i as f64 * 0.1 - 0.9).collect());
        let (_, trace) = network_forward(&input, &params, Mode::Train, &mut rng).unwrap();
        let grads = network_backward(&trace, &params, &[0.0, 0.0]).unwrap();
        for t in grads.tensors() {
            assert!(t.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    /// Exhaustive finite-difference check of every parameter of the tiny
    /// network against the analytic backward pass, on the scalar objective
    /// J = Σ gᵢ·logitᵢ. keep_prob is 1 so Train mode stays deterministic.
    /// The seed is chosen so every ReLU input clears zero by a wide margin;
    /// at the kink the FD quotient and the subgradient legitimately differ.
    #[test]
    fn backward_matches_finite_differences_everywhere() {
        let input = Tensor::from_vec(
            &[1, 3, 6],
            (0..18).map(|i| ((i * 7 % 13) as f64 - 6.0) * 0.15).collect(),
        );
        let margin_of = |p: &NetworkParams<f64>| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let (_, t) = network_forward(&input, p, Mode::Train, &mut rng).unwrap();
            [
                t.conv1_pre.as_slice(),
                t.conv2_pre.as_slice(),
                &t.fc1_pre,
                &t.fc2_pre,
            ]
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min)
        };
        let params = (0..100)
            .map(tiny_params)
            .find(|p| margin_of(p) > 5e-3)
            .expect("some seed keeps all pre-activations away from the ReLU kink");
        let gvec = [0.7, -1.3];

        let objective = |p: &NetworkParams<f64>| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let (_, trace) = network_forward(&input, p, Mode::Train, &mut rng).unwrap();
            trace.logits.iter().zip(&gvec).map(|(&l, &g)| l * g).sum()
        };

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, trace) = network_forward(&input, &params, Mode::Train, &mut rng).unwrap();
        let grads = network_backward(&trace, &params, &gvec).unwrap();

        let h = 1e-5;
        for (t_idx, name) in PARAM_NAMES.iter().enumerate() {
            let len = params.tensors()[t_idx].len();
            for i in 0..len {
                let mut plus = params.clone();
                plus.tensors_mut()[t_idx].as_mut_slice()[i] += h;
                let mut minus = params.clone();
                minus.tensors_mut()[t_idx].as_mut_slice()[i] -= h;
                let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let an = grads.tensors()[t_idx].as_slice()[i];
                assert!(
                    (an - fd).abs() <= 1e-4 * fd.abs().max(1e-3),
                    "{name}[{i}]: analytic {an} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn init_is_seed_deterministic_and_casts_cleanly() {
        let a = tiny_params(9);
        let b = tiny_params(9);
        assert_eq!(a, b);
        let as32: NetworkParams<f32> = a.cast();
        let back: NetworkParams<f64> = as32.cast();
        for (x, y) in back.tensors().into_iter().zip(a.tensors()) {
            for (u, v) in x.as_slice().iter().zip(y.as_slice()) {
                assert!((u - v).abs() < 1e-6);
            }
        }
    }
}
