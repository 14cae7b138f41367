//! Dense-tensor layer kernels with hand-rolled backward passes.
//!
//! Conventions shared by every kernel:
//! - rank-3 activations are [channels, height, width], row-major;
//! - convolution is cross-correlation with zero same-padding, the surplus
//!   pad cell of an even kernel extent landing on the bottom/right;
//! - pooling windows anchor at `output_index × stride` with −∞ fill past
//!   the input edge, so output dims are ⌈H/sh⌉ × ⌈W/sw⌉.

use rand::Rng;

use super::{Mode, NnError};
use crate::tensor::{Scalar, Tensor};

fn shape_err(msg: String) -> NnError {
    NnError::Shape(msg)
}

/// Top/left zero-padding for a kernel extent under same-padding.
#[inline]
fn pad_before(k: usize) -> usize {
    (k - 1) / 2
}

/// Same-padded cross-correlation of `input` [C_in, H, W] with `kernels`
/// [C_out, C_in, kh, kw] plus per-output-channel `bias`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let [c_in, h, w] = *input.shape() else {
        return Err(shape_err(format!("conv input must be rank 3, got {:?}", input.shape())));
    };
    let [c_out, kc, kh, kw] = *kernels.shape() else {
        return Err(shape_err(format!(
            "conv kernels must be rank 4, got {:?}",
            kernels.shape()
        )));
    };
    if kc != c_in {
        return Err(shape_err(format!("kernel channels {kc} != input channels {c_in}")));
    }
    if bias.shape() != [c_out] {
        return Err(shape_err(format!("bias shape {:?} != [{c_out}]", bias.shape())));
    }
    if kh > h + pad_before(kh) || kw > w + pad_before(kw) {
        return Err(shape_err(format!("kernel {kh}x{kw} exceeds padded input {h}x{w}")));
    }
    let pt = pad_before(kh);
    let pl = pad_before(kw);

    let mut out = Tensor::<T>::zeros(&[c_out, h, w]);
    for o in 0..c_out {
        let b = bias.as_slice()[o];
        let base = out.offset3(o, 0, 0);
        for v in &mut out.as_mut_slice()[base..base + h * w] {
            *v = b;
        }
        for c in 0..c_in {
            for dy in 0..kh {
                for dx in 0..kw {
                    let weight = kernels.at4(o, c, dy, dx);
                    // y ranges where the input row y + dy − pt exists.
                    let y_lo = pt.saturating_sub(dy);
                    let y_hi = (h + pt - dy).min(h);
                    // x ranges where the input col x + dx − pl exists.
                    let x_lo = pl.saturating_sub(dx);
                    let x_hi = (w + pl - dx).min(w);
                    if x_lo >= x_hi {
                        continue;
                    }
                    for y in y_lo..y_hi {
                        let iy = y + dy - pt;
                        let in_base = input.offset3(c, iy, x_lo + dx - pl);
                        let out_base = out.offset3(o, y, x_lo);
                        let in_row = &input.as_slice()[in_base..in_base + (x_hi - x_lo)];
                        let out_row = &mut out.as_mut_slice()[out_base..out_base + (x_hi - x_lo)];
                        for (ov, &iv) in out_row.iter_mut().zip(in_row) {
                            *ov = *ov + weight * iv;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d`]: returns (input grad, kernel grads, bias grads).
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let [c_in, h, w] = *input.shape() else {
        return Err(shape_err(format!("conv input must be rank 3, got {:?}", input.shape())));
    };
    let [c_out, kc, kh, kw] = *kernels.shape() else {
        return Err(shape_err(format!(
            "conv kernels must be rank 4, got {:?}",
            kernels.shape()
        )));
    };
    if kc != c_in || upstream.shape() != [c_out, h, w] {
        return Err(shape_err(format!(
            "upstream shape {:?} does not match conv output [{c_out}, {h}, {w}]",
            upstream.shape()
        )));
    }
    if kh > h + pad_before(kh) || kw > w + pad_before(kw) {
        return Err(shape_err(format!("kernel {kh}x{kw} exceeds padded input {h}x{w}")));
    }
    let pt = pad_before(kh);
    let pl = pad_before(kw);

    let mut d_input = Tensor::<T>::zeros(&[c_in, h, w]);
    let mut d_kernels = Tensor::<T>::zeros(&[c_out, c_in, kh, kw]);
    let mut d_bias = Tensor::<T>::zeros(&[c_out]);

    for o in 0..c_out {
        let up_base = upstream.offset3(o, 0, 0);
        let mut acc = T::zero();
        for &u in &upstream.as_slice()[up_base..up_base + h * w] {
            acc = acc + u;
        }
        d_bias.as_mut_slice()[o] = acc;

        for c in 0..c_in {
            for dy in 0..kh {
                for dx in 0..kw {
                    let y_lo = pt.saturating_sub(dy);
                    let y_hi = (h + pt - dy).min(h);
                    let x_lo = pl.saturating_sub(dx);
                    let x_hi = (w + pl - dx).min(w);
                    if x_lo >= x_hi {
                        continue;
                    }
                    let weight = kernels.at4(o, c, dy, dx);
                    let mut wgrad = T::zero();
                    for y in y_lo..y_hi {
                        let iy = y + dy - pt;
                        let in_base = input.offset3(c, iy, x_lo + dx - pl);
                        let up_row_base = upstream.offset3(o, y, x_lo);
                        let n = x_hi - x_lo;
                        let in_row = &input.as_slice()[in_base..in_base + n];
                        let up_row = &upstream.as_slice()[up_row_base..up_row_base + n];
                        for (&iv, &uv) in in_row.iter().zip(up_row) {
                            wgrad = wgrad + iv * uv;
                        }
                        let din_base = d_input.offset3(c, iy, x_lo + dx - pl);
                        let din_row = &mut d_input.as_mut_slice()[din_base..din_base + n];
                        for (dv, &uv) in din_row.iter_mut().zip(up_row) {
                            *dv = *dv + weight * uv;
                        }
                    }
                    let idx = d_kernels.offset4(o, c, dy, dx);
                    d_kernels.as_mut_slice()[idx] = wgrad;
                }
            }
        }
    }
    Ok((d_input, d_kernels, d_bias))
}

/// Max pooling with same-padding. Returns the pooled tensor and, per output
/// cell, the flat input index of its maximum (ties to the smallest index).
pub fn maxpool2d<T: Scalar>(
    input: &Tensor<T>,
    pool: (usize, usize),
    stride: (usize, usize),
) -> Result<(Tensor<T>, Vec<u32>), NnError> {
    let [c, h, w] = *input.shape() else {
        return Err(shape_err(format!("pool input must be rank 3, got {:?}", input.shape())));
    };
    let (ph, pw) = pool;
    let (sh, sw) = stride;
    if ph == 0 || pw == 0 || sh == 0 || sw == 0 {
        return Err(shape_err("pool and stride extents must be positive".into()));
    }
    let oh = h.div_ceil(sh);
    let ow = w.div_ceil(sw);
    let mut out = Tensor::<T>::zeros(&[c, oh, ow]);
    let mut argmax = vec![0u32; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = T::neg_infinity();
                let mut best_idx = 0usize;
                for dy in 0..ph {
                    let iy = oy * sh + dy;
                    if iy >= h {
                        break;
                    }
                    for dx in 0..pw {
                        let ix = ox * sw + dx;
                        if ix >= w {
                            break;
                        }
                        let idx = input.offset3(ch, iy, ix);
                        let v = input.as_slice()[idx];
                        if v > best {
                            best = v;
                            best_idx = idx;
                        }
                    }
                }
                let oidx = out.offset3(ch, oy, ox);
                out.as_mut_slice()[oidx] = best;
                argmax[oidx] = best_idx as u32;
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each upstream value to its stored argmax cell.
pub fn maxpool2d_backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[u32],
    upstream: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if argmax.len() != upstream.len() {
        return Err(shape_err(format!(
            "argmax length {} != upstream length {}",
            argmax.len(),
            upstream.len()
        )));
    }
    let mut d_input = Tensor::<T>::zeros(input_shape);
    let d = d_input.as_mut_slice();
    for (&idx, &u) in argmax.iter().zip(upstream.as_slice()) {
        let i = idx as usize;
        if i >= d.len() {
            return Err(shape_err(format!("argmax index {i} outside input")));
        }
        d[i] = d[i] + u;
    }
    Ok(d_input)
}

/// y = Wx + b with `weights` laid out [n_out, n_in] row-major.
pub fn dense<T: Scalar>(
    input: &[T],
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Vec<T>, NnError> {
    let [n_out, n_in] = *weights.shape() else {
        return Err(shape_err(format!("weights must be rank 2, got {:?}", weights.shape())));
    };
    if input.len() != n_in || bias.shape() != [n_out] {
        return Err(shape_err(format!(
            "dense shapes disagree: input {}, weights {:?}, bias {:?}",
            input.len(),
            weights.shape(),
            bias.shape()
        )));
    }
    let w = weights.as_slice();
    Ok((0..n_out)
        .map(|o| {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = bias.as_slice()[o];
            for (&wi, &xi) in row.iter().zip(input) {
                acc = acc + wi * xi;
            }
            acc
        })
        .collect())
}

/// Gradients of [`dense`]: (input grad, weight grads, bias grads).
pub fn dense_backward<T: Scalar>(
    input: &[T],
    weights: &Tensor<T>,
    upstream: &[T],
) -> Result<(Vec<T>, Tensor<T>, Tensor<T>), NnError> {
    let [n_out, n_in] = *weights.shape() else {
        return Err(shape_err(format!("weights must be rank 2, got {:?}", weights.shape())));
    };
    if input.len() != n_in || upstream.len() != n_out {
        return Err(shape_err(format!(
            "dense backward shapes disagree: input {}, upstream {}",
            input.len(),
            upstream.len()
        )));
    }
    let w = weights.as_slice();
    let mut d_input = vec![T::zero(); n_in];
    let mut d_weights = Tensor::<T>::zeros(&[n_out, n_in]);
    let dw = d_weights.as_mut_slice();
    for o in 0..n_out {
        let u = upstream[o];
        let row = &w[o * n_in..(o + 1) * n_in];
        let drow = &mut dw[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            drow[i] = u * input[i];
            d_input[i] = d_input[i] + u * row[i];
        }
    }
    let d_bias = Tensor::from_vec(&[n_out], upstream.to_vec());
    Ok((d_input, d_weights, d_bias))
}

/// Elementwise max(0, x).
pub fn relu<T: Scalar>(input: &[T]) -> Vec<T> {
    input.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// Passes upstream gradient where the pre-activation was > 0; the
/// subgradient at exactly 0 is 0.
pub fn relu_backward<T: Scalar>(pre: &[T], upstream: &[T]) -> Vec<T> {
    pre.iter()
        .zip(upstream)
        .map(|(&x, &u)| if x > T::zero() { u } else { T::zero() })
        .collect()
}

/// Inverted dropout: in Train mode each unit survives with probability
/// `keep_prob` and survivors scale by 1/keep_prob; Eval mode is the
/// identity and stores no mask.
pub fn dropout<T: Scalar, R: Rng>(
    input: &[T],
    keep_prob: f64,
    mode: Mode,
    rng: &mut R,
) -> (Vec<T>, Option<Vec<bool>>) {
    assert!(
        keep_prob > 0.0 && keep_prob <= 1.0,
        "keep_prob must lie in (0, 1], got {keep_prob}"
    );
    match mode {
        Mode::Eval => (input.to_vec(), None),
        Mode::Train => {
            let scale = T::from_f64(1.0 / keep_prob);
            let mut mask = vec![false; input.len()];
            let out = input
                .iter()
                .zip(mask.iter_mut())
                .map(|(&v, kept)| {
                    *kept = rng.random::<f64>() < keep_prob;
                    if *kept {
                        v * scale
                    } else {
                        T::zero()
                    }
                })
                .collect();
            (out, Some(mask))
        }
    }
}

pub fn dropout_backward<T: Scalar>(mask: &[bool], keep_prob: f64, upstream: &[T]) -> Vec<T> {
    let scale = T::from_f64(1.0 / keep_prob);
    mask.iter()
        .zip(upstream)
        .map(|(&kept, &u)| if kept { u * scale } else { T::zero() })
        .collect()
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<T> = logits.iter().map(|&v| (v - m).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
