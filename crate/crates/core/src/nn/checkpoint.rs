//! Checkpoint serialization.
//!
//! Layout, all integers and floats little-endian:
//!   magic "AUSC", version u16 (=1), tensor count u16 (=10);
//!   per tensor, in [`PARAM_NAMES`] order: name length u16, name bytes,
//!     rank u8, one extent u32 per axis, then f32 data in row-major order;
//!   normalization stats: row count u32, then per-row mean f64 and std f64;
//!   hyper block: learning_rate f64, lambda f64, keep_prob f64,
//!     batch_size u32, max_epochs u32, patience u32, seed u64,
//!     then pool1 and pool2 as four u32 each (size h, size w, stride h,
//!     stride w).
//! Parsing is strict: every field is validated and trailing bytes are an
//! error, so a load → save round trip is byte-identical.

use std::path::Path;

use super::network::{Hyperparams, NetworkParams, PoolSpec, OUTPUT_CLASSES, PARAM_NAMES};
use super::NnError;
use crate::features::NormalizationStats;
use crate::tensor::{Scalar, Tensor};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"AUSC";
pub const CHECKPOINT_VERSION: u16 = 1;

const EXPECTED_RANKS: [u8; 10] = [4, 1, 4, 1, 2, 1, 2, 1, 2, 1];
/// Caps keep a corrupt length field from requesting a huge allocation.
const MAX_TENSOR_ELEMS: u64 = 1 << 28;
const MAX_NORM_ROWS: u32 = 1 << 16;

pub fn checkpoint_to_bytes<T: Scalar>(params: &NetworkParams<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(PARAM_NAMES.len() as u16).to_le_bytes());

    for (name, tensor) in PARAM_NAMES.iter().zip(params.tensors()) {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(tensor.shape().len() as u8);
        for &extent in tensor.shape() {
            out.extend_from_slice(&(extent as u32).to_le_bytes());
        }
        for &v in tensor.as_slice() {
            out.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
    }

    let stats = &params.norm_stats;
    out.extend_from_slice(&(stats.mean.len() as u32).to_le_bytes());
    for (&m, &s) in stats.mean.iter().zip(&stats.std) {
        out.extend_from_slice(&m.to_le_bytes());
        out.extend_from_slice(&s.to_le_bytes());
    }

    let h = &params.hyper;
    out.extend_from_slice(&h.learning_rate.to_le_bytes());
    out.extend_from_slice(&h.lambda.to_le_bytes());
    out.extend_from_slice(&h.keep_prob.to_le_bytes());
    out.extend_from_slice(&h.batch_size.to_le_bytes());
    out.extend_from_slice(&h.max_epochs.to_le_bytes());
    out.extend_from_slice(&h.patience.to_le_bytes());
    out.extend_from_slice(&h.seed.to_le_bytes());
    for pool in [params.pool1, params.pool2] {
        for dim in [pool.size.0, pool.size.1, pool.stride.0, pool.stride.1] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NnError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| NnError::Checkpoint(format!("truncated while reading {what}")))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16, NnError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8, NnError> {
        Ok(self.take(1, what)?[0])
    }

    fn f32(&mut self, what: &str) -> Result<f32, NnError> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn read_tensor(cur: &mut Cursor, index: usize) -> Result<Tensor<f32>, NnError> {
    let expected_name = PARAM_NAMES[index];
    let name_len = cur.u16("tensor name length")? as usize;
    if name_len > 64 {
        return Err(NnError::Checkpoint(format!(
            "tensor name length {name_len} out of range"
        )));
    }
    let name = cur.take(name_len, "tensor name")?;
    if name != expected_name.as_bytes() {
        return Err(NnError::Checkpoint(format!(
            "tensor {index} is named {:?}, expected {expected_name:?}",
            String::from_utf8_lossy(name)
        )));
    }
    let rank = cur.u8("tensor rank")?;
    if rank != EXPECTED_RANKS[index] {
        return Err(NnError::Checkpoint(format!(
            "{expected_name} has rank {rank}, expected {}",
            EXPECTED_RANKS[index]
        )));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut elems: u64 = 1;
    for axis in 0..rank {
        let extent = cur.u32("tensor extent")?;
        if extent == 0 {
            return Err(NnError::Checkpoint(format!(
                "{expected_name} axis {axis} has zero extent"
            )));
        }
        elems = elems.saturating_mul(extent as u64);
        shape.push(extent as usize);
    }
    if elems > MAX_TENSOR_ELEMS {
        return Err(NnError::Checkpoint(format!(
            "{expected_name} claims {elems} elements, over the {MAX_TENSOR_ELEMS} cap"
        )));
    }
    let mut data = Vec::with_capacity(elems as usize);
    for _ in 0..elems {
        data.push(cur.f32("tensor data")?);
    }
    Ok(Tensor::from_vec(&shape, data))
}

/// Cross-tensor shape consistency: each bias matches its weight's output
/// axis, each layer's input axis matches the previous layer's output, and
/// the head emits [`OUTPUT_CLASSES`] logits.
fn validate_shapes(t: &[Tensor<f32>; 10]) -> Result<(), NnError> {
    let check = |ok: bool, msg: &str| -> Result<(), NnError> {
        if ok {
            Ok(())
        } else {
            Err(NnError::Checkpoint(msg.into()))
        }
    };
    let [conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b] = t;
    check(conv1_b.len() == conv1_w.shape()[0], "conv1 bias does not match kernel count")?;
    check(conv2_w.shape()[1] == conv1_w.shape()[0], "conv2 input channels do not match conv1")?;
    check(conv2_b.len() == conv2_w.shape()[0], "conv2 bias does not match kernel count")?;
    check(fc1_b.len() == fc1_w.shape()[0], "fc1 bias does not match row count")?;
    check(fc2_w.shape()[1] == fc1_w.shape()[0], "fc2 input width does not match fc1")?;
    check(fc2_b.len() == fc2_w.shape()[0], "fc2 bias does not match row count")?;
    check(out_w.shape()[1] == fc2_w.shape()[0], "output input width does not match fc2")?;
    check(out_w.shape()[0] == OUTPUT_CLASSES, "output layer must emit two logits")?;
    check(out_b.len() == OUTPUT_CLASSES, "output bias must hold two entries")?;
    Ok(())
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<NetworkParams<f32>, NnError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic bytes".into()));
    }
    let version = cur.u16("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let count = cur.u16("tensor count")?;
    if count as usize != PARAM_NAMES.len() {
        return Err(NnError::Checkpoint(format!(
            "tensor count {count}, expected {}",
            PARAM_NAMES.len()
        )));
    }

    let mut tensors = Vec::with_capacity(10);
    for index in 0..10 {
        tensors.push(read_tensor(&mut cur, index)?);
    }
    let tensors: [Tensor<f32>; 10] = tensors.try_into().expect("ten tensors read");
    validate_shapes(&tensors)?;

    let rows = cur.u32("normalization row count")?;
    if rows == 0 || rows > MAX_NORM_ROWS {
        return Err(NnError::Checkpoint(format!(
            "normalization row count {rows} out of range"
        )));
    }
    let mut mean = Vec::with_capacity(rows as usize);
    let mut std = Vec::with_capacity(rows as usize);
    for _ in 0..rows {
        mean.push(cur.f64("normalization mean")?);
        std.push(cur.f64("normalization std")?);
    }
    if mean.iter().any(|v| !v.is_finite()) || std.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(NnError::Checkpoint(
            "normalization stats must be finite with positive stds".into(),
        ));
    }

    let hyper = Hyperparams {
        learning_rate: cur.f64("learning rate")?,
        lambda: cur.f64("lambda")?,
        keep_prob: cur.f64("keep probability")?,
        batch_size: cur.u32("batch size")?,
        max_epochs: cur.u32("max epochs")?,
        patience: cur.u32("patience")?,
        seed: cur.u64("seed")?,
    };
    hyper
        .validate()
        .map_err(|e| NnError::Checkpoint(format!("hyper block rejected: {e}")))?;

    let mut pools = [PoolSpec { size: (0, 0), stride: (0, 0) }; 2];
    for pool in &mut pools {
        let sh = cur.u32("pool size")? as usize;
        let sw = cur.u32("pool size")? as usize;
        let th = cur.u32("pool stride")? as usize;
        let tw = cur.u32("pool stride")? as usize;
        if sh == 0 || sw == 0 || th == 0 || tw == 0 {
            return Err(NnError::Checkpoint("pool dimensions must be nonzero".into()));
        }
        *pool = PoolSpec { size: (sh, sw), stride: (th, tw) };
    }

    if cur.pos != bytes.len() {
        return Err(NnError::Checkpoint(format!(
            "{} trailing bytes after hyper block",
            bytes.len() - cur.pos
        )));
    }

    let [conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b] = tensors;
    Ok(NetworkParams {
        conv1_w,
        conv1_b,
        conv2_w,
        conv2_b,
        fc1_w,
        fc1_b,
        fc2_w,
        fc2_b,
        out_w,
        out_b,
        pool1: pools[0],
        pool2: pools[1],
        norm_stats: NormalizationStats { mean, std },
        hyper,
    })
}

pub fn save_checkpoint<T: Scalar>(path: &Path, params: &NetworkParams<T>) -> Result<(), NnError> {
    Ok(std::fs::write(path, checkpoint_to_bytes(params))?)
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams<f32>, NnError> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}
