//! Sensitivity–specificity loss.
//!
//! Instead of cross-entropy, training maximizes soft per-class accuracies.
//! For each batch row whose prediction matches its label, the softmax
//! probability of the true class is collected into a per-class mask; the
//! masked sums divided by the per-class row counts give a soft sensitivity
//! S_e (abnormal) and specificity S_p (normal). The objective is
//! L = −(S_e + S_p) + λ·R over the fully connected weights and biases.
//!
//! The correct/incorrect indicator inside the masks is not differentiable,
//! so gradients treat it as a constant of the forward pass: they flow only
//! through the probability values the masks select.

use crate::nn::{Grads, NetworkParams};
use crate::pcg_io::Label;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum LossError {
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
}

/// Class order across the crate: column 0 normal, column 1 abnormal.
pub const NORMAL: usize = 0;
pub const ABNORMAL: usize = 1;

/// One batch of network outputs with their true labels, all [n, 2].
#[derive(Debug, Clone)]
pub struct LabeledBatch<T: Scalar> {
    probabilities: Tensor<T>,
    logits: Tensor<T>,
    one_hot: Tensor<T>,
}

impl<T: Scalar> LabeledBatch<T> {
    pub fn new(
        logits: Tensor<T>,
        probabilities: Tensor<T>,
        one_hot: Tensor<T>,
    ) -> Result<Self, LossError> {
        let shape = probabilities.shape();
        if shape.len() != 2 || shape[1] != 2 || shape[0] == 0 {
            return Err(LossError::InvalidBatch(format!(
                "probabilities must be [n, 2] with n > 0, got {shape:?}"
            )));
        }
        if logits.shape() != shape || one_hot.shape() != shape {
            return Err(LossError::InvalidBatch(
                "logits, probabilities, and one_hot must share one shape".into(),
            ));
        }
        for row in 0..shape[0] {
            let p0 = probabilities.at2(row, 0).to_f64();
            let p1 = probabilities.at2(row, 1).to_f64();
            if !(p0 >= 0.0 && p1 >= 0.0) || (p0 + p1 - 1.0).abs() > 1e-4 {
                return Err(LossError::InvalidBatch(format!(
                    "probability row {row} is ({p0}, {p1}), not a distribution"
                )));
            }
            let h0 = one_hot.at2(row, 0).to_f64();
            let h1 = one_hot.at2(row, 1).to_f64();
            if !((h0 == 0.0 && h1 == 1.0) || (h0 == 1.0 && h1 == 0.0)) {
                return Err(LossError::InvalidBatch(format!(
                    "label row {row} is ({h0}, {h1}), not one-hot"
                )));
            }
        }
        Ok(LabeledBatch { probabilities, logits, one_hot })
    }

    /// Builds a batch from per-sample (logits, probabilities, label) triples.
    pub fn from_samples(samples: &[([T; 2], [T; 2], Label)]) -> Result<Self, LossError> {
        let n = samples.len();
        let mut logits = Vec::with_capacity(2 * n);
        let mut probs = Vec::with_capacity(2 * n);
        let mut one_hot = Vec::with_capacity(2 * n);
        for (l, p, label) in samples {
            logits.extend_from_slice(l);
            probs.extend_from_slice(p);
            let abnormal = matches!(label, Label::Abnormal);
            one_hot.push(T::from_f64(if abnormal { 0.0 } else { 1.0 }));
            one_hot.push(T::from_f64(if abnormal { 1.0 } else { 0.0 }));
        }
        LabeledBatch::new(
            Tensor::from_vec(&[n, 2], logits),
            Tensor::from_vec(&[n, 2], probs),
            Tensor::from_vec(&[n, 2], one_hot),
        )
    }

    pub fn len(&self) -> usize {
        self.probabilities.shape()[0]
    }

    pub fn logits(&self) -> &Tensor<T> {
        &self.logits
    }

    pub fn probabilities(&self) -> &Tensor<T> {
        &self.probabilities
    }

    pub fn is_empty(&self) -> bool {
        false // new() rejects n = 0
    }

    fn true_class(&self, row: usize) -> usize {
        if self.one_hot.at2(row, ABNORMAL).to_f64() == 1.0 {
            ABNORMAL
        } else {
            NORMAL
        }
    }

    /// Predicted class with ties broken toward normal (class 0).
    fn predicted_class(&self, row: usize) -> usize {
        let p0 = self.probabilities.at2(row, NORMAL);
        let p1 = self.probabilities.at2(row, ABNORMAL);
        if p1.to_f64() > p0.to_f64() {
            ABNORMAL
        } else {
            NORMAL
        }
    }

    fn class_count(&self, class: usize) -> usize {
        (0..self.len()).filter(|&r| self.true_class(r) == class).count()
    }
}

/// Per-row mask entries (Y_Nn, Y_Aa): the true-class probability where the
/// row is correctly classified, zero otherwise. At most one of the two is
/// nonzero for any row.
pub fn build_masks<T: Scalar>(batch: &LabeledBatch<T>) -> (Vec<T>, Vec<T>) {
    let n = batch.len();
    let mut y_nn = vec![T::default(); n];
    let mut y_aa = vec![T::default(); n];
    for row in 0..n {
        let truth = batch.true_class(row);
        if batch.predicted_class(row) != truth {
            continue;
        }
        let p = batch.probabilities.at2(row, truth);
        if truth == NORMAL {
            y_nn[row] = p;
        } else {
            y_aa[row] = p;
        }
    }
    (y_nn, y_aa)
}

/// Soft (S_e, S_p): masked sums over the per-class row counts. A class with
/// no rows in the batch contributes its term as 1 (with zero gradient), so
/// an unlucky shuffle cannot spike the loss.
pub fn sesp_values<T: Scalar>(batch: &LabeledBatch<T>) -> (f64, f64) {
    let (y_nn, y_aa) = build_masks(batch);
    let n_normal = batch.class_count(NORMAL);
    let n_abnormal = batch.class_count(ABNORMAL);
    let se = if n_abnormal == 0 {
        1.0
    } else {
        y_aa.iter().map(|&v| Scalar::to_f64(v)).sum::<f64>() / n_abnormal as f64
    };
    let sp = if n_normal == 0 {
        1.0
    } else {
        y_nn.iter().map(|&v| Scalar::to_f64(v)).sum::<f64>() / n_normal as f64
    };
    (se, sp)
}

#[derive(Debug, Clone)]
pub struct LossReport<T: Scalar> {
    pub se: f64,
    pub sp: f64,
    /// λ·R over the fully connected weights and biases.
    pub penalty: f64,
    /// −(S_e + S_p) + penalty.
    pub total: f64,
    /// ∂L/∂logits, [n, 2], under the frozen-mask convention.
    pub logit_gradient: Tensor<T>,
}

/// Full loss with gradients w.r.t. the logits. The parameter-side penalty
/// gradient comes from [`l2_penalty`].
pub fn sesp_loss<T: Scalar>(
    batch: &LabeledBatch<T>,
    params: &NetworkParams<T>,
    lambda: f64,
) -> LossReport<T> {
    let (se, sp) = sesp_values(batch);
    let (penalty, _) = l2_penalty(params, lambda);

    let n = batch.len();
    let n_normal = batch.class_count(NORMAL);
    let n_abnormal = batch.class_count(ABNORMAL);
    let mut grad = Tensor::<T>::zeros(&[n, 2]);
    for row in 0..n {
        let truth = batch.true_class(row);
        if batch.predicted_class(row) != truth {
            continue;
        }
        let denom = if truth == NORMAL { n_normal } else { n_abnormal } as f64;
        let p_true = batch.probabilities.at2(row, truth).to_f64();
        for j in 0..2 {
            let p_j = batch.probabilities.at2(row, j).to_f64();
            let delta = if j == truth { 1.0 } else { 0.0 };
            // d(−p_true/denom)/dlogit_j through the softmax
            let g = -(p_true * (delta - p_j)) / denom;
            grad.as_mut_slice()[row * 2 + j] = T::from_f64(g);
        }
    }

    LossReport {
        se,
        sp,
        penalty,
        total: -(se + sp) + penalty,
        logit_gradient: grad,
    }
}

/// λ·Σw² over fc1/fc2/output weights and biases, with the matching 2λw
/// gradient contribution. Convolutional tensors are exempt.
pub fn l2_penalty<T: Scalar>(params: &NetworkParams<T>, lambda: f64) -> (f64, Grads<T>) {
    let mut grads = Grads::zeros_like(params);
    let regularized = [
        (&params.fc1_w, &mut grads.fc1_w),
        (&params.fc1_b, &mut grads.fc1_b),
        (&params.fc2_w, &mut grads.fc2_w),
        (&params.fc2_b, &mut grads.fc2_b),
        (&params.out_w, &mut grads.out_w),
        (&params.out_b, &mut grads.out_b),
    ];
    let mut sum_sq = 0.0;
    for (param, grad) in regularized {
        for (g, &w) in grad.as_mut_slice().iter_mut().zip(param.as_slice()) {
            let wf = w.to_f64();
            sum_sq += wf * wf;
            *g = T::from_f64(2.0 * lambda * wf);
        }
    }
    (lambda * sum_sq, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn batch_from(rows: &[([f64; 2], Label)]) -> LabeledBatch<f64> {
        let samples: Vec<_> = rows
            .iter()
            .map(|&(p, label)| {
                // logits that reproduce p exactly under softmax
                let l = [p[0].max(1e-300).ln(), p[1].max(1e-300).ln()];
                (l, p, label)
            })
            .collect();
        LabeledBatch::from_samples(&samples).unwrap()
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> LabeledBatch<f64> {
        let samples: Vec<_> = (0..n)
            .map(|_| {
                let l = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                let p = softmax(&l);
                let label = if rng.random_range(0.0..1.0) < 0.5 {
                    Label::Normal
                } else {
                    Label::Abnormal
                };
                (l, [p[0], p[1]], label)
            })
            .collect();
        LabeledBatch::from_samples(&samples).unwrap()
    }

    fn zero_params() -> NetworkParams<f64> {
        let mut p = crate::nn::network::tests::tiny_params(0);
        for t in p.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = 0.0;
            }
        }
        p
    }

    #[test]
    fn mask_definition_and_tie_break() {
        let batch = batch_from(&[
            ([0.1, 0.9], Label::Abnormal),
            ([0.7, 0.3], Label::Abnormal),
            ([0.5, 0.5], Label::Normal),
        ]);
        let (y_nn, y_aa) = build_masks(&batch);
        assert_eq!(y_aa, vec![0.9, 0.0, 0.0]);
        assert_eq!(y_nn, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn mask_exclusivity_on_random_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let batch = random_batch(&mut rng, 17);
            let (y_nn, y_aa) = build_masks(&batch);
            for (a, b) in y_nn.iter().zip(&y_aa) {
                assert!(*a == 0.0 || *b == 0.0);
            }
        }
    }

    #[test]
    fn sesp_hand_example() {
        let batch = batch_from(&[
            ([0.9, 0.1], Label::Normal),
            ([0.1, 0.9], Label::Abnormal),
        ]);
        let (se, sp) = sesp_values(&batch);
        assert!((se - 0.9).abs() < 1e-12);
        assert!((sp - 0.9).abs() < 1e-12);
    }

    #[test]
    fn misclassified_batch_scores_zero() {
        let batch = batch_from(&[
            ([0.2, 0.8], Label::Normal),
            ([0.8, 0.2], Label::Abnormal),
        ]);
        assert_eq!(sesp_values(&batch), (0.0, 0.0));
    }

    #[test]
    fn unanimous_confident_class_scores_one() {
        let batch = batch_from(&[([0.0, 1.0], Label::Abnormal); 4]);
        let (se, sp) = sesp_values(&batch);
        assert_eq!(se, 1.0);
        // no normal rows: the absent class contributes 1
        assert_eq!(sp, 1.0);
    }

    #[test]
    fn sesp_stays_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = 1 + rng.random_range(0..12);
            let batch = random_batch(&mut rng, n);
            let (se, sp) = sesp_values(&batch);
            assert!((0.0..=1.0).contains(&se), "se {se}");
            assert!((0.0..=1.0).contains(&sp), "sp {sp}");
        }
    }

    #[test]
    fn raising_a_correct_rows_confidence_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let batch = random_batch(&mut rng, 8);
            let (se0, sp0) = sesp_values(&batch);
            // find a correctly classified row and push its true-class
            // probability up
            let Some(row) = (0..batch.len())
                .find(|&r| batch.predicted_class(r) == batch.true_class(r))
            else {
                continue;
            };
            let truth = batch.true_class(row);
            let p = batch.probabilities.at2(row, truth);
            let boosted = (p + 0.3).min(1.0);
            let mut probs = batch.probabilities.clone();
            probs.as_mut_slice()[row * 2 + truth] = boosted;
            probs.as_mut_slice()[row * 2 + (1 - truth)] = 1.0 - boosted;
            let bumped = LabeledBatch {
                probabilities: probs,
                logits: batch.logits.clone(),
                one_hot: batch.one_hot.clone(),
            };
            let (se1, sp1) = sesp_values(&bumped);
            assert!(se1 + sp1 >= se0 + sp0 - 1e-12);
        }
    }

    #[test]
    fn loss_extremes_with_zero_weights() {
        let params = zero_params();
        let perfect = batch_from(&[
            ([1.0, 0.0], Label::Normal),
            ([0.0, 1.0], Label::Abnormal),
        ]);
        let report = sesp_loss(&perfect, &params, 0.1);
        assert_eq!(report.total, -2.0);
        assert_eq!(report.penalty, 0.0);

        let wrong = batch_from(&[
            ([0.2, 0.8], Label::Normal),
            ([0.8, 0.2], Label::Abnormal),
        ]);
        assert_eq!(sesp_loss(&wrong, &params, 0.1).total, 0.0);
    }

    #[test]
    fn data_term_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = zero_params();
        for _ in 0..50 {
            let n = 1 + rng.random_range(0..9);
            let batch = random_batch(&mut rng, n);
            let r = sesp_loss(&batch, &params, 0.5);
            let data_term = r.total - r.penalty;
            assert!((-2.0..=0.0).contains(&data_term), "data term {data_term}");
        }
    }

    /// Frozen-mask finite differences: perturb the logits, rebuild the
    /// probabilities through softmax, but keep the original row selection
    /// and denominators fixed.
    #[test]
    fn logit_gradient_matches_frozen_mask_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = zero_params();
        for _ in 0..50 {
            let n = 1 + rng.random_range(0..7);
            let batch = random_batch(&mut rng, n);
            let report = sesp_loss(&batch, &params, 0.0);

            let selected: Vec<Option<(usize, f64)>> = (0..n)
                .map(|r| {
                    let truth = batch.true_class(r);
                    (batch.predicted_class(r) == truth).then(|| {
                        let denom = batch.class_count(truth) as f64;
                        (truth, denom)
                    })
                })
                .collect();
            let frozen_objective = |logits: &Tensor<f64>| -> f64 {
                let mut total = 0.0;
                for (r, sel) in selected.iter().enumerate() {
                    if let Some((truth, denom)) = sel {
                        let p = softmax(&[logits.at2(r, 0), logits.at2(r, 1)]);
                        total -= p[*truth] / denom;
                    }
                }
                total
            };

            let h = 1e-6;
            for r in 0..n {
                for j in 0..2 {
                    let mut plus = batch.logits.clone();
                    plus.as_mut_slice()[r * 2 + j] += h;
                    let mut minus = batch.logits.clone();
                    minus.as_mut_slice()[r * 2 + j] -= h;
                    let fd = (frozen_objective(&plus) - frozen_objective(&minus)) / (2.0 * h);
                    let an = report.logit_gradient.at2(r, j);
                    assert!(
                        (an - fd).abs() <= 1e-6 * fd.abs().max(1e-6),
                        "row {r} logit {j}: analytic {an} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn penalty_covers_fc_only() {
        let lambda = 0.1;
        let mut params = zero_params();
        assert_eq!(l2_penalty(&params, lambda).0, 0.0);

        params.fc1_w.as_mut_slice()[0] = 3.0;
        let (value, grads) = l2_penalty(&params, lambda);
        assert!((value - 0.9).abs() < 1e-12);
        assert!((grads.fc1_w.as_slice()[0] - 0.6).abs() < 1e-12);

        // conv tensors are out of scope for the penalty
        params.conv1_w.as_mut_slice()[0] = 100.0;
        let (same, grads2) = l2_penalty(&params, lambda);
        assert_eq!(same, value);
        assert!(grads2.conv1_w.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn biases_are_regularized_too() {
        let lambda = 2.0;
        let mut params = zero_params();
        params.fc2_b.as_mut_slice()[1] = -1.5;
        params.out_b.as_mut_slice()[0] = 0.5;
        let (value, grads) = l2_penalty(&params, lambda);
        assert!((value - 2.0 * (2.25 + 0.25)).abs() < 1e-12);
        assert!((grads.fc2_b.as_slice()[1] - (-6.0)).abs() < 1e-12);
        assert!((grads.out_b.as_slice()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn batch_validation_rejects_malformed_rows() {
        let bad_prob = LabeledBatch::new(
            Tensor::from_vec(&[1, 2], vec![0.0, 0.0]),
            Tensor::from_vec(&[1, 2], vec![0.7, 0.7]),
            Tensor::from_vec(&[1, 2], vec![1.0, 0.0]),
        );
        assert!(bad_prob.is_err());

        let bad_one_hot = LabeledBatch::new(
            Tensor::from_vec(&[1, 2], vec![0.0, 0.0]),
            Tensor::from_vec(&[1, 2], vec![0.5, 0.5]),
            Tensor::from_vec(&[1, 2], vec![0.4, 0.6]),
        );
        assert!(bad_one_hot.is_err());
    }
}
