//! Mini-batch Adam training with a fixed-order gradient reduction.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{DatasetSplits, Scan};
use crate::seed::{self, stream};

use super::classifier::{Classifier, Covariates};
use super::network::{backward, cross_entropy, forward, Mode, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 1e-4,
            batch_size: 64,
            dropout_rate: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for 32-voxel phantoms: smaller batches and a larger step than
    /// the full-scale defaults, so 50 epochs suffice on a few hundred scans.
    pub fn desk() -> Self {
        TrainConfig { batch_size: 16, learning_rate: 1e-3, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument("learning rate must be >= 0 and dropout in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("Adam betas must be in [0, 1) and epsilon positive".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub m: Vec<F>,
    pub v: Vec<F>,
    pub t: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![F::zero(); n], v: vec![F::zero(); n], t: 0 }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<F: Scalar>(params: &mut [F], grads: &[F], state: &mut AdamState<F>, cfg: &TrainConfig) {
    assert_eq!(params.len(), grads.len());
    state.t += 1;
    let f = |v: f64| F::from_f64(v).unwrap();
    let (b1, b2) = (f(cfg.beta1), f(cfg.beta2));
    let c1 = f(1.0 - cfg.beta1.powi(state.t as i32));
    let c2 = f(1.0 - cfg.beta2.powi(state.t as i32));
    let (lr, eps) = (f(cfg.learning_rate), f(cfg.epsilon));
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (F::one() - b1) * g;
        state.v[i] = b2 * state.v[i] + (F::one() - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

struct Encoded {
    input: Vec<f32>,
    cov: [f32; 2],
    label: usize,
}

fn encode_all(model: &Classifier, scans: &[Scan]) -> Result<Vec<Encoded>> {
    scans
        .par_iter()
        .map(|s| {
            Ok(Encoded {
                input: model.encode_volume(&s.volume)?,
                cov: model.encode_covariates(Covariates::from(s)),
                label: s.label.class_index(),
            })
        })
        .collect()
}

/// Mean eval-mode cross-entropy (temperature 1) over `scans`.
pub fn mean_loss(model: &Classifier, scans: &[Scan]) -> Result<f64> {
    let data = encode_all(model, scans)?;
    let losses: Vec<f64> = data
        .par_iter()
        .map(|e| Ok(cross_entropy(model.logits_encoded(&e.input, &e.cov)?, e.label)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Trains `model` on `splits.train` and records train/validation loss per epoch.
///
/// Each batch's per-example gradients may be computed concurrently but are
/// summed in batch order, so the result does not depend on the thread count.
/// Dropout masks are keyed by `(seed, epoch, position in the shuffled epoch)`.
pub fn train(model: &mut Classifier, splits: &DatasetSplits, cfg: &TrainConfig) -> Result<TrainHistory> {
    cfg.validate()?;
    if splits.train.is_empty() {
        return Err(Error::InsufficientData("empty training split".into()));
    }
    let data = encode_all(model, &splits.train)?;
    let plan = model.plan().clone();
    let n_params = plan.param_count;
    let mut state = AdamState::<f32>::new(n_params);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = seed::rng(cfg.seed, &[stream::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let params = model.params();
            let results: Vec<Result<(f64, bool, Vec<f32>)>> = batch
                .par_iter()
                .enumerate()
                .map(|(k, &i)| {
                    let e = &data[i];
                    let position = (batch_index * cfg.batch_size + k) as u64;
                    let dropout_seed = seed::derive(cfg.seed, &[stream::DROPOUT, epoch as u64, position]);
                    let cache = forward(&plan, params, &e.input, &e.cov, Mode::Train, dropout_seed)?;
                    let loss = cross_entropy(cache.logits, e.label) as f64;
                    let predicted = usize::from(cache.logits[1] > cache.logits[0]);
                    let mut grad = vec![0.0f32; n_params];
                    backward(&plan, params, &cache, e.label, &mut grad)?;
                    Ok((loss, predicted == e.label, grad))
                })
                .collect();
            let mut sum = vec![0.0f32; n_params];
            let mut batch_loss = 0.0;
            for r in results {
                let (loss, ok, grad) = r?;
                batch_loss += loss;
                correct += usize::from(ok);
                for (s, g) in sum.iter_mut().zip(&grad) {
                    *s += *g;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_index, loss: batch_loss });
            }
            loss_sum += batch_loss;
            let inv = 1.0 / batch.len() as f32;
            sum.iter_mut().for_each(|g| *g *= inv);
            adam_step(model.params_mut(), &sum, &mut state, cfg);
        }
        let validation_loss = if splits.validation.is_empty() { f64::NAN } else { mean_loss(model, &splits.validation)? };
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / data.len() as f64,
            validation_loss,
            train_accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0f64, -2.0, 3.0];
        let mut st = AdamState::new(3);
        let cfg = TrainConfig { learning_rate: 0.1, ..Default::default() };
        for _ in 0..3 {
            adam_step(&mut p, &[0.0; 3], &mut st, &cfg);
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = vec![0.0f64; 3];
        let mut st = AdamState::new(3);
        let cfg = TrainConfig { learning_rate: 0.01, epsilon: 1e-14, ..Default::default() };
        adam_step(&mut p, &[3.0, -0.5, 1e-3], &mut st, &cfg);
        for (v, s) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((v - s * 0.01).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn quadratic_trajectory_matches_hand_stepping() {
        // minimize f(x) = (x - 3)^2 from x = 0: g = 2 (x - 3)
        let cfg = TrainConfig { learning_rate: 0.1, ..Default::default() };
        let mut x = vec![0.0f64];
        let mut st = AdamState::new(1);
        let (mut hx, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=5 {
            let g = 2.0 * (x[0] - 3.0);
            adam_step(&mut x, &[g], &mut st, &cfg);
            let hg = 2.0 * (hx - 3.0);
            m = 0.9 * m + 0.1 * hg;
            v = 0.999 * v + 0.001 * hg * hg;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            hx -= 0.1 * mh / (vh.sqrt() + 1e-8);
            assert!((x[0] - hx).abs() < 1e-10, "step {t}: {} vs {hx}", x[0]);
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { dropout_rate: 1.0, ..Default::default() }.validate().is_err());
    }
}
