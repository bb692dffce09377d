//! Loss, optimizer, and the sequence-level training loop. Each oracle path
//! is one training sequence: the recurrent state threads across all of its
//! steps, matching how the net is consumed at planning time.

use super::{LstmNet, NetworkError};
use crate::dataset::TrainingSample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mean squared error over masked timesteps:
/// sum_t mask_t * ||pred_t - target_t||^2 / (d * sum_t mask_t).
pub fn mse_loss(
    pred: &[Vec<f64>],
    target: &[Vec<f64>],
    mask: &[bool],
) -> Result<f64, NetworkError> {
    if pred.len() != target.len() || pred.len() != mask.len() {
        return Err(NetworkError::LengthMismatch);
    }
    let active = mask.iter().filter(|&&m| m).count();
    if active == 0 {
        return Err(NetworkError::EmptyMask);
    }
    let d = pred.first().map(|p| p.len()).unwrap_or(0);
    let mut sum = 0.0;
    for ((p, t), &m) in pred.iter().zip(target).zip(mask) {
        if m {
            sum += p
                .iter()
                .zip(t)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    Ok(sum / (d as f64 * active as f64))
}

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam update, element-wise; `t` counts updates from 1.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamParams,
) {
    assert!(t >= 1);
    let b1t = 1.0 - cfg.beta1.powi(t as i32);
    let b2t = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        let mhat = m[i] / b1t;
        let vhat = v[i] / b2t;
        params[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
    }
}

/// Scales gradients down to the given L2 norm when they exceed it; returns
/// the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= s;
        }
    }
    norm
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub clip_norm: f64,
    pub adam: AdamParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            seed: 0,
            shuffle: true,
            clip_norm: 5.0,
            adam: AdamParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

/// One normalized training sequence (a whole oracle path).
#[derive(Debug, Clone)]
pub struct Sequence {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

/// Groups samples by path and normalizes them into network units. Samples
/// of one path must appear with consecutive step indices (as produced by
/// `dataset::split_paths`).
pub fn sequences_from_samples(net: &LstmNet, samples: &[TrainingSample]) -> Vec<Sequence> {
    let mut out: Vec<Sequence> = Vec::new();
    let mut cur_path: Option<usize> = None;
    for s in samples {
        if cur_path != Some(s.path_id) {
            cur_path = Some(s.path_id);
            out.push(Sequence {
                inputs: Vec::new(),
                targets: Vec::new(),
            });
        }
        let seq = out.last_mut().unwrap();
        seq.inputs.push(net.normalize(&s.input));
        seq.targets.push(net.normalize(s.target.coords()));
    }
    out
}

/// Mean MSE of the net over whole sequences, forward only.
pub fn eval_sequences(net: &LstmNet, seqs: &[Sequence]) -> f64 {
    let mut sum = 0.0;
    let mut steps = 0usize;
    for s in seqs {
        let (outs, _) = net.forward_tape(&s.inputs);
        for (o, t) in outs.iter().zip(&s.targets) {
            sum += o
                .iter()
                .zip(t)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        steps += s.inputs.len();
    }
    if steps == 0 {
        f64::NAN
    } else {
        sum / (net.dim() as f64 * steps as f64)
    }
}

/// Trains in place. Batches are groups of sequences; the batch loss is the
/// mask-weighted MSE over every step in the batch, so shorter sequences are
/// not up-weighted. Single-threaded and fully deterministic for a given
/// seed. Returns per-epoch train/val MSE (train MSE is measured on the
/// evolving weights during the epoch).
pub fn train(
    net: &mut LstmNet,
    train_samples: &[TrainingSample],
    val_samples: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, NetworkError> {
    if train_samples.is_empty() {
        return Err(NetworkError::EmptyTrainingSet);
    }
    let seqs = sequences_from_samples(net, train_samples);
    let val_seqs = sequences_from_samples(net, val_samples);
    train_sequences(net, &seqs, &val_seqs, cfg)
}

pub fn train_sequences(
    net: &mut LstmNet,
    seqs: &[Sequence],
    val_seqs: &[Sequence],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, NetworkError> {
    if seqs.is_empty() {
        return Err(NetworkError::EmptyTrainingSet);
    }
    let d = net.dim() as f64;
    let n = net.param_count();
    let mut grads = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut t_step = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch = cfg.batch_size.max(1);
    let mut curve = Vec::with_capacity(cfg.epochs);

    let mut order: Vec<usize> = (0..seqs.len()).collect();
    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_sum = 0.0;
        let mut epoch_steps = 0usize;
        for chunk in order.chunks(batch) {
            let batch_steps: usize = chunk.iter().map(|&i| seqs[i].inputs.len()).sum();
            let scale = 2.0 / (d * batch_steps as f64);
            grads.fill(0.0);
            for &i in chunk {
                let s = &seqs[i];
                let (outs, tape) = net.forward_tape(&s.inputs);
                let mut dy = Vec::with_capacity(outs.len());
                for (o, tg) in outs.iter().zip(&s.targets) {
                    let mut row = Vec::with_capacity(o.len());
                    for (a, b) in o.iter().zip(tg) {
                        let e = a - b;
                        epoch_sum += e * e;
                        row.push(scale * e);
                    }
                    dy.push(row);
                }
                net.backward(&tape, &dy, &mut grads);
            }
            epoch_steps += batch_steps;
            clip_grad_norm(&mut grads, cfg.clip_norm);
            t_step += 1;
            adam_step(net.params_mut(), &grads, &mut m, &mut v, t_step, &cfg.adam);
        }
        let train_mse = epoch_sum / (d * epoch_steps as f64);
        if !train_mse.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(NetworkError::Diverged {
                epoch,
                mse: train_mse,
            });
        }
        let val_mse = if val_seqs.is_empty() {
            None
        } else {
            Some(eval_sequences(net, val_seqs))
        };
        log::debug!(
            "epoch {epoch}: train mse {train_mse:.6}{}",
            val_mse.map(|v| format!(", val mse {v:.6}")).unwrap_or_default()
        );
        curve.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
    }
    Ok(curve)
}
