use std::fmt::Write as _;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::HeaderClassifier;
use super::embeddings::Embeddings;
use super::model::{dropout_mask, predict_proba, ModelDims, ModelParams};
use super::{build_vocab, encode_with_len, EncodedSequence, LabeledHeader, SEQ_LEN};
use crate::error::{Result, SpotError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    pub hidden_units: usize,
    pub seq_len: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub min_freq: u32,
    pub threshold: f64,
    pub freeze_embeddings: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embedding_dim: 300,
            hidden_units: 50,
            seq_len: SEQ_LEN,
            dropout: 0.2,
            learning_rate: 0.001,
            max_epochs: 30,
            patience: 7,
            batch_size: 64,
            min_freq: 2,
            threshold: 0.5,
            freeze_embeddings: false,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_f1: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub classifier: HeaderClassifier,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainOutcome {
    /// `epoch,train_loss,valid_f1` lines.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,valid_f1\n");
        for e in &self.history {
            let _ = writeln!(out, "{},{:.6},{:.6}", e.epoch, e.train_loss, e.valid_f1);
        }
        out
    }
}

struct Adam {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f32 = 1e-7;

    fn new(params: &mut ModelParams<f32>, lr: f64) -> Self {
        let shapes: Vec<usize> = params.trainable_mut().iter().map(|t| t.len()).collect();
        Adam {
            m: shapes.iter().map(|n| vec![0.0; *n]).collect(),
            v: shapes.iter().map(|n| vec![0.0; *n]).collect(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut ModelParams<f32>, grads: &mut ModelParams<f32>, skip_embedding: bool) {
        self.t += 1;
        let lr_t = (self.lr * (1.0 - Self::B2.powi(self.t)).sqrt() / (1.0 - Self::B1.powi(self.t))) as f32;
        let (b1, b2) = (Self::B1 as f32, Self::B2 as f32);
        let grads = grads.trainable_mut();
        for (k, (p, g)) in params.trainable_mut().into_iter().zip(grads).enumerate() {
            if skip_embedding && k == 0 {
                continue;
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                p.data[i] -= lr_t * m[i] / (v[i].sqrt() + Self::EPS);
            }
        }
    }
}

pub(crate) fn f1_positive(probs: &[f32], labels: &[f32], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (p, y) in probs.iter().zip(labels) {
        let pred = *p as f64 >= threshold;
        match (pred, *y > 0.5) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

fn mean_bce(probs: &[f32], labels: &[f32]) -> f64 {
    let n = probs.len().max(1) as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            let p = (*p as f64).clamp(1e-7, 1.0 - 1e-7);
            -(*y as f64 * p.ln() + (1.0 - *y as f64) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

/// Trains the masked-vocabulary BiGRU with Adam on binary cross-entropy.
/// Early stopping watches validation F1 and the best epoch's weights are
/// returned.
pub fn train_model(
    train: &[LabeledHeader],
    valid: &[LabeledHeader],
    cfg: &TrainConfig,
    embeddings: Option<&Embeddings>,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(SpotError::EmptyInput("training headers"));
    }
    if cfg.batch_size == 0 || !(0.0..1.0).contains(&cfg.dropout) {
        return Err(SpotError::Validation("batch_size must be > 0 and dropout in [0, 1)".into()));
    }
    let vocab = build_vocab(train, cfg.min_freq);
    let dims = ModelDims {
        vocab: vocab.len(),
        emb: cfg.embedding_dim,
        hidden: cfg.hidden_units,
        seq_len: cfg.seq_len,
    };
    let mut params = ModelParams::<f32>::init(dims, cfg.dropout, cfg.seed);
    if let Some(e) = embeddings {
        if e.dim != dims.emb {
            return Err(SpotError::Shape(format!("embeddings are {}-d, model expects {}", e.dim, dims.emb)));
        }
        let mut hits = 0;
        for (i, tok) in vocab.tokens().iter().enumerate().skip(2) {
            if let Some(v) = e.vectors.get(tok) {
                params.embedding.row_mut(i).copy_from_slice(v);
                hits += 1;
            }
        }
        info!("initialized {hits} of {} embedding rows from pre-trained vectors", vocab.len() - 2);
    }

    let enc = |hs: &[LabeledHeader]| -> (Vec<EncodedSequence>, Vec<f32>) {
        hs.iter()
            .map(|h| (encode_with_len(&h.text, &vocab, cfg.seq_len), if h.label.is_positive() { 1.0 } else { 0.0 }))
            .unzip()
    };
    let (train_x, train_y) = enc(train);
    let (valid_x, valid_y) = enc(valid);
    let valid_refs: Vec<&EncodedSequence> = valid_x.iter().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_5107);
    let mut adam = Adam::new(&mut params, cfg.learning_rate);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams<f32>)> = None;
    let mut wait = 0;
    let mut stopped_early = false;
    let momentum = super::model::BN_MOMENTUM as f32;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let seqs: Vec<&EncodedSequence> = batch.iter().map(|i| &train_x[*i]).collect();
            let ys: Vec<f32> = batch.iter().map(|i| train_y[*i]).collect();
            let masks = (0..batch.len())
                .map(|_| dropout_mask(dims.pooled(), cfg.dropout, &mut rng))
                .collect();
            let cache = super::model::forward_batch(&params, &seqs, super::model::BnMode::Batch, Some(masks));
            let loss = super::model::batch_loss(&cache, &ys);
            if !loss.is_finite() {
                let bad = cache.p.iter().filter(|p| !p.is_finite()).count();
                return Err(SpotError::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    detail: format!("loss={loss}, {bad} non-finite outputs in a batch of {}", batch.len()),
                });
            }
            let mut grads = super::model::backward_batch(&params, &cache, &ys);
            for (rm, bm) in params.bn_mean.data.iter_mut().zip(&cache.mean) {
                *rm = momentum * *rm + (1.0 - momentum) * bm;
            }
            for (rv, bv) in params.bn_var.data.iter_mut().zip(&cache.var) {
                *rv = momentum * *rv + (1.0 - momentum) * bv;
            }
            adam.step(&mut params, &mut grads, cfg.freeze_embeddings);
            loss_sum += loss as f64 * batch.len() as f64;
        }
        let train_loss = loss_sum / train_x.len() as f64;
        let (valid_f1, valid_loss) = if valid_x.is_empty() {
            (0.0, train_loss)
        } else {
            let probs = predict_proba(&params, &valid_refs);
            (f1_positive(&probs, &valid_y, cfg.threshold), mean_bce(&probs, &valid_y))
        };
        debug!("epoch {epoch}: train_loss={train_loss:.5} valid_f1={valid_f1:.5} valid_loss={valid_loss:.5}");
        history.push(EpochStats {
            epoch,
            train_loss,
            valid_f1,
            valid_loss,
        });
        let improved = match &best {
            None => true,
            Some((f1, _, _)) => valid_f1 > *f1,
        };
        if improved {
            best = Some((valid_f1, epoch, params.clone()));
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    info!("training finished: best epoch {best_epoch} of {}", history.len());
    Ok(TrainOutcome {
        classifier: HeaderClassifier::new(vocab, best_params, cfg.threshold),
        history,
        best_epoch,
        stopped_early,
    })
}
