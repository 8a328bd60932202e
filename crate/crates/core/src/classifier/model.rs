use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gru::{step_backward, step_forward, GruParams, StepCache, GRU_TENSORS};
use super::tensor::{dot, sigmoid, Real, Tensor};
use super::EncodedSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub emb: usize,
    pub hidden: usize,
    pub seq_len: usize,
}

impl ModelDims {
    pub fn standard(vocab: usize) -> Self {
        ModelDims {
            vocab,
            emb: 300,
            hidden: 50,
            seq_len: super::SEQ_LEN,
        }
    }

    /// Width of the pooled vector: (avg, max) x (forward, backward) x hidden.
    pub fn pooled(&self) -> usize {
        4 * self.hidden
    }
}

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-3;

/// Embedding, two GRU directions, batch norm over the pooled vector and a
/// single dense unit fed through swish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F> {
    pub dims: ModelDims,
    pub embedding: Tensor<F>,
    pub fwd: GruParams<F>,
    pub bwd: GruParams<F>,
    pub bn_gamma: Tensor<F>,
    pub bn_beta: Tensor<F>,
    pub dense_w: Tensor<F>,
    pub dense_b: Tensor<F>,
    /// Not trained by gradient; updated from batch statistics.
    pub bn_mean: Tensor<F>,
    pub bn_var: Tensor<F>,
    pub dropout: f64,
}

impl<F: Real> ModelParams<F> {
    pub fn init(dims: ModelDims, dropout: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = Tensor::uniform(&[dims.vocab, dims.emb], 0.05, &mut rng);
        let fwd = GruParams::glorot(dims.hidden, dims.emb, &mut rng);
        let bwd = GruParams::glorot(dims.hidden, dims.emb, &mut rng);
        let pooled = dims.pooled();
        let dense = Tensor::glorot(1, pooled, &mut rng);
        ModelParams {
            dims,
            embedding,
            fwd,
            bwd,
            bn_gamma: Tensor::filled(&[pooled], F::one()),
            bn_beta: Tensor::zeros(&[pooled]),
            dense_w: Tensor {
                shape: vec![pooled],
                data: dense.data,
            },
            dense_b: Tensor::zeros(&[1]),
            bn_mean: Tensor::zeros(&[pooled]),
            bn_var: Tensor::filled(&[pooled], F::one()),
            dropout,
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.dims, self.dropout)
    }

    pub fn zeros(d: ModelDims, dropout: f64) -> Self {
        ModelParams {
            dims: d,
            embedding: Tensor::zeros(&[d.vocab, d.emb]),
            fwd: GruParams::zeros(d.hidden, d.emb),
            bwd: GruParams::zeros(d.hidden, d.emb),
            bn_gamma: Tensor::zeros(&[d.pooled()]),
            bn_beta: Tensor::zeros(&[d.pooled()]),
            dense_w: Tensor::zeros(&[d.pooled()]),
            dense_b: Tensor::zeros(&[1]),
            bn_mean: Tensor::zeros(&[d.pooled()]),
            bn_var: Tensor::zeros(&[d.pooled()]),
            dropout,
        }
    }

    /// Trainable tensors with stable names.
    pub fn named(&self) -> Vec<(String, &Tensor<F>)> {
        let mut out = vec![("embedding".to_string(), &self.embedding)];
        for (dir, p) in [("fwd", &self.fwd), ("bwd", &self.bwd)] {
            for (name, t) in GRU_TENSORS.iter().zip(p.tensors()) {
                out.push((format!("{dir}.{name}"), t));
            }
        }
        out.push(("bn.gamma".into(), &self.bn_gamma));
        out.push(("bn.beta".into(), &self.bn_beta));
        out.push(("dense.w".into(), &self.dense_w));
        out.push(("dense.b".into(), &self.dense_b));
        out
    }

    /// Same order as [`ModelParams::named`].
    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = vec![&mut self.embedding];
        out.extend(self.fwd.tensors_mut());
        out.extend(self.bwd.tensors_mut());
        out.push(&mut self.bn_gamma);
        out.push(&mut self.bn_beta);
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }

    pub fn cast<G: Real>(&self) -> ModelParams<G> {
        let gru = |p: &GruParams<F>| GruParams {
            wz: p.wz.cast(),
            wr: p.wr.cast(),
            wh: p.wh.cast(),
            uz: p.uz.cast(),
            ur: p.ur.cast(),
            uh: p.uh.cast(),
            bz: p.bz.cast(),
            br: p.br.cast(),
            bh: p.bh.cast(),
        };
        ModelParams {
            dims: self.dims,
            embedding: self.embedding.cast(),
            fwd: gru(&self.fwd),
            bwd: gru(&self.bwd),
            bn_gamma: self.bn_gamma.cast(),
            bn_beta: self.bn_beta.cast(),
            dense_w: self.dense_w.cast(),
            dense_b: self.dense_b.cast(),
            bn_mean: self.bn_mean.cast(),
            bn_var: self.bn_var.cast(),
            dropout: self.dropout,
        }
    }
}

/// Which statistics batch norm normalizes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BnMode {
    Batch,
    Running,
}

pub(crate) struct SeqCache<F> {
    tokens: Vec<u32>,
    fwd: Vec<StepCache<F>>,
    /// Indexed by position, so `bwd[t]` consumed `bwd[t + 1].h`.
    bwd: Vec<StepCache<F>>,
    /// Time step that won the max-pool, per forward/backward unit.
    argmax: Vec<usize>,
}

pub(crate) struct BatchCache<F> {
    seqs: Vec<SeqCache<F>>,
    xhat: Vec<Vec<F>>,
    inv_std: Vec<F>,
    pub mean: Vec<F>,
    pub var: Vec<F>,
    masks: Vec<Vec<F>>,
    dropped: Vec<Vec<F>>,
    /// swish of `dropped`, the dense layer's input.
    act: Vec<Vec<F>>,
    /// Logits.
    pub s: Vec<F>,
    pub p: Vec<F>,
}

fn swish<F: Real>(a: F) -> F {
    a * sigmoid(a)
}

fn softplus<F: Real>(x: F) -> F {
    x.max(F::zero()) + (-x.abs()).exp().ln_1p()
}

fn encode_pool<F: Real>(params: &ModelParams<F>, seq: &EncodedSequence) -> (SeqCache<F>, Vec<F>) {
    let h = params.dims.hidden;
    let tokens: Vec<u32> = seq.tokens().to_vec();
    let len = tokens.len();
    let zero = vec![F::zero(); h];

    let mut fwd: Vec<StepCache<F>> = Vec::with_capacity(len);
    for (t, tok) in tokens.iter().enumerate() {
        let prev = if t == 0 { &zero } else { &fwd[t - 1].h };
        let c = step_forward(params.embedding.row(*tok as usize), prev, &params.fwd);
        fwd.push(c);
    }
    let mut bwd_rev: Vec<StepCache<F>> = Vec::with_capacity(len);
    for tok in tokens.iter().rev() {
        let prev = bwd_rev.last().map_or(&zero, |c| &c.h);
        let c = step_forward(params.embedding.row(*tok as usize), prev, &params.bwd);
        bwd_rev.push(c);
    }
    bwd_rev.reverse();
    let bwd = bwd_rev;

    let mut pooled = vec![F::zero(); 4 * h];
    let mut argmax = vec![0usize; 2 * h];
    if len > 0 {
        let inv = F::one() / F::lit(len as f64);
        for j in 0..2 * h {
            let state = |t: usize| if j < h { fwd[t].h[j] } else { bwd[t].h[j - h] };
            let mut sum = F::zero();
            let mut best = state(0);
            for t in 0..len {
                let v = state(t);
                sum += v;
                if v > best {
                    best = v;
                    argmax[j] = t;
                }
            }
            pooled[j] = sum * inv;
            pooled[2 * h + j] = best;
        }
    }
    (SeqCache { tokens, fwd, bwd, argmax }, pooled)
}

pub(crate) fn dropout_mask<F: Real, R: Rng>(n: usize, rate: f64, rng: &mut R) -> Vec<F> {
    if rate <= 0.0 {
        return vec![F::one(); n];
    }
    let keep = F::lit(1.0 / (1.0 - rate));
    (0..n).map(|_| if rng.gen::<f64>() < rate { F::zero() } else { keep }).collect()
}

pub(crate) fn forward_batch<F: Real>(
    params: &ModelParams<F>,
    seqs: &[&EncodedSequence],
    bn: BnMode,
    masks: Option<Vec<Vec<F>>>,
) -> BatchCache<F> {
    let d = params.dims.pooled();
    let b = seqs.len();
    let mut caches = Vec::with_capacity(b);
    let mut pooled = Vec::with_capacity(b);
    for s in seqs {
        let (c, p) = encode_pool(params, s);
        caches.push(c);
        pooled.push(p);
    }

    let eps = F::lit(BN_EPS);
    let (mean, var) = match bn {
        BnMode::Batch => {
            let nb = F::lit(b as f64);
            let mut mean = vec![F::zero(); d];
            for p in &pooled {
                for j in 0..d {
                    mean[j] += p[j];
                }
            }
            mean.iter_mut().for_each(|m| *m = *m / nb);
            let mut var = vec![F::zero(); d];
            for p in &pooled {
                for j in 0..d {
                    let c = p[j] - mean[j];
                    var[j] += c * c;
                }
            }
            var.iter_mut().for_each(|v| *v = *v / nb);
            (mean, var)
        }
        BnMode::Running => (params.bn_mean.data.clone(), params.bn_var.data.clone()),
    };
    let inv_std: Vec<F> = var.iter().map(|v| F::one() / (*v + eps).sqrt()).collect();
    let xhat: Vec<Vec<F>> = pooled
        .iter()
        .map(|p| (0..d).map(|j| (p[j] - mean[j]) * inv_std[j]).collect())
        .collect();
    let masks = masks.unwrap_or_else(|| vec![vec![F::one(); d]; b]);
    let dropped: Vec<Vec<F>> = xhat
        .iter()
        .zip(&masks)
        .map(|(x, m)| {
            (0..d)
                .map(|j| (params.bn_gamma.data[j] * x[j] + params.bn_beta.data[j]) * m[j])
                .collect()
        })
        .collect();
    let act: Vec<Vec<F>> = dropped.iter().map(|y| y.iter().map(|v| swish(*v)).collect()).collect();
    let s: Vec<F> = act
        .iter()
        .map(|u| dot(&params.dense_w.data, u) + params.dense_b.data[0])
        .collect();
    let p: Vec<F> = s.iter().map(|v| sigmoid(*v)).collect();
    BatchCache {
        seqs: caches,
        xhat,
        inv_std,
        mean,
        var,
        masks,
        dropped,
        act,
        s,
        p,
    }
}

/// Mean binary cross-entropy of the batch; labels are 1 for non-operating.
pub(crate) fn batch_loss<F: Real>(cache: &BatchCache<F>, labels: &[F]) -> F {
    let n = F::lit(labels.len() as f64);
    cache
        .s
        .iter()
        .zip(labels)
        .map(|(s, y)| *y * softplus(-*s) + (F::one() - *y) * softplus(*s))
        .sum::<F>()
        / n
}

pub(crate) fn backward_batch<F: Real>(
    params: &ModelParams<F>,
    cache: &BatchCache<F>,
    labels: &[F],
) -> ModelParams<F> {
    let h = params.dims.hidden;
    let d = params.dims.pooled();
    let b = labels.len();
    let nb = F::lit(b as f64);
    let mut g = params.zeros_like();

    // Output head: dL/ds = (p - y) / B with s = w . swish(dropped) + b.
    let mut dxhat = vec![vec![F::zero(); d]; b];
    for i in 0..b {
        let ds = (cache.p[i] - labels[i]) / nb;
        g.dense_b.data[0] += ds;
        for j in 0..d {
            g.dense_w.data[j] += ds * cache.act[i][j];
            let z = cache.dropped[i][j];
            let sz = sigmoid(z);
            let dz = ds * params.dense_w.data[j] * sz * (F::one() + z * (F::one() - sz));
            let dy = dz * cache.masks[i][j];
            g.bn_gamma.data[j] += dy * cache.xhat[i][j];
            g.bn_beta.data[j] += dy;
            dxhat[i][j] = dy * params.bn_gamma.data[j];
        }
    }

    // Batch norm with batch statistics.
    let mut sum_dx = vec![F::zero(); d];
    let mut sum_dx_x = vec![F::zero(); d];
    for i in 0..b {
        for j in 0..d {
            sum_dx[j] += dxhat[i][j];
            sum_dx_x[j] += dxhat[i][j] * cache.xhat[i][j];
        }
    }

    for (i, seq) in cache.seqs.iter().enumerate() {
        let dpool: Vec<F> = (0..d)
            .map(|j| cache.inv_std[j] / nb * (nb * dxhat[i][j] - sum_dx[j] - cache.xhat[i][j] * sum_dx_x[j]))
            .collect();
        let len = seq.tokens.len();
        if len == 0 {
            continue;
        }
        let inv = F::one() / F::lit(len as f64);
        let mut dstate_f = vec![vec![F::zero(); h]; len];
        let mut dstate_b = vec![vec![F::zero(); h]; len];
        for j in 0..2 * h {
            let avg = dpool[j] * inv;
            let (target, k) = if j < h { (&mut dstate_f, j) } else { (&mut dstate_b, j - h) };
            for row in target.iter_mut() {
                row[k] += avg;
            }
            target[seq.argmax[j]][k] += dpool[2 * h + j];
        }

        let zero = vec![F::zero(); h];
        let mut dx = vec![F::zero(); params.dims.emb];
        let mut carry = vec![F::zero(); h];
        for t in (0..len).rev() {
            let dh: Vec<F> = dstate_f[t].iter().zip(&carry).map(|(a, c)| *a + *c).collect();
            let prev = if t == 0 { &zero } else { &seq.fwd[t - 1].h };
            let tok = seq.tokens[t] as usize;
            dx.iter_mut().for_each(|v| *v = F::zero());
            carry = step_backward(params.embedding.row(tok), prev, &seq.fwd[t], &dh, &params.fwd, &mut g.fwd, &mut dx);
            super::tensor::axpy(g.embedding.row_mut(tok), F::one(), &dx);
        }
        carry.iter_mut().for_each(|v| *v = F::zero());
        for t in 0..len {
            let dh: Vec<F> = dstate_b[t].iter().zip(&carry).map(|(a, c)| *a + *c).collect();
            let prev = if t + 1 == len { &zero } else { &seq.bwd[t + 1].h };
            let tok = seq.tokens[t] as usize;
            dx.iter_mut().for_each(|v| *v = F::zero());
            carry = step_backward(params.embedding.row(tok), prev, &seq.bwd[t], &dh, &params.bwd, &mut g.bwd, &mut dx);
            super::tensor::axpy(g.embedding.row_mut(tok), F::one(), &dx);
        }
    }
    g
}

/// Loss and gradients of one batch under batch statistics. Used by the
/// trainer and by gradient checks.
pub fn loss_and_grads<F: Real>(
    params: &ModelParams<F>,
    seqs: &[&EncodedSequence],
    labels: &[F],
    masks: Option<Vec<Vec<F>>>,
) -> (F, ModelParams<F>) {
    let cache = forward_batch(params, seqs, BnMode::Batch, masks);
    let loss = batch_loss(&cache, labels);
    (loss, backward_batch(params, &cache, labels))
}

/// Loss alone, same conditions as [`loss_and_grads`].
pub fn batch_loss_only<F: Real>(
    params: &ModelParams<F>,
    seqs: &[&EncodedSequence],
    labels: &[F],
    masks: Option<Vec<Vec<F>>>,
) -> F {
    batch_loss(&forward_batch(params, seqs, BnMode::Batch, masks), labels)
}

/// Probabilities under running batch-norm statistics, no dropout.
pub fn predict_proba<F: Real>(params: &ModelParams<F>, seqs: &[&EncodedSequence]) -> Vec<F> {
    seqs.chunks(256)
        .flat_map(|chunk| forward_batch(params, chunk, BnMode::Running, None).p)
        .collect()
}

/// Probability that `seq` is a non-operating header. Batch norm uses the
/// running statistics; `train_mode` only switches dropout on, with a mask
/// seeded from the sequence so repeated calls agree.
pub fn model_forward<F: Real>(seq: &EncodedSequence, params: &ModelParams<F>, train_mode: bool) -> F {
    let masks = train_mode.then(|| {
        let seed = seq.indices.iter().fold(seq.original_len as u64, |acc, i| {
            acc.wrapping_mul(0x100_0000_01b3).wrapping_add(*i as u64)
        });
        vec![dropout_mask(params.dims.pooled(), params.dropout, &mut ChaCha8Rng::seed_from_u64(seed))]
    });
    forward_batch(params, &[seq], BnMode::Running, masks).p[0]
}

/// Per-tensor relative error between analytic and central-difference
/// gradients of the batch loss: `|a - n| / (|a| + |n|)` in the L2 norm.
pub fn gradient_check(
    params: &ModelParams<f64>,
    seqs: &[&EncodedSequence],
    labels: &[f64],
    step: f64,
) -> Vec<(String, f64)> {
    let (_, grads) = loss_and_grads(params, seqs, labels, None);
    let analytic: Vec<Vec<f64>> = grads.named().into_iter().map(|(_, t)| t.data.clone()).collect();
    let names: Vec<String> = params.named().into_iter().map(|(n, _)| n).collect();
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(names.len());
    for (k, name) in names.into_iter().enumerate() {
        let n = analytic[k].len();
        let mut numeric = vec![0.0; n];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let orig = probe.trainable_mut()[k].data[j];
            probe.trainable_mut()[k].data[j] = orig + step;
            let up = batch_loss_only(&probe, seqs, labels, None);
            probe.trainable_mut()[k].data[j] = orig - step;
            let down = batch_loss_only(&probe, seqs, labels, None);
            probe.trainable_mut()[k].data[j] = orig;
            *slot = (up - down) / (2.0 * step);
        }
        let diff: f64 = analytic[k].iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let na: f64 = analytic[k].iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = if na + nn == 0.0 { 0.0 } else { diff / (na + nn) };
        out.push((name, rel));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> ModelParams<f64> {
        let dims = ModelDims {
            vocab: 10,
            emb: 8,
            hidden: 4,
            seq_len: 5,
        };
        ModelParams::init(dims, 0.0, seed)
    }

    fn seq(toks: &[u32], seq_len: usize) -> EncodedSequence {
        let mut indices = toks.to_vec();
        indices.resize(seq_len, 0);
        EncodedSequence {
            indices,
            original_len: toks.len(),
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = tiny(11);
        let seqs = [seq(&[2, 3, 4], 5), seq(&[5, 1, 7, 8, 9], 5), seq(&[6], 5)];
        let refs: Vec<&EncodedSequence> = seqs.iter().collect();
        for (name, rel) in gradient_check(&p, &refs, &[1.0, 0.0, 1.0], 1e-5) {
            assert!(rel <= 1e-4, "{name}: {rel:e}");
        }
    }

    #[test]
    fn output_in_unit_interval() {
        let p = tiny(1);
        for toks in [&[][..], &[2, 3], &[9, 9, 9, 9, 9]] {
            let y = model_forward(&seq(toks, 5), &p, false);
            assert!(y > 0.0 && y < 1.0);
        }
    }

    #[test]
    fn eval_is_repeatable() {
        let p = tiny(2);
        let s = seq(&[4, 5, 6], 5);
        assert_eq!(model_forward(&s, &p, false).to_bits(), model_forward(&s, &p, false).to_bits());
    }

    #[test]
    fn padding_does_not_leak() {
        let p = tiny(3);
        let a = seq(&[4, 5], 5);
        let mut b = a.clone();
        b.indices[3] = 7;
        assert_eq!(model_forward(&a, &p, false), model_forward(&b, &p, false));
    }

    #[test]
    fn palindrome_reversal_with_tied_directions() {
        let mut p = tiny(4);
        p.bwd = p.fwd.clone();
        let s = seq(&[3, 6, 3], 5);
        let mut r = s.clone();
        r.indices[..3].reverse();
        assert_eq!(model_forward(&s, &p, false), model_forward(&r, &p, false));
    }

    #[test]
    fn any_reversal_with_tied_and_mirrored_head() {
        let mut p = tiny(5);
        p.bwd = p.fwd.clone();
        let h = p.dims.hidden;
        for blk in [0, 2 * h] {
            for j in 0..h {
                p.dense_w.data[blk + h + j] = p.dense_w.data[blk + j];
            }
        }
        let s = seq(&[1, 2, 3, 8], 5);
        let mut r = s.clone();
        r.indices[..4].reverse();
        let (a, b) = (model_forward(&s, &p, false), model_forward(&r, &p, false));
        assert!((a - b).abs() < 1e-12);
    }
}
