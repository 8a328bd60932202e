//! Bag-of-tokens baselines: a TF-IDF score threshold, multinomial naive
//! Bayes and L2-regularized logistic regression.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{build_vocab, tokenize, Label, LabeledHeader, Vocabulary, PAD};
use crate::error::{Result, SpotError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    TfidfThreshold,
    NaiveBayes,
    LogisticRegression,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::TfidfThreshold,
        BaselineKind::NaiveBayes,
        BaselineKind::LogisticRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::TfidfThreshold => "tfidf_threshold",
            BaselineKind::NaiveBayes => "naive_bayes",
            BaselineKind::LogisticRegression => "logistic_regression",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub min_freq: u32,
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            min_freq: 2,
            l2: 1e-4,
            tolerance: 1e-6,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Baseline {
    Tfidf(TfidfThreshold),
    NaiveBayes(NaiveBayes),
    Logistic(LogisticRegression),
}

impl Baseline {
    pub fn kind(&self) -> BaselineKind {
        match self {
            Baseline::Tfidf(_) => BaselineKind::TfidfThreshold,
            Baseline::NaiveBayes(_) => BaselineKind::NaiveBayes,
            Baseline::Logistic(_) => BaselineKind::LogisticRegression,
        }
    }

    pub fn predict<S: AsRef<str>>(&self, texts: &[S]) -> Vec<Label> {
        texts
            .iter()
            .map(|t| match self {
                Baseline::Tfidf(m) => m.predict_one(t.as_ref()),
                Baseline::NaiveBayes(m) => m.predict_one(t.as_ref()),
                Baseline::Logistic(m) => m.predict_one(t.as_ref()),
            })
            .collect()
    }
}

pub fn train_baseline(
    kind: BaselineKind,
    train: &[LabeledHeader],
    valid: &[LabeledHeader],
    cfg: &BaselineConfig,
) -> Result<Baseline> {
    if train.is_empty() {
        return Err(SpotError::EmptyInput("training headers"));
    }
    Ok(match kind {
        BaselineKind::TfidfThreshold => Baseline::Tfidf(TfidfThreshold::fit(train, if valid.is_empty() { train } else { valid })),
        BaselineKind::NaiveBayes => Baseline::NaiveBayes(NaiveBayes::fit(train, cfg.min_freq)),
        BaselineKind::LogisticRegression => Baseline::Logistic(LogisticRegression::fit(train, cfg)),
    })
}

fn f1(pred: &[bool], gold: &[bool]) -> f64 {
    let tp = pred.iter().zip(gold).filter(|(p, g)| **p && **g).count();
    let fp = pred.iter().zip(gold).filter(|(p, g)| **p && !**g).count();
    let fn_ = pred.iter().zip(gold).filter(|(p, g)| !**p && **g).count();
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Header-as-document TF-IDF over raw (unmasked) tokens. Company-specific
/// words are rare, so a low score means non-operating.
#[derive(Debug, Clone)]
pub struct TfidfThreshold {
    n_docs: usize,
    doc_freq: HashMap<String, usize>,
    pub theta: f64,
}

impl TfidfThreshold {
    pub fn score(&self, text: &str) -> f64 {
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for t in tokenize(text) {
            *tf.entry(t).or_insert(0) += 1;
        }
        tf.iter()
            .map(|(t, n)| {
                let df = self.doc_freq.get(t).copied().unwrap_or(1);
                *n as f64 * (self.n_docs as f64 / df as f64).ln()
            })
            .sum()
    }

    fn fit(train: &[LabeledHeader], valid: &[LabeledHeader]) -> Self {
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for h in train {
            let set: HashSet<String> = tokenize(&h.text).into_iter().collect();
            for t in set {
                *doc_freq.entry(t).or_insert(0) += 1;
            }
        }
        let mut m = TfidfThreshold {
            n_docs: train.len(),
            doc_freq,
            theta: f64::NEG_INFINITY,
        };
        let scores: Vec<f64> = valid.iter().map(|h| m.score(&h.text)).collect();
        let gold: Vec<bool> = valid.iter().map(|h| h.label.is_positive()).collect();
        let mut cands = scores.clone();
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        let mut best = (0.0, f64::NEG_INFINITY);
        for c in cands {
            let pred: Vec<bool> = scores.iter().map(|s| *s <= c).collect();
            let f = f1(&pred, &gold);
            if f > best.0 {
                best = (f, c);
            }
        }
        m.theta = best.1;
        m
    }

    fn predict_one(&self, text: &str) -> Label {
        Label::from_positive(self.score(text) <= self.theta)
    }
}

fn masked_counts(text: &str, vocab: &Vocabulary) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    for t in tokenize(text) {
        let idx = vocab.get(&t).unwrap_or(super::UNK);
        if idx != PAD {
            *out.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    out
}

/// Multinomial naive Bayes over masked token counts, add-one smoothing.
#[derive(Debug, Clone)]
pub struct NaiveBayes {
    vocab: Vocabulary,
    /// Indexed by `[operating, non_operating]`.
    log_prior: [f64; 2],
    log_lik: [Vec<f64>; 2],
}

impl NaiveBayes {
    fn fit(train: &[LabeledHeader], min_freq: u32) -> Self {
        let vocab = build_vocab(train, min_freq);
        let v = vocab.len();
        let mut counts = [vec![0.0; v], vec![0.0; v]];
        let mut docs = [0usize; 2];
        for h in train {
            let c = h.label.is_positive() as usize;
            docs[c] += 1;
            for (i, n) in masked_counts(&h.text, &vocab) {
                counts[c][i as usize] += n;
            }
        }
        let features = (v - 1) as f64;
        let n = train.len() as f64;
        let lik = |c: &Vec<f64>| {
            let total: f64 = c.iter().sum();
            c.iter().map(|x| ((x + 1.0) / (total + features)).ln()).collect::<Vec<f64>>()
        };
        let prior = |d: usize| if d == 0 { f64::NEG_INFINITY } else { (d as f64 / n).ln() };
        NaiveBayes {
            log_prior: [prior(docs[0]), prior(docs[1])],
            log_lik: [lik(&counts[0]), lik(&counts[1])],
            vocab,
        }
    }

    pub fn log_posteriors(&self, text: &str) -> [f64; 2] {
        let x = masked_counts(text, &self.vocab);
        let mut out = self.log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            for (i, n) in &x {
                *o += n * self.log_lik[c][*i as usize];
            }
        }
        out
    }

    fn predict_one(&self, text: &str) -> Label {
        let [op, non] = self.log_posteriors(text);
        Label::from_positive(non >= op)
    }
}

/// Logistic regression on masked bag-of-token counts. Full-batch gradient
/// descent with Armijo backtracking, so the objective never increases.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    vocab: Vocabulary,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss_history: Vec<f64>,
}

fn log1pexp(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn lr_objective(xs: &[BTreeMap<u32, f64>], ys: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = xs.len() as f64;
    let data: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let z = b + x.iter().map(|(i, v)| w[*i as usize] * v).sum::<f64>();
            y * log1pexp(-z) + (1.0 - y) * log1pexp(z)
        })
        .sum();
    data / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

impl LogisticRegression {
    fn fit(train: &[LabeledHeader], cfg: &BaselineConfig) -> Self {
        let vocab = build_vocab(train, cfg.min_freq);
        let xs: Vec<BTreeMap<u32, f64>> = train.iter().map(|h| masked_counts(&h.text, &vocab)).collect();
        let ys: Vec<f64> = train.iter().map(|h| if h.label.is_positive() { 1.0 } else { 0.0 }).collect();
        let n = xs.len() as f64;
        let mut w = vec![0.0; vocab.len()];
        let mut b = 0.0;
        let mut f = lr_objective(&xs, &ys, &w, b, cfg.l2);
        let mut history = vec![f];
        let mut step = 1.0;
        for _ in 0..cfg.max_iter {
            let mut gw: Vec<f64> = w.iter().map(|v| cfg.l2 * v).collect();
            let mut gb = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let z = b + x.iter().map(|(i, v)| w[*i as usize] * v).sum::<f64>();
                let r = (super::tensor::sigmoid(z) - y) / n;
                gb += r;
                for (i, v) in x {
                    gw[*i as usize] += r * v;
                }
            }
            let gnorm2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
            if gnorm2.sqrt() < cfg.tolerance {
                break;
            }
            step *= 2.0;
            let (next_w, next_b, next_f) = loop {
                let cw: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
                let cb = b - step * gb;
                let cf = lr_objective(&xs, &ys, &cw, cb, cfg.l2);
                if cf <= f - 1e-4 * step * gnorm2 || step < 1e-12 {
                    break (cw, cb, cf);
                }
                step *= 0.5;
            };
            if next_f > f {
                break;
            }
            let done = f - next_f < cfg.tolerance;
            w = next_w;
            b = next_b;
            f = next_f;
            history.push(f);
            if done {
                break;
            }
        }
        LogisticRegression {
            vocab,
            weights: w,
            bias: b,
            loss_history: history,
        }
    }

    pub fn probability(&self, text: &str) -> f64 {
        let x = masked_counts(text, &self.vocab);
        super::tensor::sigmoid(self.bias + x.iter().map(|(i, v)| self.weights[*i as usize] * v).sum::<f64>())
    }

    fn predict_one(&self, text: &str) -> Label {
        Label::from_positive(self.probability(text) >= 0.5)
    }
}
