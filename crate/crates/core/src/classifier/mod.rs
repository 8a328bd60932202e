//! Header classifier: selective-masking vocabulary, a bidirectional GRU
//! written out by hand, and three bag-of-tokens baselines.

pub mod baselines;
mod checkpoint;
mod embeddings;
pub mod gru;
pub mod model;
mod tensor;
pub mod train;

use std::collections::HashMap;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::table::lexicon::is_numeric;
use crate::types::Sector;

pub use checkpoint::HeaderClassifier;
pub use embeddings::{load_embeddings, Embeddings};
pub use gru::{gru_step, GruParams};
pub use model::{model_forward, ModelDims, ModelParams};
pub use tensor::{Real, Tensor};
pub use train::{train_model, EpochStats, TrainConfig, TrainOutcome};

pub const SEQ_LEN: usize = 25;
pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const NUM_TOKEN: &str = "<NUM>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Operating,
    NonOperating,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Operating => "operating",
            Label::NonOperating => "non_operating",
        }
    }

    /// The positive class is non-operating.
    pub fn is_positive(self) -> bool {
        self == Label::NonOperating
    }

    pub fn from_positive(positive: bool) -> Label {
        if positive {
            Label::NonOperating
        } else {
            Label::Operating
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = crate::SpotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "operating" => Ok(Label::Operating),
            "non_operating" => Ok(Label::NonOperating),
            other => Err(crate::SpotError::Validation(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledHeader {
    /// Rendered header path, root first.
    pub text: String,
    pub label: Label,
    pub company_id: String,
    pub sector: Sector,
}

/// Lowercase, split on whitespace and punctuation. Numeric chunks become
/// [`NUM_TOKEN`].
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split(|c: char| c.is_whitespace() || c == '\u{a0}') {
        if chunk.is_empty() {
            continue;
        }
        if is_numeric(chunk) {
            out.push(NUM_TOKEN.to_string());
            continue;
        }
        for piece in chunk.split(|c: char| !c.is_alphanumeric()) {
            if piece.is_empty() {
                continue;
            }
            if piece.chars().all(|c| c.is_ascii_digit()) {
                out.push(NUM_TOKEN.to_string());
            } else {
                out.push(piece.to_lowercase());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    pub min_freq: u32,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, min_freq: u32) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, min_freq, index }
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Only `<PAD>` and `<UNK>`.
    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Vocabulary over the non-operating headers only, ordered by descending
/// count then lexicographically; `<PAD>` = 0, `<UNK>` = 1.
pub fn build_vocab(headers: &[LabeledHeader], min_freq: u32) -> Vocabulary {
    let mut counts: HashMap<String, u32> = HashMap::new();
    for h in headers.iter().filter(|h| h.label == Label::NonOperating) {
        for tok in tokenize(&h.text) {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, u32)> = counts.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if kept.is_empty() {
        warn!("vocabulary has no tokens at min_freq {min_freq}; every token will be masked");
    }
    let mut tokens = vec!["<PAD>".to_string(), "<UNK>".to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t));
    Vocabulary::from_tokens(tokens, min_freq)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub indices: Vec<u32>,
    pub original_len: usize,
}

impl EncodedSequence {
    /// Positions that carry tokens.
    pub fn len(&self) -> usize {
        self.original_len.min(self.indices.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tokens(&self) -> &[u32] {
        &self.indices[..self.len()]
    }
}

/// Tokenizes, masks out-of-vocabulary tokens with `<UNK>`, keeps the last
/// [`SEQ_LEN`] tokens and right-pads with `<PAD>`.
pub fn mask_and_encode(text: &str, vocab: &Vocabulary) -> EncodedSequence {
    encode_with_len(text, vocab, SEQ_LEN)
}

pub(crate) fn encode_with_len(text: &str, vocab: &Vocabulary, seq_len: usize) -> EncodedSequence {
    let toks = tokenize(text);
    let start = toks.len().saturating_sub(seq_len);
    let mut indices: Vec<u32> = toks[start..].iter().map(|t| vocab.get(t).unwrap_or(UNK)).collect();
    indices.resize(seq_len, PAD);
    EncodedSequence {
        indices,
        original_len: toks.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(text: &str, label: Label) -> LabeledHeader {
        LabeledHeader {
            text: text.into(),
            label,
            company_id: "c".into(),
            sector: Sector::Tech,
        }
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("Net sales --> Products"), ["net", "sales", "products"]);
        assert_eq!(tokenize("R&D Expense"), ["r", "d", "expense"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Q3 2020 $1,234"), ["q3", NUM_TOKEN, NUM_TOKEN]);
    }

    #[test]
    fn vocab_ordering() {
        let hs = [h("total revenue", Label::NonOperating), h("revenue", Label::NonOperating)];
        let v = build_vocab(&hs, 1);
        assert_eq!(v.tokens(), ["<PAD>", "<UNK>", "revenue", "total"]);
        let v3 = build_vocab(&hs, 3);
        assert_eq!(v3.len(), 2);
        assert!(v3.is_empty());
    }

    #[test]
    fn operating_tokens_stay_out() {
        let hs = [
            h("Net sales --> iPhone", Label::Operating),
            h("Net sales --> iPhone", Label::Operating),
            h("Net sales", Label::NonOperating),
        ];
        let v = build_vocab(&hs, 1);
        assert!(v.get("iphone").is_none());
        assert!(v.get("sales").is_some());
    }

    #[test]
    fn masking() {
        let v = build_vocab(&[h("revenue", Label::NonOperating), h("total revenue", Label::NonOperating)], 1);
        let e = mask_and_encode("iPhone revenue", &v);
        assert_eq!(e.indices.len(), SEQ_LEN);
        assert_eq!(&e.indices[..2], &[UNK, v.get("revenue").unwrap()]);
        assert!(e.indices[2..].iter().all(|i| *i == PAD));
        assert!(!mask_and_encode("total revenue", &v).indices.contains(&UNK));
    }

    #[test]
    fn left_truncation() {
        let v = build_vocab(&[h("a b", Label::NonOperating)], 1);
        let text: Vec<String> = (0..30).map(|i| if i == 29 { "b".into() } else { format!("w{i}") }).collect();
        let e = mask_and_encode(&text.join(" "), &v);
        assert_eq!(e.original_len, 30);
        assert_eq!(e.len(), SEQ_LEN);
        assert_eq!(e.indices[SEQ_LEN - 1], v.get("b").unwrap());
    }
}
