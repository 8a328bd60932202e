use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{predict_proba, ModelDims, ModelParams};
use super::tensor::Tensor;
use super::{encode_with_len, EncodedSequence, Label, Vocabulary};
use crate::error::{Result, SpotError};

const FORMAT: &str = "spot-bigru-checkpoint";
const VERSION: u32 = 1;

/// A trained model together with the vocabulary it masks with.
#[derive(Debug, Clone, PartialEq)]
pub struct HeaderClassifier {
    pub vocab: Vocabulary,
    pub params: ModelParams<f32>,
    /// Probabilities at or above this are non-operating.
    pub threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    name: String,
    shape: Vec<usize>,
    /// Little-endian f32 bit patterns, hex encoded.
    data: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    dims: ModelDims,
    dropout: f64,
    threshold: f64,
    min_freq: u32,
    vocabulary: Vec<String>,
    tensors: Vec<StoredTensor>,
}

fn encode_tensor(name: &str, t: &Tensor<f32>) -> StoredTensor {
    let bytes: Vec<u8> = t.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    StoredTensor {
        name: name.to_string(),
        shape: t.shape.clone(),
        data: hex::encode(bytes),
    }
}

fn decode_tensor(s: &StoredTensor, expect: &[usize]) -> Result<Tensor<f32>> {
    if s.shape != expect {
        return Err(SpotError::Shape(format!("{}: stored {:?}, expected {:?}", s.name, s.shape, expect)));
    }
    let bytes = hex::decode(&s.data).map_err(|e| SpotError::Format(format!("{}: {e}", s.name)))?;
    let n: usize = expect.iter().product();
    if bytes.len() != 4 * n {
        return Err(SpotError::Format(format!("{}: {} bytes for {n} values", s.name, bytes.len())));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Tensor {
        shape: expect.to_vec(),
        data,
    })
}

impl HeaderClassifier {
    pub fn new(vocab: Vocabulary, params: ModelParams<f32>, threshold: f64) -> Self {
        HeaderClassifier { vocab, params, threshold }
    }

    pub fn encode(&self, text: &str) -> EncodedSequence {
        encode_with_len(text, &self.vocab, self.params.dims.seq_len)
    }

    pub fn probabilities<S: AsRef<str>>(&self, texts: &[S]) -> Vec<f64> {
        let enc: Vec<EncodedSequence> = texts.iter().map(|t| self.encode(t.as_ref())).collect();
        let refs: Vec<&EncodedSequence> = enc.iter().collect();
        predict_proba(&self.params, &refs).into_iter().map(f64::from).collect()
    }

    /// Label and non-operating probability per header, input order kept.
    pub fn predict<S: AsRef<str>>(&self, texts: &[S]) -> Vec<(Label, f64)> {
        self.probabilities(texts)
            .into_iter()
            .map(|p| (Label::from_positive(p >= self.threshold), p))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut tensors: Vec<StoredTensor> = self
            .params
            .named()
            .into_iter()
            .map(|(n, t)| encode_tensor(&n, t))
            .collect();
        tensors.push(encode_tensor("bn.mean", &self.params.bn_mean));
        tensors.push(encode_tensor("bn.var", &self.params.bn_var));
        let file = CheckpointFile {
            format: FORMAT.into(),
            version: VERSION,
            dims: self.params.dims,
            dropout: self.params.dropout,
            threshold: self.threshold,
            min_freq: self.vocab.min_freq,
            vocabulary: self.vocab.tokens().to_vec(),
            tensors,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(SpotError::Format(format!("unsupported checkpoint {} v{}", file.format, file.version)));
        }
        if file.vocabulary.len() != file.dims.vocab {
            return Err(SpotError::Shape(format!(
                "vocabulary has {} tokens, dims say {}",
                file.vocabulary.len(),
                file.dims.vocab
            )));
        }
        let mut params = ModelParams::<f32>::zeros(file.dims, file.dropout);
        let find = |name: &str| {
            file.tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| SpotError::Format(format!("checkpoint lacks tensor {name}")))
        };
        let names: Vec<(String, Vec<usize>)> = params.named().into_iter().map(|(n, t)| (n, t.shape.clone())).collect();
        for ((name, shape), slot) in names.iter().zip(params.trainable_mut()) {
            *slot = decode_tensor(find(name)?, shape)?;
        }
        let pooled = [file.dims.pooled()];
        params.bn_mean = decode_tensor(find("bn.mean")?, &pooled)?;
        params.bn_var = decode_tensor(find("bn.var")?, &pooled)?;
        let mut vocab = Vocabulary {
            tokens: file.vocabulary,
            min_freq: file.min_freq,
            index: Default::default(),
        };
        vocab.rebuild_index();
        Ok(HeaderClassifier {
            vocab,
            params,
            threshold: file.threshold,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| SpotError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
        HeaderClassifier::from_json(&text)
    }
}
