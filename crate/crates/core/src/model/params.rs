use std::collections::BTreeMap;

use rand::Rng;

use super::Tensor;
use crate::corpus::{Vocabulary, PAD_ID};
use crate::retrieval::EmbeddingTable;
use crate::{Error, Result};

/// Bound for embedding rows of tokens missing from the pretrained table.
const UNKNOWN_EMBED_BOUND: f64 = 0.25;

/// Architecture hyperparameters of the gated convolutional classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub kernel_widths: Vec<usize>,
    pub filters: usize,
    pub num_classes: usize,
    pub dropout: f64,
    pub trainable_embedding: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 50,
            kernel_widths: vec![3, 4, 5],
            filters: 32,
            num_classes: 3,
            dropout: 0.2,
            trainable_embedding: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.filters == 0 || self.num_classes < 2 {
            return Err(Error::InvalidInput(format!(
                "model needs embed_dim, filters >= 1 and >= 2 classes: {self:?}"
            )));
        }
        if self.kernel_widths.is_empty() || self.kernel_widths.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "kernel widths must be non-empty and >= 1: {:?}",
                self.kernel_widths
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.filters * self.kernel_widths.len()
    }

    pub fn max_width(&self) -> usize {
        self.kernel_widths.iter().copied().max().unwrap_or(1)
    }

    pub fn with_classes(&self, num_classes: usize) -> Self {
        Self {
            num_classes,
            ..self.clone()
        }
    }

    /// Recovers the architecture from tensor shapes; dropout and the
    /// embedding flag are not stored in parameters and come from `base`.
    pub fn from_params(params: &ParamSet, base: &ModelConfig) -> Result<Self> {
        let emb = params.require("embedding")?;
        let head = params.require("head.w")?;
        let mut widths: Vec<usize> = params
            .names()
            .filter_map(|n| n.strip_prefix("conv_s.")?.strip_suffix(".w")?.parse().ok())
            .collect();
        widths.sort_unstable();
        let filters = params.require("aspect_proj.w")?.shape()[0];
        Ok(Self {
            embed_dim: emb.shape()[1],
            kernel_widths: widths,
            filters,
            num_classes: head.shape()[0],
            ..base.clone()
        })
    }
}

/// Named parameter tensors, iterated in name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.tensors.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.tensors.remove(name)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Same zero-filled shapes.
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape())))
                .collect(),
        }
    }

    /// Fails on the first (name-ordered) tensor that is missing, extra or
    /// differently shaped.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<()> {
        for (name, t) in &self.tensors {
            match other.tensors.get(name) {
                None => return Err(Error::MissingTensor(name.clone())),
                Some(o) if o.shape() != t.shape() => {
                    return Err(Error::ShapeMismatch {
                        name: name.clone(),
                        expected: t.shape().to_vec(),
                        found: o.shape().to_vec(),
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = other.tensors.keys().find(|k| !self.tensors.contains_key(*k)) {
            return Err(Error::ShapeMismatch {
                name: extra.clone(),
                expected: Vec::new(),
                found: other.tensors[extra].shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn bit_eq(&self, other: &ParamSet) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .all(|(k, v)| other.tensors.get(k).is_some_and(|o| v.bit_eq(o)))
    }

    /// First tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.tensors
            .iter()
            .find(|(_, t)| !t.is_finite())
            .map(|(k, _)| k.as_str())
    }
}

fn head_tensors<R: Rng + ?Sized>(feature_dim: usize, num_classes: usize, rng: &mut R) -> (Tensor, Tensor) {
    let bound = 1.0 / (feature_dim as f64).sqrt();
    let w = Tensor::uniform(&[num_classes, feature_dim], bound, rng);
    let b = Tensor::uniform(&[num_classes], bound, rng);
    (w, b)
}

/// Fresh parameters. Embedding rows come from `table` where the token is
/// present, small uniform noise otherwise; the padding row is zero.
pub fn init_params<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    vocab: &Vocabulary,
    table: Option<&EmbeddingTable>,
    rng: &mut R,
) -> Result<ParamSet> {
    cfg.validate()?;
    let d = cfg.embed_dim;
    if let Some(t) = table {
        if t.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: t.dim(),
            });
        }
    }
    let mut p = ParamSet::new();

    let mut emb = Tensor::uniform(&[vocab.len(), d], UNKNOWN_EMBED_BOUND, rng);
    emb.row_mut(PAD_ID).fill(0.0);
    if let Some(t) = table {
        for (id, tok) in vocab.tokens() {
            if let Some(v) = t.get(tok) {
                emb.row_mut(id).copy_from_slice(v);
            }
        }
    }
    p.insert("embedding", emb);

    let f = cfg.filters;
    for &w in &cfg.kernel_widths {
        let fan_in = w * d;
        let bound = 1.0 / (fan_in as f64).sqrt();
        for conv in ["conv_s", "conv_a"] {
            p.insert(format!("{conv}.{w}.w"), Tensor::uniform(&[f, fan_in], bound, rng));
            p.insert(format!("{conv}.{w}.b"), Tensor::uniform(&[f], bound, rng));
        }
    }
    let bound = 1.0 / (d as f64).sqrt();
    p.insert("aspect_proj.w", Tensor::uniform(&[f, d], bound, rng));
    p.insert("aspect_proj.b", Tensor::uniform(&[f], bound, rng));

    let (hw, hb) = head_tensors(cfg.feature_dim(), cfg.num_classes, rng);
    p.insert("head.w", hw);
    p.insert("head.b", hb);
    Ok(p)
}

/// Copies every tensor except `head.{w,b}`, which are redrawn for
/// `num_classes` outputs from `U(±1/sqrt(feature_dim))`.
pub fn reinit_head<R: Rng + ?Sized>(params: &ParamSet, num_classes: usize, rng: &mut R) -> Result<ParamSet> {
    let feature_dim = params.require("head.w")?.shape()[1];
    let mut out = params.clone();
    let (w, b) = head_tensors(feature_dim, num_classes, rng);
    out.insert("head.w", w);
    out.insert("head.b", b);
    Ok(out)
}
