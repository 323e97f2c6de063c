//! Gated convolutional aspect classifier.
//!
//! For each kernel width `w` and filter `f`, at every window position:
//!
//! ```text
//! s = tanh(conv_s(x))
//! a = relu(conv_a(x) + aspect_proj(mean aspect embedding))
//! g = s * a
//! ```
//!
//! `g` is max-pooled over positions, the pools of all widths are
//! concatenated, passed through (inverted) dropout in training mode and an
//! affine head, then softmax.
//!
//! Each example is convolved over its own length only. A sentence shorter than
//! a kernel is zero-padded to one full window. Positions introduced by
//! batch padding never enter a pool.

use std::ops::Range;

use rand::Rng;

use super::{ModelConfig, ParamSet, Tensor};
use crate::corpus::{AspectInstance, Vocabulary};
use crate::{Error, Result};

/// Floor applied to probabilities before taking logarithms.
pub const LOG_EPS: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// An instance encoded against a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub ids: Vec<usize>,
    pub span: Range<usize>,
    pub label: usize,
}

pub fn encode_batch(instances: &[AspectInstance], vocab: &Vocabulary) -> Vec<Example> {
    instances
        .iter()
        .map(|inst| Example {
            ids: vocab.encode_all(&inst.tokens),
            span: inst.aspect_span(),
            label: inst.label as usize,
        })
        .collect()
}

#[derive(Debug, Clone)]
struct WidthCache {
    argmax: Vec<usize>,
    s: Vec<f64>,
    gate: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ExampleCache {
    ids: Vec<usize>,
    span: Range<usize>,
    x: Vec<f64>,
    aspect: Vec<f64>,
    widths: Vec<WidthCache>,
    pooled: Vec<f64>,
    mask: Option<Vec<f64>>,
    features: Vec<f64>,
}

/// Output of a forward pass together with what the backward pass needs.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
    caches: Vec<ExampleCache>,
}

impl Forward {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Concatenated max-pooled features before dropout.
    pub fn pooled(&self, i: usize) -> &[f64] {
        &self.caches[i].pooled
    }

    /// Features fed to the head (after dropout in training mode).
    pub fn features(&self, i: usize) -> &[f64] {
        &self.caches[i].features
    }
}

struct WidthNames {
    width: usize,
    s_w: String,
    s_b: String,
    a_w: String,
    a_b: String,
}

pub struct Gcae {
    cfg: ModelConfig,
    names: Vec<WidthNames>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Maps a gradient on softmax outputs to a gradient on logits.
pub fn softmax_backward(probs: &[f64], d_probs: &[f64]) -> Vec<f64> {
    let inner = dot(probs, d_probs);
    probs
        .iter()
        .zip(d_probs)
        .map(|(p, dp)| p * (dp - inner))
        .collect()
}

/// Batch-mean cross-entropy of probability rows against integer labels.
pub fn cross_entropy(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| -p[y].max(LOG_EPS).ln())
        .sum();
    total / probs.len() as f64
}

impl Gcae {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let names = cfg
            .kernel_widths
            .iter()
            .map(|&w| WidthNames {
                width: w,
                s_w: format!("conv_s.{w}.w"),
                s_b: format!("conv_s.{w}.b"),
                a_w: format!("conv_a.{w}.w"),
                a_b: format!("conv_a.{w}.b"),
            })
            .collect();
        Ok(Self { cfg, names })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn check_params(&self, params: &ParamSet) -> Result<()> {
        let d = self.cfg.embed_dim;
        let f = self.cfg.filters;
        let expect = |name: &str, shape: &[usize]| -> Result<()> {
            let t = params.require(name)?;
            if t.shape() != shape {
                return Err(Error::ShapeMismatch {
                    name: name.to_string(),
                    expected: shape.to_vec(),
                    found: t.shape().to_vec(),
                });
            }
            Ok(())
        };
        let emb = params.require("embedding")?;
        expect("embedding", &[emb.shape()[0], d])?;
        for n in &self.names {
            expect(&n.s_w, &[f, n.width * d])?;
            expect(&n.s_b, &[f])?;
            expect(&n.a_w, &[f, n.width * d])?;
            expect(&n.a_b, &[f])?;
        }
        expect("aspect_proj.w", &[f, d])?;
        expect("aspect_proj.b", &[f])?;
        expect("head.w", &[self.cfg.num_classes, self.cfg.feature_dim()])?;
        expect("head.b", &[self.cfg.num_classes])
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        params: &ParamSet,
        batch: &[Example],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        self.check_params(params)?;
        let emb = params.require("embedding")?;
        let vocab_size = emb.shape()[0];
        let d = self.cfg.embed_dim;
        let nf = self.cfg.filters;
        let max_w = self.cfg.max_width();
        let proj_w = params.require("aspect_proj.w")?;
        let proj_b = params.require("aspect_proj.b")?;
        let head_w = params.require("head.w")?;
        let head_b = params.require("head.b")?;
        let convs: Vec<(&Tensor, &Tensor, &Tensor, &Tensor)> = self
            .names
            .iter()
            .map(|n| {
                Ok((
                    params.require(&n.s_w)?,
                    params.require(&n.s_b)?,
                    params.require(&n.a_w)?,
                    params.require(&n.a_b)?,
                ))
            })
            .collect::<Result<_>>()?;

        let mut out = Forward {
            logits: Vec::with_capacity(batch.len()),
            probs: Vec::with_capacity(batch.len()),
            caches: Vec::with_capacity(batch.len()),
        };
        for ex in batch {
            let len = ex.ids.len();
            if !(ex.span.start < ex.span.end && ex.span.end <= len) {
                return Err(Error::InvalidInput(format!(
                    "aspect span {:?} invalid for {len} tokens",
                    ex.span
                )));
            }
            if let Some(&bad) = ex.ids.iter().find(|&&id| id >= vocab_size) {
                return Err(Error::InvalidInput(format!(
                    "token id {bad} outside vocabulary of {vocab_size}"
                )));
            }

            let padded = len.max(max_w);
            let mut x = vec![0.0; padded * d];
            for (pos, &id) in ex.ids.iter().enumerate() {
                x[pos * d..(pos + 1) * d].copy_from_slice(emb.row(id));
            }
            let mut aspect = vec![0.0; d];
            for pos in ex.span.clone() {
                axpy(1.0, &x[pos * d..(pos + 1) * d], &mut aspect);
            }
            let span_len = ex.span.len() as f64;
            aspect.iter_mut().for_each(|v| *v /= span_len);
            let aspect_bias: Vec<f64> = (0..nf)
                .map(|f| proj_b.data()[f] + dot(proj_w.row(f), &aspect))
                .collect();

            let mut pooled = Vec::with_capacity(self.cfg.feature_dim());
            let mut widths = Vec::with_capacity(self.names.len());
            for (n, (sw, sb, aw, ab)) in self.names.iter().zip(&convs) {
                let w = n.width;
                let windows = len.max(w) - w + 1;
                let mut wc = WidthCache {
                    argmax: vec![0; nf],
                    s: vec![0.0; nf],
                    gate: vec![0.0; nf],
                };
                for f in 0..nf {
                    let (srow, arow) = (sw.row(f), aw.row(f));
                    let (sbias, abias) = (sb.data()[f], ab.data()[f] + aspect_bias[f]);
                    let mut best = f64::NEG_INFINITY;
                    for p in 0..windows {
                        let win = &x[p * d..(p + w) * d];
                        let s = (sbias + dot(srow, win)).tanh();
                        let gate = (abias + dot(arow, win)).max(0.0);
                        let g = s * gate;
                        if g > best {
                            best = g;
                            wc.argmax[f] = p;
                            wc.s[f] = s;
                            wc.gate[f] = gate;
                        }
                    }
                    pooled.push(best);
                }
                widths.push(wc);
            }

            let (mask, features) = match mode {
                Mode::Train if self.cfg.dropout > 0.0 => {
                    let keep = 1.0 - self.cfg.dropout;
                    let mask: Vec<f64> = (0..pooled.len())
                        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    let feats = pooled.iter().zip(&mask).map(|(h, m)| h * m).collect();
                    (Some(mask), feats)
                }
                _ => (None, pooled.clone()),
            };

            let logits: Vec<f64> = (0..self.cfg.num_classes)
                .map(|k| head_b.data()[k] + dot(head_w.row(k), &features))
                .collect();
            out.probs.push(softmax(&logits));
            out.logits.push(logits);
            out.caches.push(ExampleCache {
                ids: ex.ids.clone(),
                span: ex.span.clone(),
                x,
                aspect,
                widths,
                pooled,
                mask,
                features,
            });
        }
        Ok(out)
    }

    /// Parameter gradients given the gradient of the loss on each logit row.
    /// The embedding gets no gradient entry when it is frozen.
    pub fn backward(&self, params: &ParamSet, fwd: &Forward, d_logits: &[Vec<f64>]) -> Result<ParamSet> {
        if d_logits.len() != fwd.len() {
            return Err(Error::DimensionMismatch {
                expected: fwd.len(),
                found: d_logits.len(),
            });
        }
        let d = self.cfg.embed_dim;
        let nf = self.cfg.filters;
        let mut grads = params.zeros_like();
        if !self.cfg.trainable_embedding {
            grads.remove("embedding");
        }
        let proj_w = params.require("aspect_proj.w")?;
        let head_w = params.require("head.w")?;

        for (c, dz) in fwd.caches.iter().zip(d_logits) {
            if dz.len() != self.cfg.num_classes {
                return Err(Error::DimensionMismatch {
                    expected: self.cfg.num_classes,
                    found: dz.len(),
                });
            }
            let mut d_feat = vec![0.0; c.features.len()];
            {
                let gw = grads.get_mut("head.w").expect("head.w");
                for (k, &g) in dz.iter().enumerate() {
                    axpy(g, &c.features, gw.row_mut(k));
                    axpy(g, head_w.row(k), &mut d_feat);
                }
                let gb = grads.get_mut("head.b").expect("head.b");
                axpy(1.0, dz, gb.data_mut());
            }
            if let Some(mask) = &c.mask {
                d_feat.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
            }

            let mut dx = vec![0.0; c.x.len()];
            let mut d_bias = vec![0.0; nf];
            for (wi, (n, wc)) in self.names.iter().zip(&c.widths).enumerate() {
                let w = n.width;
                let sw = params.require(&n.s_w)?;
                let aw = params.require(&n.a_w)?;
                for f in 0..nf {
                    let dg = d_feat[wi * nf + f];
                    if dg == 0.0 {
                        continue;
                    }
                    let p = wc.argmax[f];
                    let win = p * d..(p + w) * d;
                    let (s, gate) = (wc.s[f], wc.gate[f]);
                    let dzs = dg * gate * (1.0 - s * s);
                    let dza = if gate > 0.0 { dg * s } else { 0.0 };

                    axpy(dzs, &c.x[win.clone()], grads.get_mut(&n.s_w).expect("conv").row_mut(f));
                    grads.get_mut(&n.s_b).expect("conv").data_mut()[f] += dzs;
                    axpy(dzs, sw.row(f), &mut dx[win.clone()]);
                    if dza != 0.0 {
                        axpy(dza, &c.x[win.clone()], grads.get_mut(&n.a_w).expect("conv").row_mut(f));
                        grads.get_mut(&n.a_b).expect("conv").data_mut()[f] += dza;
                        axpy(dza, aw.row(f), &mut dx[win]);
                        d_bias[f] += dza;
                    }
                }
            }

            let mut d_aspect = vec![0.0; d];
            {
                let gw = grads.get_mut("aspect_proj.w").expect("aspect_proj.w");
                for (f, &g) in d_bias.iter().enumerate() {
                    if g != 0.0 {
                        axpy(g, &c.aspect, gw.row_mut(f));
                        axpy(g, proj_w.row(f), &mut d_aspect);
                    }
                }
                let gb = grads.get_mut("aspect_proj.b").expect("aspect_proj.b");
                axpy(1.0, &d_bias, gb.data_mut());
            }

            if let Some(ge) = grads.get_mut("embedding") {
                for (pos, &id) in c.ids.iter().enumerate() {
                    axpy(1.0, &dx[pos * d..(pos + 1) * d], ge.row_mut(id));
                }
                let inv = 1.0 / c.span.len() as f64;
                for pos in c.span.clone() {
                    axpy(inv, &d_aspect, ge.row_mut(c.ids[pos]));
                }
            }
        }
        if let Some(name) = grads.first_non_finite() {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
        Ok(grads)
    }

    /// Batch-mean cross-entropy and its gradient.
    pub fn ce_loss_and_grad<R: Rng + ?Sized>(
        &self,
        params: &ParamSet,
        batch: &[Example],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, ParamSet)> {
        let fwd = self.forward(params, batch, mode, rng)?;
        let (loss, d_logits) = self.ce_from_forward(&fwd, batch)?;
        if !loss.is_finite() {
            let name = params.first_non_finite().unwrap_or("loss");
            return Err(Error::NonFinite(name.to_string()));
        }
        Ok((loss, self.backward(params, &fwd, &d_logits)?))
    }

    /// Cross-entropy computed from logits, and `(p - y) / batch` per row.
    pub fn ce_from_forward(&self, fwd: &Forward, batch: &[Example]) -> Result<(f64, Vec<Vec<f64>>)> {
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut d_logits = Vec::with_capacity(batch.len());
        for ((z, p), ex) in fwd.logits.iter().zip(&fwd.probs).zip(batch) {
            if ex.label >= self.cfg.num_classes {
                return Err(Error::InvalidInput(format!(
                    "label {} outside 0..{}",
                    ex.label, self.cfg.num_classes
                )));
            }
            loss += log_sum_exp(z) - z[ex.label];
            let mut g: Vec<f64> = p.iter().map(|v| v * scale).collect();
            g[ex.label] -= scale;
            d_logits.push(g);
        }
        Ok((loss * scale, d_logits))
    }

    /// Eval-mode class distributions.
    pub fn predict(&self, params: &ParamSet, batch: &[Example]) -> Result<Vec<Vec<f64>>> {
        let mut unused = rand::rngs::mock::StepRng::new(0, 0);
        Ok(self.forward(params, batch, Mode::Eval, &mut unused)?.probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::model::init_params;
    use crate::rng::SeedStream;

    fn setup(classes: usize) -> (Gcae, ParamSet, Vec<Example>) {
        let words: Vec<String> = (0..18).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::build(std::iter::once(words.as_slice()), 1);
        let cfg = ModelConfig {
            embed_dim: 8,
            kernel_widths: vec![2, 3],
            filters: 4,
            num_classes: classes,
            dropout: 0.2,
            trainable_embedding: true,
        };
        let params = init_params(&cfg, &vocab, None, &mut SeedStream::new(5).rng("init")).unwrap();
        let batch = vec![
            Example { ids: vec![2, 3, 4, 5, 6], span: 1..2, label: 0 },
            Example { ids: vec![7, 8], span: 0..2, label: 1 },
            Example { ids: vec![9, 1, 10, 11, 12, 13, 14], span: 3..5, label: classes - 1 },
        ];
        (Gcae::new(cfg).unwrap(), params, batch)
    }

    #[test]
    fn rows_are_distributions_and_eval_is_deterministic() {
        let (m, p, b) = setup(3);
        let a = m.predict(&p, &b).unwrap();
        let c = m.predict(&p, &b).unwrap();
        assert_eq!(a, c);
        for row in &a {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let mut rng = SeedStream::new(1).rng("drop");
        let t = m.forward(&p, &b, Mode::Train, &mut rng).unwrap();
        for row in &t.probs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_head_gives_uniform() {
        let (m, mut p, b) = setup(3);
        p.get_mut("head.w").unwrap().data_mut().fill(0.0);
        p.get_mut("head.b").unwrap().data_mut().fill(0.0);
        for row in m.predict(&p, &b).unwrap() {
            for v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn analytic_losses() {
        let (m, mut p, b) = setup(2);
        p.get_mut("head.w").unwrap().data_mut().fill(0.0);
        p.get_mut("head.b").unwrap().data_mut().fill(0.0);
        let mut rng = SeedStream::new(1).rng("x");
        let (loss, _) = m.ce_loss_and_grad(&p, &b, Mode::Eval, &mut rng).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);

        // A dominant bias towards the true label drives the loss to zero.
        let hb = p.get_mut("head.b").unwrap();
        hb.data_mut().copy_from_slice(&[800.0, 0.0]);
        let only_first = vec![b[0].clone()];
        let (loss, _) = m.ce_loss_and_grad(&p, &only_first, Mode::Eval, &mut rng).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn errors() {
        let (m, p, b) = setup(3);
        assert!(matches!(m.predict(&p, &[]), Err(Error::Empty(_))));
        let bad = vec![Example { ids: vec![2, 3], span: 1..3, label: 0 }];
        assert!(m.predict(&p, &bad).is_err());
        let bad = vec![Example { ids: vec![2, 3], span: 1..1, label: 0 }];
        assert!(m.predict(&p, &bad).is_err());
        let bad = vec![Example { ids: vec![2, 99], span: 0..1, label: 0 }];
        assert!(m.predict(&p, &bad).is_err());
        let mut rng = SeedStream::new(1).rng("x");
        let bad = vec![Example { ids: vec![2, 3], span: 0..1, label: 3 }];
        assert!(m.ce_loss_and_grad(&p, &bad, Mode::Eval, &mut rng).is_err());

        let mut nan = p.clone();
        nan.get_mut("conv_s.2.b").unwrap().data_mut()[0] = f64::NAN;
        match m.ce_loss_and_grad(&nan, &b, Mode::Eval, &mut rng) {
            Err(Error::NonFinite(name)) => assert!(name.contains("conv_s.2.b"), "{name}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn permutation_equivariant() {
        let (m, p, b) = setup(3);
        let probs = m.predict(&p, &b).unwrap();
        let perm = [2, 0, 1];
        let permuted: Vec<Example> = perm.iter().map(|&i| b[i].clone()).collect();
        let pp = m.predict(&p, &permuted).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            assert_eq!(pp[j], probs[i]);
        }
    }

    #[test]
    fn frozen_embedding_has_no_gradient() {
        let (m, p, b) = setup(3);
        let frozen = Gcae::new(ModelConfig { trainable_embedding: false, ..m.config().clone() }).unwrap();
        let mut rng = SeedStream::new(1).rng("x");
        let (_, g) = frozen.ce_loss_and_grad(&p, &b, Mode::Eval, &mut rng).unwrap();
        assert!(g.get("embedding").is_none());
        let (_, g) = m.ce_loss_and_grad(&p, &b, Mode::Eval, &mut rng).unwrap();
        assert!(g.get("embedding").is_some());
    }
}
