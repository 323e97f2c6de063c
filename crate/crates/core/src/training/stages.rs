use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::guidance::{ema_update_in_place, guidance_logit_grads, guidance_loss};
use super::schedule::{alpha_for_epoch, AlphaMode, EpochOrigin};
use crate::model::{adam_step, reinit_head, AdamConfig, AdamState, Example, Gcae, Mode, ModelConfig, ParamSet};
use crate::rng::{Rng, SeedStream};
use crate::{Error, Result};

/// Epochs, batch size and learning rate of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl StageConfig {
    pub fn new(epochs: usize, batch_size: usize, lr: f64) -> Self {
        StageConfig { epochs, batch_size, lr }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

/// Stage-2 settings on top of the shared stage knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceConfig {
    pub stage: StageConfig,
    pub beta: f64,
    pub alpha: AlphaMode,
    pub origin: EpochOrigin,
    /// Include the consistency term in the guidance loss.
    pub consistency: bool,
    /// Track the guidance model with the learner via EMA.
    pub ema: bool,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            stage: StageConfig::new(10, 64, 1e-3),
            beta: 0.99,
            alpha: AlphaMode::Adaptive,
            origin: EpochOrigin::One,
            consistency: true,
            ema: true,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        self.stage.validate()?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta {} outside [0, 1]", self.beta)));
        }
        if let AlphaMode::Constant(c) = self.alpha {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Config(format!("constant alpha {c} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub stage: String,
    pub epoch: usize,
    /// Example-weighted mean of the optimized loss over the epoch.
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StageOutput {
    pub params: ParamSet,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone)]
pub struct Stage2Output {
    /// Shared starting point of both models.
    pub initial: ParamSet,
    pub guidance: ParamSet,
    pub learner: ParamSet,
    pub log: Vec<EpochLog>,
}

fn check_labels(data: &[Example], num_classes: usize, what: &'static str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty(what));
    }
    if let Some(e) = data.iter().find(|e| e.label >= num_classes) {
        return Err(Error::InvalidInput(format!(
            "{what}: label {} outside 0..{num_classes}",
            e.label
        )));
    }
    Ok(())
}

fn batches(len: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

fn gather(data: &[Example], idx: &[usize]) -> Vec<Example> {
    idx.iter().map(|&i| data[i].clone()).collect()
}

fn head_classes(params: &ParamSet) -> Result<usize> {
    Ok(params.require("head.b")?.len())
}

/// Plain cross-entropy training shared by stages 1 and 3.
fn train_ce(
    stage: &str,
    mut params: ParamSet,
    data: &[Example],
    model: &ModelConfig,
    cfg: &StageConfig,
    seeds: &SeedStream,
) -> Result<StageOutput> {
    cfg.validate()?;
    let gcae = Gcae::new(model.clone())?;
    let mut shuffle = seeds.rng(&format!("{stage}.shuffle"));
    let mut dropout = seeds.rng(&format!("{stage}.dropout"));
    let mut adam = AdamState::new(&params, cfg.adam());
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for idx in batches(data.len(), cfg.batch_size, &mut shuffle) {
            let batch = gather(data, &idx);
            let (loss, grads) = gcae.ce_loss_and_grad(&params, &batch, Mode::Train, &mut dropout)?;
            adam_step(&mut params, &grads, &mut adam)?;
            total += loss * batch.len() as f64;
        }
        let loss = total / data.len() as f64;
        log::debug!("{stage} epoch {epoch}: loss {loss:.6}");
        log.push(EpochLog {
            stage: stage.to_string(),
            epoch,
            loss,
            alpha: None,
            classification: None,
            consistency: None,
        });
    }
    Ok(StageOutput { params, log })
}

/// Pretrain on pseudo-labelled source instances (binary labels).
pub fn stage1_pretrain(
    init: ParamSet,
    data: &[Example],
    model: &ModelConfig,
    cfg: &StageConfig,
    seeds: &SeedStream,
) -> Result<StageOutput> {
    check_labels(data, 2, "stage-1 data")?;
    if head_classes(&init)? != 2 || model.num_classes != 2 {
        return Err(Error::InvalidInput("stage 1 expects a 2-class model".into()));
    }
    train_ce("stage1", init, data, model, cfg, seeds)
}

/// Knowledge-guidance training. Both models start from `m1` with one fresh
/// `model.num_classes` head; only the guidance model sees labels and
/// gradients, and the learner follows it by EMA when enabled.
pub fn stage2_guidance(
    m1: &ParamSet,
    data: &[Example],
    model: &ModelConfig,
    cfg: &GuidanceConfig,
    seeds: &SeedStream,
) -> Result<Stage2Output> {
    cfg.validate()?;
    check_labels(data, model.num_classes, "stage-2 data")?;
    let gcae = Gcae::new(model.clone())?;
    let initial = reinit_head(m1, model.num_classes, &mut seeds.rng("stage2.head"))?;
    let mut guidance = initial.clone();
    let mut learner = initial.clone();
    let mut shuffle = seeds.rng("stage2.shuffle");
    let mut dropout = seeds.rng("stage2.dropout");
    let mut adam = AdamState::new(&guidance, cfg.stage.adam());
    let epochs = cfg.stage.epochs;
    let mut log = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let alpha = alpha_for_epoch(epoch, epochs, cfg.alpha, cfg.origin)?;
        let (mut total, mut ce, mut rep) = (0.0, 0.0, 0.0);
        for idx in batches(data.len(), cfg.stage.batch_size, &mut shuffle) {
            let batch = gather(data, &idx);
            let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
            let fwd = gcae.forward(&guidance, &batch, Mode::Train, &mut dropout)?;
            let p_l = gcae.predict(&learner, &batch)?;
            let terms = guidance_loss(&fwd.probs, &p_l, &labels, alpha)?;
            let d_logits = guidance_logit_grads(&fwd.probs, &p_l, &labels, alpha, cfg.consistency)?;
            let grads = gcae.backward(&guidance, &fwd, &d_logits)?;
            adam_step(&mut guidance, &grads, &mut adam)?;
            if cfg.ema {
                ema_update_in_place(&mut learner, &guidance, cfg.beta)?;
            }
            let n = batch.len() as f64;
            let optimized = if cfg.consistency {
                terms.total
            } else {
                alpha * terms.classification
            };
            total += optimized * n;
            ce += terms.classification * n;
            rep += terms.consistency * n;
        }
        let n = data.len() as f64;
        log::debug!("stage2 epoch {epoch}: loss {:.6} alpha {alpha:.4}", total / n);
        log.push(EpochLog {
            stage: "stage2".into(),
            epoch,
            loss: total / n,
            alpha: Some(alpha),
            classification: Some(ce / n),
            consistency: Some(rep / n),
        });
    }
    Ok(Stage2Output {
        initial,
        guidance,
        learner,
        log,
    })
}

/// Fine-tune an already target-shaped model on labelled target data.
pub fn stage3_finetune(
    m2: ParamSet,
    data: &[Example],
    model: &ModelConfig,
    cfg: &StageConfig,
    seeds: &SeedStream,
) -> Result<StageOutput> {
    check_labels(data, model.num_classes, "stage-3 data")?;
    let classes = head_classes(&m2)?;
    if classes != model.num_classes {
        return Err(Error::InvalidInput(format!(
            "stage 3 expects a {}-class model, found {classes}",
            model.num_classes
        )));
    }
    train_ce("stage3", m2, data, model, cfg, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Tensor};

    fn toy(num_classes: usize, n: usize) -> (ModelConfig, ParamSet, Vec<Example>) {
        let cfg = ModelConfig {
            embed_dim: 6,
            kernel_widths: vec![2],
            filters: 4,
            num_classes,
            dropout: 0.2,
            trainable_embedding: true,
        };
        let vocab = crate::corpus::Vocabulary::build(
            [["a", "b", "c", "d", "e", "f", "g", "h"].as_slice()],
            1,
        );
        let params = init_params(&cfg, &vocab, None, &mut SeedStream::new(3).rng("init")).unwrap();
        let data = (0..n)
            .map(|i| Example {
                ids: vec![2 + i % 8, 2 + (i * 3) % 8, 2 + (i * 5 + 1) % 8],
                span: 1..2,
                label: i % num_classes,
            })
            .collect();
        (cfg, params, data)
    }

    #[test]
    fn stage1_deterministic_and_rejects_bad_input() {
        let (cfg, params, data) = toy(2, 12);
        let sc = StageConfig::new(3, 5, 1e-2);
        let seeds = SeedStream::new(9);
        let a = stage1_pretrain(params.clone(), &data, &cfg, &sc, &seeds).unwrap();
        let b = stage1_pretrain(params.clone(), &data, &cfg, &sc, &seeds).unwrap();
        assert!(a.params.bit_eq(&b.params));
        assert_eq!(a.log, b.log);
        assert_eq!(a.log.len(), 3);
        assert!(stage1_pretrain(params.clone(), &[], &cfg, &sc, &seeds).is_err());
        let mut bad = data.clone();
        bad[0].label = 2;
        assert!(stage1_pretrain(params, &bad, &cfg, &sc, &seeds).is_err());
    }

    #[test]
    fn single_example_memorized() {
        let (cfg, params, data) = toy(2, 1);
        let sc = StageConfig::new(200, 1, 5e-2);
        let out = stage1_pretrain(params, &data, &cfg, &sc, &SeedStream::new(1)).unwrap();
        let first = out.log[0].loss;
        let last = out.log.last().unwrap().loss;
        assert!(last < first / 10.0, "{first} -> {last}");
        let probs = Gcae::new(cfg).unwrap().predict(&out.params, &data).unwrap();
        let eval_loss = crate::model::cross_entropy(&probs, &[data[0].label]);
        assert!(eval_loss < 1e-2, "{eval_loss}");
    }

    #[test]
    fn beta_one_keeps_learner_and_no_ema_matches() {
        let (cfg1, m1, _) = toy(2, 1);
        let (cfg3, _, data) = toy(3, 10);
        let _ = cfg1;
        let seeds = SeedStream::new(4);
        let mut gc = GuidanceConfig {
            stage: StageConfig::new(2, 4, 1e-2),
            beta: 1.0,
            ..GuidanceConfig::default()
        };
        let out = stage2_guidance(&m1, &data, &cfg3, &gc, &seeds).unwrap();
        assert!(out.learner.bit_eq(&out.initial));
        assert!(!out.guidance.bit_eq(&out.initial));
        gc.beta = 0.99;
        gc.ema = false;
        let out = stage2_guidance(&m1, &data, &cfg3, &gc, &seeds).unwrap();
        assert!(out.learner.bit_eq(&out.initial));
        assert!(stage2_guidance(&m1, &data, &cfg3.with_classes(2), &gc, &seeds).is_err());
    }

    #[test]
    fn zero_lr_finetune_is_identity() {
        let (cfg, m2, data) = toy(3, 9);
        let seeds = SeedStream::new(5);
        let out = stage3_finetune(m2.clone(), &data, &cfg, &StageConfig::new(2, 4, 0.0), &seeds).unwrap();
        assert!(out.params.bit_eq(&m2));
        let out = stage3_finetune(m2.clone(), &data, &cfg, &StageConfig::new(2, 4, 1e-3), &seeds).unwrap();
        assert!(!out.params.bit_eq(&m2));
        let mut two = m2.clone();
        two.insert("head.b", Tensor::zeros(&[2]));
        assert!(stage3_finetune(two, &data, &cfg, &StageConfig::new(1, 4, 1e-3), &seeds).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(StageConfig::new(0, 1, 1e-3).validate().is_err());
        assert!(StageConfig::new(1, 0, 1e-3).validate().is_err());
        assert!(StageConfig::new(1, 1, f64::NAN).validate().is_err());
        let gc = GuidanceConfig {
            beta: 1.5,
            ..GuidanceConfig::default()
        };
        assert!(gc.validate().is_err());
    }
}
