use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stages::{stage1_pretrain, stage2_guidance, stage3_finetune, EpochLog, GuidanceConfig, StageConfig};
use crate::corpus::{extract_pseudo_aspect, tokenize, AspectInstance, PosLexicon, SentenceRecord, Vocabulary};
use crate::model::{encode_batch, init_params, reinit_head, Example, ModelConfig, ParamSet};
use crate::retrieval::{sample_doc_ids, Bm25Index, Bm25Params, EmbeddingTable, SampleConfig};
use crate::rng::SeedStream;
use crate::{Error, Result};

/// Which parts of the framework a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Components {
    /// Sample, pseudo-label and pretrain on the source corpus.
    pub pretrain: bool,
    /// Consistency term of the guidance loss.
    pub consistency: bool,
    /// EMA learner.
    pub ema: bool,
    /// Final fine-tuning stage.
    pub finetune: bool,
}

impl Components {
    pub const FULL: Components = Components {
        pretrain: true,
        consistency: true,
        ema: true,
        finetune: true,
    };
    pub const BASELINE: Components = Components {
        pretrain: false,
        consistency: false,
        ema: false,
        finetune: true,
    };

    /// Stage 2 runs when either of its parts is enabled.
    pub fn runs_stage2(&self) -> bool {
        self.consistency || self.ema
    }
}

impl fmt::Display for Components {
    /// Letters joined by `+`: S (pretrain), R (consistency), E (EMA), F (finetune).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.pretrain, "S"),
            (self.consistency, "R"),
            (self.ema, "E"),
            (self.finetune, "F"),
        ]
        .into_iter()
        .filter_map(|(on, l)| on.then_some(l))
        .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

impl FromStr for Components {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => return Ok(Components::FULL),
            "baseline" => return Ok(Components::BASELINE),
            "none" => {
                return Ok(Components {
                    pretrain: false,
                    consistency: false,
                    ema: false,
                    finetune: false,
                })
            }
            _ => {}
        }
        let mut c = Components {
            pretrain: false,
            consistency: false,
            ema: false,
            finetune: false,
        };
        for part in s.split('+') {
            let slot = match part.trim() {
                "S" | "s" => &mut c.pretrain,
                "R" | "r" => &mut c.consistency,
                "E" | "e" => &mut c.ema,
                "F" | "f" => &mut c.finetune,
                other => {
                    return Err(Error::Config(format!(
                        "component {other:?} in {s:?}: expected letters S, R, E, F joined by '+'"
                    )))
                }
            };
            *slot = true;
        }
        Ok(c)
    }
}

/// Everything that configures one pipeline run except the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sample: SampleConfig,
    pub bm25: Bm25Params,
    /// Target-task model; stage 1 uses the same shape with two classes.
    pub model: ModelConfig,
    pub stage1: StageConfig,
    pub guidance: GuidanceConfig,
    pub stage3: StageConfig,
    pub components: Components,
    pub min_count: usize,
    /// Threads used by sampling.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sample: SampleConfig::default(),
            bm25: Bm25Params::default(),
            model: ModelConfig::default(),
            stage1: StageConfig::new(10, 256, 1e-3),
            guidance: GuidanceConfig::default(),
            stage3: StageConfig::new(10, 64, 1e-3),
            components: Components::FULL,
            min_count: 1,
            jobs: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sample.validate()?;
        self.bm25.validate()?;
        self.model.validate()?;
        self.stage1.validate()?;
        self.guidance.validate()?;
        self.stage3.validate()
    }

    /// Flat key/value echo recorded in run reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let m = &self.model;
        let g = &self.guidance;
        let widths: Vec<String> = m.kernel_widths.iter().map(usize::to_string).collect();
        [
            ("sample.n", self.sample.n.to_string()),
            ("sample.k", self.sample.k.to_string()),
            ("sample.strategy", self.sample.strategy.to_string()),
            ("bm25.k1", self.bm25.k1.to_string()),
            ("bm25.b", self.bm25.b.to_string()),
            ("model.embed_dim", m.embed_dim.to_string()),
            ("model.kernel_widths", widths.join(",")),
            ("model.filters", m.filters.to_string()),
            ("model.num_classes", m.num_classes.to_string()),
            ("model.dropout", m.dropout.to_string()),
            ("model.trainable_embedding", m.trainable_embedding.to_string()),
            ("stage1.epochs", self.stage1.epochs.to_string()),
            ("stage1.batch_size", self.stage1.batch_size.to_string()),
            ("stage1.lr", self.stage1.lr.to_string()),
            ("stage2.epochs", g.stage.epochs.to_string()),
            ("stage2.batch_size", g.stage.batch_size.to_string()),
            ("stage2.lr", g.stage.lr.to_string()),
            ("stage2.beta", g.beta.to_string()),
            ("stage2.alpha", g.alpha.to_string()),
            ("stage2.epoch_origin", g.origin.to_string()),
            ("stage3.epochs", self.stage3.epochs.to_string()),
            ("stage3.batch_size", self.stage3.batch_size.to_string()),
            ("stage3.lr", self.stage3.lr.to_string()),
            ("components", self.components.to_string()),
            ("vocab.min_count", self.min_count.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Key identifying everything stage 1 depends on, for caching.
    pub fn stage1_key(&self, seed: u64) -> String {
        format!(
            "{seed}|{:?}|{:?}|{:?}|{:?}|{}",
            self.sample, self.bm25, self.model, self.stage1, self.min_count
        )
    }
}

/// Corpora plus the structures derived from them once per run.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub source: Vec<SentenceRecord>,
    pub target_train: Vec<AspectInstance>,
    pub lexicon: PosLexicon,
    pub table: Option<EmbeddingTable>,
    pub vocab: Vocabulary,
    pub index: Bm25Index,
    pub target_encoded: Vec<Example>,
}

impl PreparedData {
    /// The vocabulary covers every source sentence and every training target
    /// instance.
    pub fn new(
        source: Vec<SentenceRecord>,
        target_train: Vec<AspectInstance>,
        lexicon: PosLexicon,
        table: Option<EmbeddingTable>,
        min_count: usize,
        bm25: Bm25Params,
    ) -> Result<Self> {
        if target_train.is_empty() {
            return Err(Error::Empty("target training set"));
        }
        for r in &source {
            r.validate()?;
        }
        let index = Bm25Index::build(&source, bm25)?;
        let docs: Vec<Vec<String>> = source.iter().map(|r| tokenize(&r.text)).collect();
        let vocab = Vocabulary::build(
            docs.iter()
                .map(Vec::as_slice)
                .chain(target_train.iter().map(|t| t.tokens.as_slice())),
            min_count,
        );
        let target_encoded = encode_batch(&target_train, &vocab);
        Ok(PreparedData {
            source,
            target_train,
            lexicon,
            table,
            vocab,
            index,
            target_encoded,
        })
    }
}

/// Result of sampling, pseudo-labelling and pretraining.
#[derive(Debug, Clone)]
pub struct Stage1Artifacts {
    pub sampled: Vec<usize>,
    pub pseudo: Vec<AspectInstance>,
    pub dropped: usize,
    pub m1: ParamSet,
    pub log: Vec<EpochLog>,
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub components: String,
    pub config: BTreeMap<String, String>,
    pub sampled: usize,
    pub pseudo_labelled: usize,
    /// Sampled sentences without an extractable aspect.
    pub dropped: usize,
    pub epochs: Vec<EpochLog>,
    /// Which stage-2 model seeded the rest of the run, if stage 2 ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carried: Option<String>,
    pub checkpoints: BTreeMap<String, String>,
    /// Wall-clock seconds per step.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub params: ParamSet,
    pub report: RunReport,
}

/// A finished stage as seen by a pipeline observer.
pub struct StageEvent<'a> {
    pub stage: &'static str,
    pub params: &'a ParamSet,
    pub report: &'a RunReport,
}

/// Observer that may persist a stage's parameters and return where.
pub type Observer<'a> = dyn FnMut(StageEvent<'_>) -> Result<Option<PathBuf>> + 'a;

/// Sampling, pseudo-labelling and stage 1.
pub fn run_stage1(data: &PreparedData, cfg: &PipelineConfig, seed: u64) -> Result<Stage1Artifacts> {
    cfg.validate()?;
    let seeds = SeedStream::new(seed);
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let sample = SampleConfig { seed, ..cfg.sample };
    let sampled = sample_doc_ids(&data.target_train, &sample, &data.index, data.table.as_ref(), cfg.jobs)?;
    timings.insert("sample".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let pseudo: Vec<AspectInstance> = sampled
        .iter()
        .filter_map(|&d| extract_pseudo_aspect(&data.source[d], &data.lexicon))
        .collect();
    let dropped = sampled.len() - pseudo.len();
    timings.insert("pseudo".to_string(), t.elapsed().as_secs_f64());
    log::info!(
        "sampled {} source sentences, {} pseudo-labelled, {dropped} without aspect",
        sampled.len(),
        pseudo.len()
    );
    if pseudo.is_empty() {
        return Err(Error::Empty("pseudo-labelled source set"));
    }

    let t = Instant::now();
    let model = cfg.model.with_classes(2);
    let init = init_params(&model, &data.vocab, data.table.as_ref(), &mut seeds.rng("stage1.init"))?;
    let examples = encode_batch(&pseudo, &data.vocab);
    let out = stage1_pretrain(init, &examples, &model, &cfg.stage1, &seeds)?;
    timings.insert("stage1".to_string(), t.elapsed().as_secs_f64());

    Ok(Stage1Artifacts {
        sampled,
        pseudo,
        dropped,
        m1: out.params,
        log: out.log,
        timings,
    })
}

/// Everything after stage 1, given its artifacts when pretraining is on.
pub fn run_after_stage1(
    data: &PreparedData,
    cfg: &PipelineConfig,
    seed: u64,
    stage1: Option<&Stage1Artifacts>,
    observer: &mut Observer<'_>,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let comps = cfg.components;
    if comps.pretrain != stage1.is_some() {
        return Err(Error::InvalidInput(
            "stage-1 artifacts must be given exactly when pretraining is enabled".into(),
        ));
    }
    let seeds = SeedStream::new(seed);
    let mut report = RunReport {
        seed,
        components: comps.to_string(),
        config: cfg.echo(),
        ..RunReport::default()
    };
    let mut emit = |stage: &'static str, params: &ParamSet, report: &mut RunReport| -> Result<()> {
        if let Some(path) = observer(StageEvent { stage, params, report })? {
            report.checkpoints.insert(stage.to_string(), path.display().to_string());
        }
        Ok(())
    };

    let target = &cfg.model;
    let m1 = match stage1 {
        Some(s1) => {
            report.sampled = s1.sampled.len();
            report.pseudo_labelled = s1.pseudo.len();
            report.dropped = s1.dropped;
            report.epochs.extend(s1.log.iter().cloned());
            report.timings.extend(s1.timings.clone());
            emit("stage1", &s1.m1, &mut report)?;
            Some(&s1.m1)
        }
        None => None,
    };

    let mut current = if comps.runs_stage2() {
        let t = Instant::now();
        let start = match m1 {
            Some(m) => m.clone(),
            None => init_params(target, &data.vocab, data.table.as_ref(), &mut seeds.rng("init.target"))?,
        };
        let gc = GuidanceConfig {
            consistency: comps.consistency,
            ema: comps.ema,
            ..cfg.guidance
        };
        let out = stage2_guidance(&start, &data.target_encoded, target, &gc, &seeds)?;
        report.epochs.extend(out.log);
        report.timings.insert("stage2".to_string(), t.elapsed().as_secs_f64());
        let carried = if comps.ema {
            report.carried = Some("learner".into());
            out.learner
        } else {
            report.carried = Some("guidance".into());
            out.guidance
        };
        emit("stage2", &carried, &mut report)?;
        carried
    } else {
        match m1 {
            Some(m) => reinit_head(m, target.num_classes, &mut seeds.rng("stage2.head"))?,
            None => init_params(target, &data.vocab, data.table.as_ref(), &mut seeds.rng("init.target"))?,
        }
    };

    if comps.finetune {
        let t = Instant::now();
        let out = stage3_finetune(current, &data.target_encoded, target, &cfg.stage3, &seeds)?;
        report.epochs.extend(out.log);
        report.timings.insert("stage3".to_string(), t.elapsed().as_secs_f64());
        current = out.params;
        emit("stage3", &current, &mut report)?;
    }
    Ok(PipelineOutput {
        params: current,
        report,
    })
}

pub fn run_pipeline_with(
    data: &PreparedData,
    cfg: &PipelineConfig,
    seed: u64,
    observer: &mut Observer<'_>,
) -> Result<PipelineOutput> {
    let s1 = if cfg.components.pretrain {
        Some(run_stage1(data, cfg, seed)?)
    } else {
        None
    };
    run_after_stage1(data, cfg, seed, s1.as_ref(), observer)
}

pub fn run_pipeline(data: &PreparedData, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    run_pipeline_with(data, cfg, seed, &mut |_| Ok(None))
}
