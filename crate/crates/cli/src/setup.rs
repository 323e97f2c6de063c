//! Configuration assembly and input loading shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use uika_core::config::RunConfig;
use uika_core::corpus::{read_jsonl, AspectInstance, PosLexicon, SentenceRecord, DEFAULT_NOUN_SUFFIXES};
use uika_core::retrieval::{EmbeddingTable, Strategy};
use uika_core::training::PreparedData;

/// Flags accepted by every subcommand. They are applied on top of the
/// config file in this order: `--set` pairs, then the dedicated flags.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// BM25 shortlist size per target instance.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Reranked instances kept per target instance.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Sampling strategy: coarse2fine, coarse or random.
    #[arg(long, global = true)]
    pub strategy: Option<Strategy>,
    #[arg(long, global = true)]
    pub k1: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Root seed of a single run; for `ablate` it replaces the seed list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sampling threads, or worker processes for `ablate`.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Parent directory of the timestamped run directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .with_context(|| format!("--set {pair:?}: expected KEY=VALUE"))?;
            cfg.set(key.trim(), value.trim()).with_context(|| format!("--set {pair}"))?;
        }
        let p = &mut cfg.pipeline;
        if let Some(n) = self.n {
            p.sample.n = n;
        }
        if let Some(k) = self.k {
            p.sample.k = k;
        }
        if let Some(s) = self.strategy {
            p.sample.strategy = s;
        }
        if let Some(k1) = self.k1 {
            p.bm25.k1 = k1;
        }
        if let Some(b) = self.b {
            p.bm25.b = b;
        }
        if let Some(j) = self.jobs {
            p.jobs = j;
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(dir) = &self.out_dir {
            cfg.paths.out_dir = Some(dir.clone());
        }
        absolutize(&mut cfg)?;
        Ok(cfg)
    }
}

/// Makes every set path absolute so the echoed config replays from any
/// working directory.
fn absolutize(cfg: &mut RunConfig) -> Result<()> {
    let p = &mut cfg.paths;
    for slot in [
        &mut p.source,
        &mut p.target_train,
        &mut p.target_test,
        &mut p.embeddings,
        &mut p.nouns,
        &mut p.stopwords,
        &mut p.out_dir,
    ] {
        if let Some(path) = slot.as_mut() {
            *path = std::path::absolute(&*path).with_context(|| format!("resolving {}", path.display()))?;
        }
    }
    Ok(())
}

pub fn required_path<'a>(cfg: &'a RunConfig, key: &str) -> Result<&'a Path> {
    match cfg.paths.get(key) {
        Some(p) => Ok(p),
        None => bail!("config key {key} is not set"),
    }
}

pub fn read_sentences(path: &Path) -> Result<Vec<SentenceRecord>> {
    read_jsonl(path).with_context(|| format!("reading sentence corpus {}", path.display()))
}

pub fn read_instances(path: &Path) -> Result<Vec<AspectInstance>> {
    read_jsonl(path).with_context(|| format!("reading aspect instances {}", path.display()))
}

/// The noun and stopword files when both are set, otherwise the bundled
/// lists.
pub fn lexicon(cfg: &RunConfig) -> Result<PosLexicon> {
    match (&cfg.paths.nouns, &cfg.paths.stopwords) {
        (Some(n), Some(s)) => PosLexicon::from_files(n, s, cfg.noun_suffixes.iter().cloned())
            .context("loading the noun lexicon"),
        (None, None) => {
            if cfg.noun_suffixes.iter().map(String::as_str).ne(DEFAULT_NOUN_SUFFIXES.iter().copied()) {
                log::warn!("noun_suffixes only applies to noun lists given via nouns/stopwords");
            }
            Ok(PosLexicon::bundled())
        }
        _ => bail!("nouns and stopwords must be set together"),
    }
}

pub fn embeddings(cfg: &RunConfig) -> Result<Option<EmbeddingTable>> {
    cfg.paths
        .embeddings
        .as_ref()
        .map(|p| EmbeddingTable::load(p).with_context(|| format!("loading embeddings {}", p.display())))
        .transpose()
}

/// Source corpus, training split, lexicon, embeddings, vocabulary and index.
pub fn prepare(cfg: &RunConfig) -> Result<PreparedData> {
    let source = read_sentences(required_path(cfg, "source")?)?;
    let target = read_instances(required_path(cfg, "target_train")?)?;
    let p = &cfg.pipeline;
    PreparedData::new(source, target, lexicon(cfg)?, embeddings(cfg)?, p.min_count, p.bm25)
        .context("preparing the training data")
}

pub fn single_seed(cfg: &RunConfig) -> u64 {
    cfg.seeds[0]
}
