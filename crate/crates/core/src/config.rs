//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. Every key has a default, so a
//! file only lists what it changes; [`RunConfig::to_text`] writes every key
//! and parses back to the same configuration.

use std::path::{Path, PathBuf};

use crate::corpus::DEFAULT_NOUN_SUFFIXES;
use crate::eval::Variance;
use crate::training::PipelineConfig;
use crate::{Error, Result};

/// Input and output locations. Unset paths are `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Paths {
    pub source: Option<PathBuf>,
    pub target_train: Option<PathBuf>,
    pub target_test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

const PATH_KEYS: [&str; 7] = ["source", "target_train", "target_test", "embeddings", "nouns", "stopwords", "out_dir"];

impl Paths {
    fn slot(&mut self, key: &str) -> Option<&mut Option<PathBuf>> {
        Some(match key {
            "source" => &mut self.source,
            "target_train" => &mut self.target_train,
            "target_test" => &mut self.target_test,
            "embeddings" => &mut self.embeddings,
            "nouns" => &mut self.nouns,
            "stopwords" => &mut self.stopwords,
            "out_dir" => &mut self.out_dir,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<&Path> {
        match key {
            "source" => self.source.as_deref(),
            "target_train" => self.target_train.as_deref(),
            "target_test" => self.target_test.as_deref(),
            "embeddings" => self.embeddings.as_deref(),
            "nouns" => self.nouns.as_deref(),
            "stopwords" => self.stopwords.as_deref(),
            "out_dir" => self.out_dir.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub paths: Paths,
    pub pipeline: PipelineConfig,
    pub noun_suffixes: Vec<String>,
    pub seeds: Vec<u64>,
    pub variance: Variance,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            pipeline: PipelineConfig::default(),
            noun_suffixes: DEFAULT_NOUN_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            seeds: vec![1, 2, 3, 4, 5],
            variance: Variance::Pooled,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses `text` on top of the defaults. Relative paths are resolved
    /// against `base` when given.
    pub fn parse_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", i + 1)));
            }
            cfg.set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        if let Some(base) = base {
            for key in PATH_KEYS {
                let slot = cfg.paths.slot(key).expect("known path key");
                if let Some(p) = slot.as_mut() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path.parent())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(slot) = self.paths.slot(key) {
            *slot = if value.is_empty() { None } else { Some(PathBuf::from(value)) };
            return Ok(());
        }
        let p = &mut self.pipeline;
        match key {
            "sample.n" => p.sample.n = parse(key, value)?,
            "sample.k" => p.sample.k = parse(key, value)?,
            "sample.strategy" => p.sample.strategy = parse(key, value)?,
            "bm25.k1" => p.bm25.k1 = parse(key, value)?,
            "bm25.b" => p.bm25.b = parse(key, value)?,
            "jobs" => p.jobs = parse(key, value)?,
            "model.embed_dim" => p.model.embed_dim = parse(key, value)?,
            "model.kernel_widths" => p.model.kernel_widths = list(key, value)?,
            "model.filters" => p.model.filters = parse(key, value)?,
            "model.num_classes" => p.model.num_classes = parse(key, value)?,
            "model.dropout" => p.model.dropout = parse(key, value)?,
            "model.trainable_embedding" => p.model.trainable_embedding = parse(key, value)?,
            "stage1.epochs" => p.stage1.epochs = parse(key, value)?,
            "stage1.batch_size" => p.stage1.batch_size = parse(key, value)?,
            "stage1.lr" => p.stage1.lr = parse(key, value)?,
            "stage2.epochs" => p.guidance.stage.epochs = parse(key, value)?,
            "stage2.batch_size" => p.guidance.stage.batch_size = parse(key, value)?,
            "stage2.lr" => p.guidance.stage.lr = parse(key, value)?,
            "stage2.beta" => p.guidance.beta = parse(key, value)?,
            "stage2.alpha" => p.guidance.alpha = parse(key, value)?,
            "stage2.epoch_origin" => p.guidance.origin = parse(key, value)?,
            "stage3.epochs" => p.stage3.epochs = parse(key, value)?,
            "stage3.batch_size" => p.stage3.batch_size = parse(key, value)?,
            "stage3.lr" => p.stage3.lr = parse(key, value)?,
            "components" => p.components = parse(key, value)?,
            "vocab.min_count" => p.min_count = parse(key, value)?,
            "noun_suffixes" => self.noun_suffixes = list(key, value)?,
            "seeds" => self.seeds = list(key, value)?,
            "variance" => {
                self.variance = match value {
                    "pooled" => Variance::Pooled,
                    "welch" => Variance::Welch,
                    _ => return Err(Error::Config(format!("variance = {value:?}: expected pooled or welch"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, paths first.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = PATH_KEYS
            .iter()
            .map(|k| {
                let v = self.paths.get(k).map(|p| p.display().to_string()).unwrap_or_default();
                (k.to_string(), v)
            })
            .collect();
        out.extend(self.pipeline.echo());
        out.push(("jobs".into(), self.pipeline.jobs.to_string()));
        out.push(("noun_suffixes".into(), self.noun_suffixes.join(",")));
        out.push(("seeds".into(), join(&self.seeds)));
        out.push((
            "variance".into(),
            match self.variance {
                Variance::Pooled => "pooled",
                Variance::Welch => "welch",
            }
            .into(),
        ));
        out
    }

    pub fn to_text(&self) -> String {
        self.echo().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Checks the hyperparameters, the seed list, and that every path in
    /// `required` is set and every set input path exists.
    pub fn validate(&self, required: &[&str]) -> Result<()> {
        self.pipeline.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must list at least one seed".into()));
        }
        if self.pipeline.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        for key in required {
            if self.paths.get(key).is_none() {
                return Err(Error::Config(format!("missing required path {key}")));
            }
        }
        if self.pipeline.sample.strategy.needs_embeddings()
            && self.pipeline.components.pretrain
            && required.contains(&"source")
            && self.paths.embeddings.is_none()
        {
            return Err(Error::Config(
                "sample.strategy = coarse2fine needs an embeddings path".into(),
            ));
        }
        for key in PATH_KEYS.iter().filter(|k| **k != "out_dir") {
            if let Some(p) = self.paths.get(key) {
                if !p.exists() {
                    return Err(Error::Config(format!("{key} = {}: no such file", p.display())));
                }
            }
        }
        Ok(())
    }
}
