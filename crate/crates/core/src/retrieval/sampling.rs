use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;

use super::{coarse_sample, cosine, sentence_embedding, top_n, Bm25Index, EmbeddingTable};
use crate::corpus::{AspectInstance, SentenceRecord};
use crate::rng::SeedStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Uniform draw without replacement.
    Random,
    /// BM25 only.
    Coarse,
    /// BM25 followed by embedding reranking.
    Coarse2Fine,
}

impl Strategy {
    pub fn needs_embeddings(self) -> bool {
        self == Strategy::Coarse2Fine
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::Coarse => "coarse",
            Strategy::Coarse2Fine => "coarse2fine",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "coarse" => Ok(Strategy::Coarse),
            "coarse2fine" => Ok(Strategy::Coarse2Fine),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?} (expected random, coarse or coarse2fine)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    /// Coarse candidates per query.
    pub n: usize,
    /// Kept instances per query.
    pub k: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n: 500,
            k: 300,
            strategy: Strategy::Coarse2Fine,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k > self.n {
            return Err(Error::InvalidInput(format!(
                "sampling needs 1 <= k <= n, got n={} k={}",
                self.n, self.k
            )));
        }
        Ok(())
    }
}

/// Top `k` candidates by cosine similarity to `query_emb`, ties broken by
/// ascending document index.
pub fn fine_sample(
    query_emb: &[f64],
    candidates: &[usize],
    index: &Bm25Index,
    table: &EmbeddingTable,
    k: usize,
) -> Result<Vec<usize>> {
    let scored = candidates
        .iter()
        .map(|&doc| {
            let tokens = index.doc_tokens(doc).ok_or(Error::UnknownDoc(doc))?;
            let emb = sentence_embedding(tokens, table);
            Ok((cosine(query_emb, &emb)?, doc))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(top_n(scored, k))
}

/// Both stages of one query. `fine` is empty for the coarse strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub coarse: Vec<usize>,
    pub fine: Vec<usize>,
}

impl QueryResult {
    /// Documents contributed to the sampled set.
    pub fn selected(&self) -> &[usize] {
        if self.fine.is_empty() {
            &self.coarse
        } else {
            &self.fine
        }
    }
}

/// Runs the retrieval stages for one target sentence.
///
/// The coarse strategy keeps the BM25 top `k` so every strategy contributes
/// the same number of instances per query.
pub fn sample_query(
    query: &[String],
    cfg: &SampleConfig,
    index: &Bm25Index,
    table: Option<&EmbeddingTable>,
) -> Result<QueryResult> {
    match cfg.strategy {
        Strategy::Random => Err(Error::InvalidInput(
            "random sampling has no per-query stage".into(),
        )),
        Strategy::Coarse => Ok(QueryResult {
            coarse: coarse_sample(query, index, cfg.k),
            fine: Vec::new(),
        }),
        Strategy::Coarse2Fine => {
            let table = table.ok_or_else(|| {
                Error::InvalidInput("coarse2fine sampling needs an embedding table".into())
            })?;
            let coarse = coarse_sample(query, index, cfg.n);
            let query_emb = sentence_embedding(query, table);
            let fine = fine_sample(&query_emb, &coarse, index, table, cfg.k)?;
            Ok(QueryResult { coarse, fine })
        }
    }
}

/// Document indices of the sampled set, in a deterministic order: for the
/// retrieval strategies, first appearance across queries in target order;
/// for the random strategy, ascending index.
///
/// `jobs` threads process queries in parallel; results are merged in query
/// order so the output does not depend on `jobs`.
pub fn sample_doc_ids(
    target: &[AspectInstance],
    cfg: &SampleConfig,
    index: &Bm25Index,
    table: Option<&EmbeddingTable>,
    jobs: usize,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    if cfg.strategy == Strategy::Random {
        let total = index.num_docs();
        let amount = (cfg.k * target.len()).min(total);
        let mut rng = SeedStream::new(cfg.seed).rng("sample.random");
        let mut ids = index::sample(&mut rng, total, amount).into_vec();
        ids.sort_unstable();
        return Ok(ids);
    }
    if cfg.strategy.needs_embeddings() && table.is_none() {
        return Err(Error::InvalidInput(
            "coarse2fine sampling needs an embedding table".into(),
        ));
    }

    let run = |inst: &AspectInstance| sample_query(&inst.tokens, cfg, index, table);
    let per_query: Vec<QueryResult> = if jobs <= 1 {
        target.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| target.par_iter().map(run).collect::<Result<_>>())?
    };

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in &per_query {
        for &doc in r.selected() {
            if seen.insert(doc) {
                out.push(doc);
            }
        }
    }
    Ok(out)
}

/// The sampled sentence-level dataset (records cloned from `source`).
pub fn build_sampled_dataset(
    target: &[AspectInstance],
    source: &[SentenceRecord],
    cfg: &SampleConfig,
    index: &Bm25Index,
    table: Option<&EmbeddingTable>,
    jobs: usize,
) -> Result<Vec<SentenceRecord>> {
    if source.len() != index.num_docs() {
        return Err(Error::InvalidInput(format!(
            "index covers {} documents but the source corpus has {}",
            index.num_docs(),
            source.len()
        )));
    }
    Ok(sample_doc_ids(target, cfg, index, table, jobs)?
        .into_iter()
        .map(|d| source[d].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::retrieval::Bm25Params;

    fn corpus(texts: &[&str]) -> Vec<SentenceRecord> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| SentenceRecord::new(format!("d{i}"), *t, 0).unwrap())
            .collect()
    }

    fn target(texts: &[&str]) -> Vec<AspectInstance> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| AspectInstance::new(format!("t{i}"), tokenize(t), 0..1, 0, 3).unwrap())
            .collect()
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2).unwrap();
        for (w, v) in [
            ("good", [1.0, 0.2]),
            ("food", [0.9, 0.1]),
            ("bad", [-1.0, 0.3]),
            ("service", [0.1, 1.0]),
            ("screen", [0.0, -1.0]),
        ] {
            t.insert(w, v.to_vec()).unwrap();
        }
        t
    }

    const DOCS: [&str; 6] = [
        "good food",
        "bad service",
        "good service good food",
        "bad food",
        "screen good",
        "food food",
    ];

    #[test]
    fn config_validation() {
        let mut c = SampleConfig::default();
        assert_eq!((c.n, c.k), (500, 300));
        c.k = 0;
        assert!(c.validate().is_err());
        c.k = 501;
        assert!(c.validate().is_err());
        assert_eq!("coarse2fine".parse::<Strategy>().unwrap(), Strategy::Coarse2Fine);
        assert!("fine".parse::<Strategy>().is_err());
    }

    #[test]
    fn fine_is_subset_of_coarse() {
        let idx = Bm25Index::build(&corpus(&DOCS), Bm25Params::default()).unwrap();
        let t = table();
        let cfg = SampleConfig { n: 3, k: 2, strategy: Strategy::Coarse2Fine, seed: 0 };
        let r = sample_query(&tokenize("good food"), &cfg, &idx, Some(&t)).unwrap();
        assert_eq!(r.coarse.len(), 3);
        assert_eq!(r.fine.len(), 2);
        assert!(r.fine.iter().all(|d| r.coarse.contains(d)));

        let ids = sample_doc_ids(&target(&["good food"]), &cfg, &idx, Some(&t), 1).unwrap();
        assert_eq!(ids.len(), 2);
    }

    #[test]
    fn identical_candidate_ranks_first() {
        let idx = Bm25Index::build(&corpus(&DOCS), Bm25Params::default()).unwrap();
        let t = table();
        let q = sentence_embedding(&tokenize("bad service"), &t);
        let ranked = fine_sample(&q, &[0, 2, 1, 3], &idx, &t, 10).unwrap();
        assert_eq!(ranked[0], 1);
        assert_eq!(ranked.len(), 4);
    }

    #[test]
    fn union_is_deduplicated() {
        let idx = Bm25Index::build(&corpus(&DOCS), Bm25Params::default()).unwrap();
        let cfg = SampleConfig { n: 2, k: 2, strategy: Strategy::Coarse, seed: 0 };
        let td = target(&["bad service", "bad food"]);
        let a = sample_query(&td[0].tokens, &cfg, &idx, None).unwrap().coarse;
        let b = sample_query(&td[1].tokens, &cfg, &idx, None).unwrap().coarse;
        let union: HashSet<usize> = a.iter().chain(&b).copied().collect();
        assert!(a.iter().any(|d| b.contains(d)), "queries should overlap: {a:?} {b:?}");
        let ids = sample_doc_ids(&td, &cfg, &idx, None, 1).unwrap();
        assert_eq!(ids.len(), union.len());
    }

    #[test]
    fn random_strategy_size_and_determinism() {
        let sd = corpus(&DOCS);
        let idx = Bm25Index::build(&sd, Bm25Params::default()).unwrap();
        let cfg = SampleConfig { n: 2, k: 2, strategy: Strategy::Random, seed: 9 };
        let td = target(&["good food", "bad"]);
        let a = build_sampled_dataset(&td, &sd, &cfg, &idx, None, 1).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, build_sampled_dataset(&td, &sd, &cfg, &idx, None, 4).unwrap());
        let big = SampleConfig { k: 2, ..cfg };
        let td3 = target(&["a", "b", "c", "d"]);
        assert_eq!(sample_doc_ids(&td3, &big, &idx, None, 1).unwrap().len(), 6);
    }

    #[test]
    fn coarse2fine_requires_table() {
        let sd = corpus(&DOCS);
        let idx = Bm25Index::build(&sd, Bm25Params::default()).unwrap();
        let cfg = SampleConfig { n: 3, k: 2, strategy: Strategy::Coarse2Fine, seed: 0 };
        assert!(sample_doc_ids(&target(&["good"]), &cfg, &idx, None, 1).is_err());
    }

    #[test]
    fn parallel_merge_matches_sequential() {
        let sd = corpus(&DOCS);
        let idx = Bm25Index::build(&sd, Bm25Params::default()).unwrap();
        let t = table();
        let td = target(&["good food", "bad service", "screen", "food", "good", "bad food"]);
        let cfg = SampleConfig { n: 4, k: 2, strategy: Strategy::Coarse2Fine, seed: 0 };
        let seq = sample_doc_ids(&td, &cfg, &idx, Some(&t), 1).unwrap();
        for jobs in [2, 3, 8] {
            assert_eq!(seq, sample_doc_ids(&td, &cfg, &idx, Some(&t), jobs).unwrap());
        }
    }
}
