use std::collections::{HashMap, HashSet};

use crate::corpus::{tokenize, SentenceRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidInput(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidInput(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    doc: usize,
    tf: u32,
}

/// Inverted index over a sentence corpus. Documents are addressed by their
/// position in the corpus.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    postings: HashMap<String, Vec<Posting>>,
    doc_len: Vec<u32>,
    avg_len: f64,
    docs: Vec<Vec<String>>,
}

impl Bm25Index {
    pub fn build(corpus: &[SentenceRecord], params: Bm25Params) -> Result<Self> {
        let mut seen = HashSet::with_capacity(corpus.len());
        for r in corpus {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Self::from_tokens(corpus.iter().map(|r| tokenize(&r.text)).collect(), params)
    }

    pub fn from_tokens(docs: Vec<Vec<String>>, params: Bm25Params) -> Result<Self> {
        params.validate()?;
        if docs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(docs.len());
        for (doc, tokens) in docs.iter().enumerate() {
            doc_len.push(tokens.len() as u32);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, tf) in tf {
                // Documents are visited in order, so every list stays sorted.
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc, tf });
            }
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_len = total as f64 / doc_len.len() as f64;
        Ok(Self {
            params,
            postings,
            doc_len,
            avg_len,
            docs,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn num_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_len(&self, doc: usize) -> Option<u32> {
        self.doc_len.get(doc).copied()
    }

    pub fn doc_tokens(&self, doc: usize) -> Option<&[String]> {
        self.docs.get(doc).map(Vec::as_slice)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn term_freq(&self, term: &str, doc: usize) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by_key(&doc, |p| p.doc)
                    .ok()
                    .map(|i| list[i].tf)
            })
            .unwrap_or(0)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.doc_freq(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, doc: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let len = self.doc_len[doc] as f64;
        idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len / self.avg_len))
    }

    /// Okapi BM25 of one document. Repeated query terms count once.
    pub fn score(&self, query: &[String], doc: usize) -> Result<f64> {
        if doc >= self.num_docs() {
            return Err(Error::UnknownDoc(doc));
        }
        let mut score = 0.0;
        for term in distinct(query) {
            let tf = self.term_freq(term, doc);
            if tf > 0 {
                score += self.term_weight(self.idf(term), tf, doc);
            }
        }
        Ok(score)
    }

    /// Scores of every document, accumulated term-at-a-time from postings.
    pub fn score_all(&self, query: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_docs()];
        for term in distinct(query) {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for p in list {
                scores[p.doc] += self.term_weight(idf, p.tf, p.doc);
            }
        }
        scores
    }
}

fn distinct(query: &[String]) -> impl Iterator<Item = &str> {
    let mut seen = HashSet::new();
    query
        .iter()
        .map(String::as_str)
        .filter(move |t| seen.insert(*t))
}

/// Top `n` documents by BM25, ties broken by ascending document index.
pub fn coarse_sample(query: &[String], index: &Bm25Index, n: usize) -> Vec<usize> {
    let scored = index
        .score_all(query)
        .into_iter()
        .enumerate()
        .map(|(d, s)| (s, d))
        .collect();
    super::top_n(scored, n)
}
