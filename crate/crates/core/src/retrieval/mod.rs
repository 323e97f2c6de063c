//! Coarse-to-fine sampling of target-related sentences.
//!
//! Each target sentence is used as a query: BM25 picks the `n` best source
//! sentences, then those candidates are reranked by cosine similarity of
//! mean-pooled word embeddings and the top `k` are kept. The union over all
//! queries, de-duplicated, forms the sampled pretraining set.

mod bm25;
mod embedding;
mod sampling;

pub use bm25::{coarse_sample, Bm25Index, Bm25Params};
pub use embedding::{cosine, sentence_embedding, EmbeddingTable};
pub use sampling::{
    build_sampled_dataset, fine_sample, sample_doc_ids, sample_query, QueryResult, SampleConfig,
    Strategy,
};

/// Orders `(score, doc)` pairs by descending score, then ascending doc index.
pub(crate) fn rank_order(a: (f64, usize), b: (f64, usize)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Top `n` of `scored` under [`rank_order`], returned in rank order.
pub(crate) fn top_n(mut scored: Vec<(f64, usize)>, n: usize) -> Vec<usize> {
    let n = n.min(scored.len());
    if n == 0 {
        return Vec::new();
    }
    if n < scored.len() {
        scored.select_nth_unstable_by(n - 1, |a, b| rank_order(*a, *b));
        scored.truncate(n);
    }
    scored.sort_unstable_by(|a, b| rank_order(*a, *b));
    scored.into_iter().map(|(_, d)| d).collect()
}
