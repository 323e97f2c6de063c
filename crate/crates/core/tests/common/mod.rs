//! Oracles shared by the integration tests. Nothing here calls into the
//! gradient or statistics code it is used to check.
#![allow(dead_code)]

use uika_core::corpus::Vocabulary;
use uika_core::model::{init_params, Example, ModelConfig, ParamSet};
use uika_core::rng::SeedStream;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
/// Gradients smaller than this in magnitude are compared absolutely, since
/// central differences carry ~1e-11 of round-off at this step size.
pub const ABS_FLOOR: f64 = 1e-7;

/// The tiny model: vocabulary of 20 (18 words plus the two reserved ids),
/// embedding dimension 8, a single kernel width.
pub fn tiny_model(num_classes: usize, seed: u64) -> (ModelConfig, ParamSet, Vec<Example>) {
    let words: Vec<String> = (0..18).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::build(std::iter::once(words.as_slice()), 1);
    assert_eq!(vocab.len(), 20);
    let cfg = ModelConfig {
        embed_dim: 8,
        kernel_widths: vec![3],
        filters: 4,
        num_classes,
        dropout: 0.2,
        trainable_embedding: true,
    };
    let params = init_params(&cfg, &vocab, None, &mut SeedStream::new(seed).rng("init")).unwrap();
    let batch = vec![
        Example { ids: vec![2, 3, 4, 5, 6, 7], span: 1..3, label: 0 },
        Example { ids: vec![8, 9], span: 0..1, label: 1 % num_classes },
        Example { ids: vec![10, 11, 1, 12, 13, 14, 15, 16], span: 4..5, label: num_classes - 1 },
        Example { ids: vec![17, 18, 19, 2], span: 2..4, label: 0 },
    ];
    (cfg, params, batch)
}

pub struct GradReport {
    pub checked: usize,
    pub worst_rel: f64,
    pub worst_name: String,
    pub failures: Vec<String>,
}

/// Compares `analytic` against central differences of `loss` for every
/// value of every tensor in `params`.
pub fn finite_difference_check<F>(params: &ParamSet, analytic: &ParamSet, mut loss: F) -> GradReport
where
    F: FnMut(&ParamSet) -> f64,
{
    let mut report = GradReport {
        checked: 0,
        worst_rel: 0.0,
        worst_name: String::new(),
        failures: Vec::new(),
    };
    let names: Vec<String> = params.names().map(String::from).collect();
    for name in names {
        let n = params.get(&name).unwrap().len();
        let g = analytic
            .get(&name)
            .unwrap_or_else(|| panic!("no analytic gradient for {name}"));
        for i in 0..n {
            let mut plus = params.clone();
            plus.get_mut(&name).unwrap().data_mut()[i] += FD_STEP;
            let mut minus = params.clone();
            minus.get_mut(&name).unwrap().data_mut()[i] -= FD_STEP;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
            let an = g.data()[i];
            let scale = an.abs().max(fd.abs()).max(ABS_FLOOR);
            let rel = (an - fd).abs() / scale;
            report.checked += 1;
            if rel > report.worst_rel {
                report.worst_rel = rel;
                report.worst_name = format!("{name}[{i}]");
            }
            if rel >= REL_TOL {
                report
                    .failures
                    .push(format!("{name}[{i}]: analytic {an:e} vs fd {fd:e} (rel {rel:e})"));
            }
        }
    }
    report
}

/// Two-sided Student-t tail probability by Simpson quadrature. With
/// `x = sqrt(df) tan(theta)` the density becomes proportional to
/// `cos(theta)^(df - 1)` on `[0, pi/2)`, so the normalizing constant is
/// itself a quadrature and no gamma function is involved.
pub fn t_two_sided_p_quadrature(t: f64, df: f64) -> f64 {
    let theta0 = (t.abs() / df.sqrt()).atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let f = |th: f64| th.cos().powf(df - 1.0);
    simpson(f, theta0, half_pi, 20_000) / simpson(f, 0.0, half_pi, 20_000)
}

pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Pooled two-sample t statistic and degrees of freedom, from the textbook formula.
pub fn pooled_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let ss = |x: &[f64]| {
        let mu = m(x);
        x.iter().map(|v| (v - mu).powi(2)).sum::<f64>()
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let sp2 = (ss(a) + ss(b)) / df;
    ((m(a) - m(b)) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
}

/// Welch statistic and Welch-Satterthwaite degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64]| {
        let mu = m(x);
        x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
    };
    let (qa, qb) = (var(a) / a.len() as f64, var(b) / b.len() as f64);
    let df = (qa + qb).powi(2) / (qa * qa / (a.len() as f64 - 1.0) + qb * qb / (b.len() as f64 - 1.0));
    ((m(a) - m(b)) / (qa + qb).sqrt(), df)
}

/// Random corpus over a Zipf-skewed vocabulary `t0..t{vocab-1}`, so that
/// frequent terms, repeated terms and exact score ties all occur.
pub fn random_docs<R: rand::Rng>(rng: &mut R, docs: usize, vocab: usize, max_len: usize) -> Vec<Vec<String>> {
    (0..docs)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            (0..len).map(|_| zipf_token(rng, vocab)).collect()
        })
        .collect()
}

pub fn zipf_token<R: rand::Rng>(rng: &mut R, vocab: usize) -> String {
    let u: f64 = rng.gen_range(0.0..1.0);
    let id = ((vocab as f64 + 1.0).powf(u) - 1.0).floor() as usize;
    format!("t{}", id.min(vocab - 1))
}

/// Embedding table covering roughly 80% of the vocabulary.
pub fn random_table<R: rand::Rng>(rng: &mut R, vocab: usize, dim: usize) -> uika_core::retrieval::EmbeddingTable {
    let mut t = uika_core::retrieval::EmbeddingTable::new(dim).unwrap();
    for i in 0..vocab {
        if rng.gen_range(0.0..1.0) < 0.8 {
            t.insert(format!("t{i}"), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        }
    }
    t
}

fn descending_then_index(scored: &mut [(f64, usize)]) {
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
}

/// Okapi BM25 by direct counting over the raw documents, all documents
/// sorted, first `n` kept.
pub fn oracle_bm25_top(docs: &[Vec<String>], query: &[String], n: usize, k1: f64, b: f64) -> Vec<usize> {
    let num = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / num;
    let mut terms: Vec<&String> = Vec::new();
    for q in query {
        if !terms.contains(&q) {
            terms.push(q);
        }
    }
    let dfs: Vec<f64> = terms
        .iter()
        .map(|t| docs.iter().filter(|x| x.contains(t)).count() as f64)
        .collect();
    let mut scored: Vec<(f64, usize)> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut s = 0.0;
            for (t, &df) in terms.iter().zip(&dfs) {
                let tf = d.iter().filter(|w| w == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = ((num - df + 0.5) / (df + 0.5) + 1.0).ln();
                s += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg));
            }
            (s, i)
        })
        .collect();
    descending_then_index(&mut scored);
    scored.into_iter().take(n).map(|p| p.1).collect()
}

fn mean_vector(tokens: &[String], table: &uika_core::retrieval::EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim()];
    let mut c = 0;
    for t in tokens {
        if let Some(v) = table.get(t) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            c += 1;
        }
    }
    if c > 0 {
        for s in &mut sum {
            *s /= c as f64;
        }
    }
    sum
}

/// Cosine reranking of `candidates` by brute force.
pub fn oracle_fine(
    docs: &[Vec<String>],
    table: &uika_core::retrieval::EmbeddingTable,
    query: &[String],
    candidates: &[usize],
    k: usize,
) -> Vec<usize> {
    let q = mean_vector(query, table);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&d| {
            let v = mean_vector(&docs[d], table);
            let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            let (nq, nv) = (norm(&q), norm(&v));
            (if nq == 0.0 || nv == 0.0 { 0.0 } else { dot / (nq * nv) }, d)
        })
        .collect();
    descending_then_index(&mut scored);
    scored.into_iter().take(k).map(|p| p.1).collect()
}
