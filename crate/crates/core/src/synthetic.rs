//! Generator for a two-domain benchmark with a known domain shift.
//!
//! The source corpus mixes an electronics domain (the target domain) and a
//! restaurant domain. Both share one sentiment lexicon whose word
//! frequencies follow a Zipf law, so rare sentiment words are seen often
//! only in the large source corpus. A share of the lexicon flips polarity in
//! the restaurant domain, which makes off-domain source data harmful.
//! The embedding table places words in domain and role clusters but carries
//! no polarity information.

use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{aspect_label, sentence_label, write_jsonl, AspectInstance, PosLexicon, SentenceRecord};
use crate::model::ModelConfig;
use crate::retrieval::{EmbeddingTable, SampleConfig, Strategy};
use crate::rng::{Rng, SeedStream};
use crate::training::{Components, GuidanceConfig, PipelineConfig, StageConfig};
use crate::{Error, Result};

const POSITIVE: &[&str] = &[
    "good", "great", "excellent", "superb", "amazing", "fantastic", "wonderful", "awesome", "perfect",
    "lovely", "brilliant", "solid", "reliable", "impressive", "outstanding", "terrific", "superior",
    "flawless", "stellar", "sturdy", "crisp", "smooth", "pleasant", "delightful", "fabulous", "splendid",
    "marvelous", "exceptional", "remarkable", "admirable", "elegant", "handy", "sleek", "nifty", "snappy",
    "stunning", "neat", "tidy", "charming", "sublime",
];
const NEGATIVE: &[&str] = &[
    "bad", "terrible", "awful", "horrible", "poor", "useless", "broken", "flimsy", "cheap", "faulty",
    "defective", "mediocre", "disappointing", "annoying", "dreadful", "lousy", "shoddy", "sluggish",
    "noisy", "clunky", "buggy", "unreliable", "inferior", "atrocious", "abysmal", "pathetic", "dismal",
    "subpar", "crappy", "frustrating", "miserable", "nasty", "lame", "weak", "unstable", "laggy",
    "grainy", "dull", "bland", "greasy",
];
/// Real words that flip polarity between the domains, as
/// `(positive in electronics, negative in electronics)` pairs.
const FLIP_PAIRS: &[(&str, &str)] = &[("long", "cold"), ("loud", "soft"), ("thin", "heavy"), ("light", "hot")];
/// Lexicon rank of the first real flip pair.
const FLIP_PAIR_RANK: usize = 10;
const NEUTRAL: &[&str] = &[
    "black", "silver", "standard", "new", "usual", "plain", "regular", "typical", "ordinary", "basic",
];
const STOPWORDS: &[&str] = &[
    "the", "is", "a", "and", "but", "it", "was", "this", "i", "my", "very", "really", "quite", "both",
    "so", "too",
];
const ADVERBS: &[&str] = &["very", "really", "quite", "so", "too"];
const PUNCT: &[&str] = &[".", ",", "!"];

const ELECTRONICS_NOUNS: &[&str] = &[
    "battery", "screen", "keyboard", "charger", "speaker", "camera", "laptop", "phone", "tablet",
    "headphones", "mouse", "monitor", "cable", "case", "processor", "memory", "touchpad", "webcam",
    "microphone", "display", "router", "adapter", "remote", "firmware",
];
const ELECTRONICS_COMPOUNDS: &[&str] = &["battery life", "sound quality", "screen resolution", "build quality"];
const RESTAURANT_NOUNS: &[&str] = &[
    "food", "waiter", "pizza", "pasta", "soup", "salad", "steak", "dessert", "coffee", "menu", "table",
    "chef", "burger", "sushi", "bread", "sauce", "wine", "noodles", "fries", "portion", "patio",
    "bartender", "broth", "curry",
];
const RESTAURANT_COMPOUNDS: &[&str] = &["wait time", "dining room", "house wine", "lunch special"];
const ELECTRONICS_CONTEXT: &[&str] = &[
    "charges", "boots", "connects", "streams", "syncs", "loads", "updates", "pairs", "renders", "installs",
    "shipped", "runs",
];
const RESTAURANT_CONTEXT: &[&str] = &[
    "tastes", "served", "cooked", "ordered", "seasoned", "baked", "grilled", "plated", "smells", "poured",
    "arrived", "simmered",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    Electronics,
    Restaurant,
}

impl Domain {
    fn tag(self) -> &'static str {
        match self {
            Domain::Electronics => "elec",
            Domain::Restaurant => "rest",
        }
    }

    fn nouns(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Domain::Electronics => (ELECTRONICS_NOUNS, ELECTRONICS_COMPOUNDS),
            Domain::Restaurant => (RESTAURANT_NOUNS, RESTAURANT_COMPOUNDS),
        }
    }

    fn context(self) -> &'static [&'static str] {
        match self {
            Domain::Electronics => ELECTRONICS_CONTEXT,
            Domain::Restaurant => RESTAURANT_CONTEXT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Source sentences per domain.
    pub source_per_domain: usize,
    pub target_train: usize,
    pub target_test: usize,
    /// Share of target instances built from two contrasting clauses.
    pub two_clause: f64,
    /// Share of target instances that are neutral.
    pub neutral: f64,
    /// Share of lexicon ranks whose words flip polarity between domains.
    pub flip: f64,
    /// Sentiment words per polarity, real words first, then generated ones.
    pub lexicon_size: usize,
    /// Zipf exponent of the shared sentiment lexicon.
    pub zipf: f64,
    pub embed_dim: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            source_per_domain: 3000,
            target_train: 600,
            target_test: 200,
            two_clause: 0.25,
            neutral: 0.2,
            flip: 0.75,
            lexicon_size: 150,
            zipf: 1.0,
            embed_dim: 16,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("two_clause", self.two_clause), ("neutral", self.neutral), ("flip", self.flip)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("synthetic {name} share {v} outside [0, 1]")));
            }
        }
        if self.source_per_domain == 0 || self.target_train == 0 || self.target_test == 0 {
            return Err(Error::Config("synthetic corpus sizes must be positive".into()));
        }
        if self.lexicon_size < FLIP_PAIR_RANK + FLIP_PAIRS.len() || self.lexicon_size > 2000 {
            return Err(Error::Config(format!(
                "synthetic lexicon_size {} outside {}..=2000",
                self.lexicon_size,
                FLIP_PAIR_RANK + FLIP_PAIRS.len()
            )));
        }
        if self.embed_dim == 0 || self.zipf.is_nan() || self.zipf < 0.0 {
            return Err(Error::Config("synthetic embed_dim must be positive and zipf >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    pub source: Vec<SentenceRecord>,
    pub target_train: Vec<AspectInstance>,
    pub target_test: Vec<AspectInstance>,
    pub nouns: Vec<String>,
    pub stopwords: Vec<String>,
    pub table: EmbeddingTable,
}

/// Paths written by [`SyntheticBenchmark::write`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFiles {
    pub source: PathBuf,
    pub target_train: PathBuf,
    pub target_test: PathBuf,
    pub embeddings: PathBuf,
    pub nouns: PathBuf,
    pub stopwords: PathBuf,
}

/// Rank-paired sentiment words: `positive[r]` and `negative[r]` share a
/// frequency, and `flips[r]` swaps their polarity in the restaurant domain.
#[derive(Debug, Clone)]
struct Lexicon {
    positive: Vec<String>,
    negative: Vec<String>,
    flips: Vec<bool>,
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gl", "tr", "sk"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "n", "r", "l", "x", "m"];

impl Lexicon {
    fn build(cfg: &SyntheticConfig, rng: &mut Rng, taken: &[&str]) -> Self {
        let mut used: std::collections::HashSet<String> = taken.iter().map(|s| s.to_string()).collect();
        let mut fill = |real: &[&str], rng: &mut Rng| -> Vec<String> {
            let mut out: Vec<String> = real.iter().take(cfg.lexicon_size).map(|s| s.to_string()).collect();
            while out.len() < cfg.lexicon_size {
                let syllables = rng.gen_range(2..=3);
                let mut w = String::new();
                for _ in 0..syllables {
                    w.push_str(ONSETS.choose(rng).unwrap());
                    w.push_str(VOWELS.choose(rng).unwrap());
                }
                w.push_str(CODAS.choose(rng).unwrap());
                if used.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };
        let mut positive = fill(POSITIVE, rng);
        let mut negative = fill(NEGATIVE, rng);
        let mut flips: Vec<bool> = (0..cfg.lexicon_size)
            .map(|r| r >= FLIP_PAIR_RANK + FLIP_PAIRS.len() && rng.gen::<f64>() < cfg.flip)
            .collect();
        for (i, (p, n)) in FLIP_PAIRS.iter().enumerate() {
            let r = FLIP_PAIR_RANK + i;
            positive.insert(r, p.to_string());
            negative.insert(r, n.to_string());
            flips.insert(r, true);
        }
        positive.truncate(cfg.lexicon_size);
        negative.truncate(cfg.lexicon_size);
        flips.truncate(cfg.lexicon_size);
        Lexicon { positive, negative, flips }
    }

    fn words(&self) -> impl Iterator<Item = &str> {
        self.positive.iter().chain(&self.negative).map(String::as_str)
    }

    /// Word at `rank` expressing `positive` sentiment in `domain`.
    fn word(&self, rank: usize, positive: bool, domain: Domain) -> &str {
        let swapped = domain == Domain::Restaurant && self.flips[rank];
        if positive != swapped {
            &self.positive[rank]
        } else {
            &self.negative[rank]
        }
    }
}

struct Generator {
    cfg: SyntheticConfig,
    rng: Rng,
    zipf: WeightedIndex<f64>,
    lexicon: Lexicon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Positive,
    Neutral,
    Negative,
}

impl Polarity {
    fn aspect_label(self) -> u8 {
        match self {
            Polarity::Positive => aspect_label::POSITIVE,
            Polarity::Neutral => aspect_label::NEUTRAL,
            Polarity::Negative => aspect_label::NEGATIVE,
        }
    }

    fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            Polarity::Neutral => Polarity::Neutral,
        }
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

impl Generator {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.rng).expect("non-empty word list")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    fn noun(&mut self, domain: Domain) -> Vec<String> {
        let (single, compound) = domain.nouns();
        if self.chance(0.15) {
            words(self.pick(compound))
        } else {
            vec![self.pick(single).to_string()]
        }
    }

    fn sentiment(&mut self, domain: Domain, polarity: Polarity) -> String {
        match polarity {
            Polarity::Neutral => self.pick(NEUTRAL).to_string(),
            _ => {
                let rank = self.zipf.sample(&mut self.rng);
                self.lexicon
                    .word(rank, polarity == Polarity::Positive, domain)
                    .to_string()
            }
        }
    }

    fn maybe_adverb(&mut self, out: &mut Vec<String>) {
        if self.chance(0.3) {
            out.push(self.pick(ADVERBS).to_string());
        }
    }

    /// A clause `the <noun> [ctx] is [adv] <word>`, returning the token range of the noun.
    fn clause(&mut self, domain: Domain, polarity: Polarity, out: &mut Vec<String>) -> std::ops::Range<usize> {
        out.push("the".into());
        let start = out.len();
        out.extend(self.noun(domain));
        let span = start..out.len();
        if self.chance(0.3) {
            out.push(self.pick(domain.context()).to_string());
            out.push("and".into());
            out.push("it".into());
        }
        out.push("is".into());
        self.maybe_adverb(out);
        out.push(self.sentiment(domain, polarity));
        span
    }

    fn end(&mut self, out: &mut Vec<String>) {
        out.push(if self.chance(0.2) { "!" } else { "." }.into());
    }

    fn source_sentence(&mut self, domain: Domain, polarity: Polarity) -> Vec<String> {
        let mut t = Vec::new();
        match self.rng.gen_range(0..10) {
            0..=4 => {
                self.clause(domain, polarity, &mut t);
            }
            5 | 6 => {
                t.push(self.sentiment(domain, polarity));
                t.extend(self.noun(domain));
                t.push(",".into());
                t.push(self.pick(domain.context()).to_string());
                self.maybe_adverb(&mut t);
                t.push(self.sentiment(domain, polarity));
            }
            7 | 8 => {
                self.clause(domain, polarity, &mut t);
                t.push("and".into());
                self.clause(domain, polarity, &mut t);
            }
            _ => {
                t.extend(words("it was"));
                self.maybe_adverb(&mut t);
                t.push(self.sentiment(domain, polarity));
            }
        }
        self.end(&mut t);
        t
    }

    fn target_instance(&mut self, two_clause: bool, polarity: Polarity) -> (Vec<String>, std::ops::Range<usize>) {
        let domain = Domain::Electronics;
        let mut t = Vec::new();
        if two_clause {
            let other = match polarity {
                Polarity::Neutral => {
                    if self.chance(0.5) {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    }
                }
                p => {
                    if self.chance(0.25) {
                        Polarity::Neutral
                    } else {
                        p.opposite()
                    }
                }
            };
            let first = self.chance(0.5);
            let (p1, p2) = if first { (polarity, other) } else { (other, polarity) };
            let s1 = self.clause(domain, p1, &mut t);
            t.push("but".into());
            let s2 = self.clause(domain, p2, &mut t);
            self.end(&mut t);
            (t, if first { s1 } else { s2 })
        } else {
            let span = if self.chance(0.25) && polarity != Polarity::Neutral {
                t.push(self.sentiment(domain, polarity));
                let start = t.len();
                t.extend(self.noun(domain));
                start..t.len()
            } else {
                self.clause(domain, polarity, &mut t)
            };
            self.end(&mut t);
            (t, span)
        }
    }

    fn target_polarity(&mut self) -> Polarity {
        if self.chance(self.cfg.neutral) {
            Polarity::Neutral
        } else if self.chance(0.5) {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

fn all_words(lexicon: &Lexicon) -> Vec<(&str, &'static str)> {
    let mut out: Vec<(&str, &'static str)> = Vec::new();
    let mut add = |group: &'static str, ws: &[&'static str]| {
        for w in ws {
            for piece in w.split_whitespace() {
                if !out.iter().any(|(x, _)| *x == piece) {
                    out.push((piece, group));
                }
            }
        }
    };
    add("elec", ELECTRONICS_NOUNS);
    add("elec", ELECTRONICS_COMPOUNDS);
    add("elec", ELECTRONICS_CONTEXT);
    add("rest", RESTAURANT_NOUNS);
    add("rest", RESTAURANT_COMPOUNDS);
    add("rest", RESTAURANT_CONTEXT);
    add("neutral", NEUTRAL);
    add("function", STOPWORDS);
    add("function", PUNCT);
    for w in lexicon.words() {
        out.push((w, "sentiment"));
    }
    out
}

fn embedding_table(dim: usize, lexicon: &Lexicon, rng: &mut Rng) -> Result<EmbeddingTable> {
    let groups = ["elec", "rest", "sentiment", "neutral", "function"];
    let centers: Vec<Vec<f64>> = groups
        .iter()
        .map(|_| (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect())
        .collect();
    let mut table = EmbeddingTable::new(dim)?;
    for (word, group) in all_words(lexicon) {
        let c = &centers[groups.iter().position(|g| *g == group).expect("known group")];
        table.insert(word, c.iter().map(|x| x + rng.gen_range(-0.2..0.2)).collect())?;
    }
    Ok(table)
}

impl SyntheticBenchmark {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self> {
        cfg.validate()?;
        let seeds = SeedStream::new(cfg.seed).child("synthetic");
        let taken: Vec<&str> = [
            ELECTRONICS_NOUNS,
            ELECTRONICS_CONTEXT,
            RESTAURANT_NOUNS,
            RESTAURANT_CONTEXT,
            NEUTRAL,
            STOPWORDS,
            ADVERBS,
            POSITIVE,
            NEGATIVE,
        ]
        .concat()
        .into_iter()
        .chain(ELECTRONICS_COMPOUNDS.iter().chain(RESTAURANT_COMPOUNDS).flat_map(|c| c.split_whitespace()))
        .chain(FLIP_PAIRS.iter().flat_map(|p| [p.0, p.1]))
        .collect();
        let lexicon = Lexicon::build(cfg, &mut seeds.rng("lexicon"), &taken);
        let weights: Vec<f64> = (0..cfg.lexicon_size)
            .map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf))
            .collect();
        let zipf = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
        let mut g = Generator {
            cfg: cfg.clone(),
            rng: seeds.rng("source"),
            zipf,
            lexicon,
        };

        let mut source = Vec::with_capacity(2 * cfg.source_per_domain);
        for i in 0..2 * cfg.source_per_domain {
            let domain = if i % 2 == 0 { Domain::Electronics } else { Domain::Restaurant };
            let positive = g.chance(0.5);
            let polarity = if positive { Polarity::Positive } else { Polarity::Negative };
            let label = if positive { sentence_label::POSITIVE } else { sentence_label::NEGATIVE };
            let text = g.source_sentence(domain, polarity).join(" ");
            source.push(SentenceRecord::new(format!("{}-{i:05}", domain.tag()), text, label)?);
        }

        let target = |name: &str, n: usize, g: &mut Generator| -> Result<Vec<AspectInstance>> {
            g.rng = seeds.rng(name);
            (0..n)
                .map(|i| {
                    let polarity = g.target_polarity();
                    let two = g.chance(g.cfg.two_clause);
                    let (tokens, span) = g.target_instance(two, polarity);
                    AspectInstance::new(format!("{name}-{i:04}"), tokens, span, polarity.aspect_label(), 3)
                })
                .collect()
        };
        let target_train = target("train", cfg.target_train, &mut g)?;
        let target_test = target("test", cfg.target_test, &mut g)?;

        let mut nouns: Vec<String> = [ELECTRONICS_NOUNS, ELECTRONICS_COMPOUNDS, RESTAURANT_NOUNS, RESTAURANT_COMPOUNDS]
            .concat()
            .iter()
            .flat_map(|w| w.split_whitespace().map(String::from))
            .collect();
        nouns.sort();
        nouns.dedup();
        let table = embedding_table(cfg.embed_dim, &g.lexicon, &mut seeds.rng("embeddings"))?;
        Ok(SyntheticBenchmark {
            source,
            target_train,
            target_test,
            nouns,
            stopwords: STOPWORDS.iter().map(|s| s.to_string()).collect(),
            table,
        })
    }

    pub fn lexicon(&self) -> Result<PosLexicon> {
        PosLexicon::new(self.nouns.iter().cloned(), Vec::<String>::new(), self.stopwords.iter().cloned())
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SyntheticFiles {
            source: dir.join("source.jsonl"),
            target_train: dir.join("target_train.jsonl"),
            target_test: dir.join("target_test.jsonl"),
            embeddings: dir.join("embeddings.txt"),
            nouns: dir.join("nouns.txt"),
            stopwords: dir.join("stopwords.txt"),
        };
        write_jsonl(&files.source, &self.source)?;
        write_jsonl(&files.target_train, &self.target_train)?;
        write_jsonl(&files.target_test, &self.target_test)?;
        self.table.save(&files.embeddings)?;
        for (path, list) in [(&files.nouns, &self.nouns), (&files.stopwords, &self.stopwords)] {
            let mut text = list.join("\n");
            text.push('\n');
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(files)
    }
}

/// Desk-scale hyperparameters used with the synthetic benchmark: N=30,
/// K=5, a 16-filter model, and stages 1 and 3 at lr 5e-3 so they converge
/// within their epoch budgets. Stage 2 keeps lr 1e-3 and ten epochs.
pub fn benchmark_pipeline_config(embed_dim: usize) -> PipelineConfig {
    PipelineConfig {
        sample: SampleConfig {
            n: 30,
            k: 5,
            strategy: Strategy::Coarse2Fine,
            seed: 0,
        },
        model: ModelConfig {
            embed_dim,
            kernel_widths: vec![3, 4, 5],
            filters: 16,
            num_classes: 3,
            dropout: 0.2,
            trainable_embedding: true,
        },
        stage1: StageConfig::new(10, 256, 5e-3),
        guidance: GuidanceConfig {
            stage: StageConfig::new(10, 64, 1e-3),
            ..GuidanceConfig::default()
        },
        stage3: StageConfig::new(20, 64, 5e-3),
        components: Components::FULL,
        ..PipelineConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_pseudo_aspect;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            source_per_domain: 200,
            target_train: 60,
            target_test: 20,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = SyntheticBenchmark::generate(&small()).unwrap();
        let b = SyntheticBenchmark::generate(&small()).unwrap();
        assert_eq!(a.source, b.source);
        assert_eq!(a.target_test, b.target_test);
        assert_eq!(a.source.len(), 400);
        for t in a.target_train.iter().chain(&a.target_test) {
            t.validate(3).unwrap();
            assert!(a.nouns.contains(&t.aspect_tokens()[0]));
        }
        let lex = a.lexicon().unwrap();
        let covered = a.source.iter().filter(|r| extract_pseudo_aspect(r, &lex).is_some()).count();
        assert!(covered > 300 && covered < 400, "{covered}");
        for r in &a.source {
            for tok in crate::corpus::tokenize(&r.text) {
                assert!(a.table.get(&tok).is_some(), "{tok} missing from table");
            }
        }
    }

    #[test]
    fn flip_words_invert_between_domains() {
        let cfg = small();
        let lex = Lexicon::build(&cfg, &mut SeedStream::new(1).rng("lexicon"), &[]);
        assert_eq!(lex.positive.len(), cfg.lexicon_size);
        let flipped = lex.flips.iter().filter(|f| **f).count();
        assert!(flipped > cfg.lexicon_size / 2 && flipped < cfg.lexicon_size, "{flipped}");
        assert_eq!(lex.word(FLIP_PAIR_RANK, true, Domain::Electronics), "long");
        assert_eq!(lex.word(FLIP_PAIR_RANK, true, Domain::Restaurant), "cold");
        assert_eq!(lex.word(0, true, Domain::Restaurant), "good");
        for r in 0..cfg.lexicon_size {
            assert_ne!(lex.word(r, true, Domain::Electronics), lex.word(r, false, Domain::Electronics));
            let same = lex.word(r, true, Domain::Electronics) == lex.word(r, true, Domain::Restaurant);
            assert_eq!(same, !lex.flips[r]);
        }
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bench = SyntheticBenchmark::generate(&small()).unwrap();
        let files = bench.write(dir.path()).unwrap();
        let src: Vec<SentenceRecord> = crate::corpus::read_jsonl(&files.source).unwrap();
        assert_eq!(src, bench.source);
        let table = EmbeddingTable::load(&files.embeddings).unwrap();
        assert_eq!(table.len(), bench.table.len());
        PosLexicon::from_files(&files.nouns, &files.stopwords, Vec::<String>::new()).unwrap();
    }
}
