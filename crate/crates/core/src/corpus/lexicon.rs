use std::collections::HashSet;
use std::path::Path;

use super::{tokenize, AspectInstance, SentenceRecord};
use crate::{Error, Result};

pub const DEFAULT_NOUN_SUFFIXES: &[&str] =
    &["tion", "tions", "ness", "ity", "ities", "ment", "ments"];

const BUNDLED_NOUNS: &str = include_str!("../../data/nouns.txt");
const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Word lists backing the rule-based noun tagger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosLexicon {
    nouns: HashSet<String>,
    suffixes: Vec<String>,
    stopwords: HashSet<String>,
}

impl PosLexicon {
    pub fn new<N, S, W>(nouns: N, suffixes: S, stopwords: W) -> Result<Self>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        S: IntoIterator,
        S::Item: Into<String>,
        W: IntoIterator,
        W::Item: Into<String>,
    {
        let nouns: HashSet<String> = nouns.into_iter().map(Into::into).collect();
        let stopwords: HashSet<String> = stopwords.into_iter().map(Into::into).collect();
        let suffixes = suffixes.into_iter().map(Into::into).collect();
        let mut overlap: Vec<&String> = nouns.intersection(&stopwords).collect();
        if !overlap.is_empty() {
            overlap.sort();
            return Err(Error::InvalidInput(format!(
                "stopwords overlap the noun lexicon: {overlap:?}"
            )));
        }
        Ok(Self {
            nouns,
            suffixes,
            stopwords,
        })
    }

    /// General review-domain lists shipped with the crate.
    pub fn bundled() -> Self {
        Self::new(
            word_lines(BUNDLED_NOUNS),
            DEFAULT_NOUN_SUFFIXES.iter().copied(),
            word_lines(BUNDLED_STOPWORDS),
        )
        .expect("bundled lexicon is consistent")
    }

    /// Loads one-token-per-line noun and stopword files.
    pub fn from_files<S>(nouns: &Path, stopwords: &Path, suffixes: S) -> Result<Self>
    where
        S: IntoIterator,
        S::Item: Into<String>,
    {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let nouns = read(nouns)?;
        let stops = read(stopwords)?;
        Self::new(word_lines(&nouns), suffixes, word_lines(&stops))
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn is_noun(&self, token: &str) -> bool {
        if self.is_stopword(token) {
            return false;
        }
        self.nouns.contains(token) || self.has_noun_suffix(token)
    }

    fn has_noun_suffix(&self, token: &str) -> bool {
        token.chars().all(char::is_alphabetic)
            && self
                .suffixes
                .iter()
                .any(|s| token.len() > s.len() && token.ends_with(s.as_str()))
    }
}

fn word_lines(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn tag_nouns<S: AsRef<str>>(tokens: &[S], lex: &PosLexicon) -> Vec<bool> {
    tokens.iter().map(|t| lex.is_noun(t.as_ref())).collect()
}

/// Picks one aspect term for a whole review.
///
/// Candidates are maximal runs of noun-tagged tokens. The candidate phrase
/// occurring most often in the review wins; ties go to the phrase whose first
/// occurrence comes earliest. The span is that first occurrence.
pub fn extract_pseudo_aspect(record: &SentenceRecord, lex: &PosLexicon) -> Option<AspectInstance> {
    let tokens = tokenize(&record.text);
    let mask = tag_nouns(&tokens, lex);

    let mut candidates: Vec<&[String]> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !mask[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < tokens.len() && mask[i] {
            i += 1;
        }
        let phrase = &tokens[start..i];
        if !candidates.contains(&phrase) {
            candidates.push(phrase);
        }
    }

    // (count, first occurrence, phrase length)
    let best = candidates
        .iter()
        .map(|phrase| {
            let hits: Vec<usize> = tokens
                .windows(phrase.len())
                .enumerate()
                .filter(|(_, w)| w == phrase)
                .map(|(pos, _)| pos)
                .collect();
            (hits.len(), hits[0], phrase.len())
        })
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)))?;

    let (_, start, len) = best;
    Some(AspectInstance {
        id: record.id.clone(),
        tokens,
        aspect_start: start,
        aspect_end: start + len,
        label: record.label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> PosLexicon {
        PosLexicon::new(
            ["food", "service", "phone", "battery", "life", "indicator"],
            DEFAULT_NOUN_SUFFIXES.iter().copied(),
            ["the", "was", "is", "a"],
        )
        .unwrap()
    }

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tagging_rules() {
        let l = lex();
        assert_eq!(tag_nouns(&toks(&["the", "food", "was", "good"]), &l), [false, true, false, false]);
        assert_eq!(tag_nouns(&toks(&["friendliness"]), &l), [true]);
        assert_eq!(tag_nouns(&toks(&["the", "the"]), &l), [false, false]);
        // Bare suffixes and punctuation are not nouns.
        assert_eq!(tag_nouns(&toks(&["ness", "."]), &l), [false, false]);
    }

    #[test]
    fn stopword_overlap_rejected() {
        assert!(PosLexicon::new(["the"], Vec::<String>::new(), ["the"]).is_err());
    }

    #[test]
    fn bundled_lexicon_loads() {
        let l = PosLexicon::bundled();
        assert!(l.is_noun("battery"));
        assert!(!l.is_noun("the"));
        assert!(l.is_noun("selection"));
    }

    #[test]
    fn repeated_candidate_beats_singleton() {
        let rec = SentenceRecord::new(
            "battery-review",
            "The phone is great. But the battery life is terrible. Also there is no battery \
             life indicator to let you know when its low.",
            1,
        )
        .unwrap();
        let inst = extract_pseudo_aspect(&rec, &PosLexicon::bundled()).unwrap();
        assert_eq!(inst.aspect_tokens(), toks(&["battery", "life"]));
        assert_eq!(inst.label, 1);
        assert_eq!(&inst.tokens[inst.aspect_start - 1], "the");
    }

    #[test]
    fn most_frequent_then_earliest() {
        let rec = SentenceRecord::new("r", "food was ok . food was cheap . service slow", 0).unwrap();
        let inst = extract_pseudo_aspect(&rec, &lex()).unwrap();
        assert_eq!(inst.aspect_span(), 0..1);
        assert_eq!(inst.aspect_tokens(), toks(&["food"]));

        let rec = SentenceRecord::new("r", "service then food", 0).unwrap();
        let inst = extract_pseudo_aspect(&rec, &lex()).unwrap();
        assert_eq!(inst.aspect_tokens(), toks(&["service"]));
    }

    #[test]
    fn no_nouns_no_instance() {
        let rec = SentenceRecord::new("r", "it was great and cheap", 0).unwrap();
        assert!(extract_pseudo_aspect(&rec, &lex()).is_none());
    }

    #[test]
    fn span_is_noun_run_and_label_copied() {
        let l = PosLexicon::bundled();
        for (i, text) in [
            "Friendly staff and nice selection of vegetarian options. Food is just okay, not great. \
             Makes me wonder why everyone likes Food Fight so much.",
            "These pads are great. Took me about a week to train my puppy.",
            "Overpriced, salty and overrated!!! Why this place is so popular I will never understand.",
        ]
        .iter()
        .enumerate()
        {
            let rec = SentenceRecord::new(format!("r{i}"), *text, (i % 2) as u8).unwrap();
            let inst = extract_pseudo_aspect(&rec, &l).unwrap();
            assert_eq!(inst.label, rec.label);
            assert!(inst.aspect_tokens().iter().all(|t| l.is_noun(t)));
        }
        let food = extract_pseudo_aspect(
            &SentenceRecord::new(
                "y",
                "Friendly staff and nice selection of vegetarian options. Food is just okay, not great. \
                 Makes me wonder why everyone likes Food Fight so much.",
                1,
            )
            .unwrap(),
            &l,
        )
        .unwrap();
        assert_eq!(food.aspect_tokens(), toks(&["food"]));
    }
}
