use std::collections::HashMap;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

const PAD: &str = "<pad>";
const UNK: &str = "<unk>";

/// Token to id map with `0 = <pad>` and `1 = <unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            tokens: vec![PAD.to_string(), UNK.to_string()],
            index: HashMap::new(),
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from token sequences. Tokens seen at least
    /// `min_count` times get ids ordered by descending frequency, then
    /// lexicographically.
    pub fn build<'a, I, S>(sequences: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let min_count = min_count.max(1);
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for seq in sequences {
            for tok in seq {
                *counts.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(t, c)| c >= min_count && t != PAD && t != UNK)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut vocab = Self::default();
        for (tok, _) in kept {
            vocab.push(tok);
        }
        vocab
    }

    fn push(&mut self, tok: &str) {
        self.index.insert(tok.to_string(), self.tokens.len());
        self.tokens.push(tok.to_string());
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn encode(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn encode_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.encode(t.as_ref())).collect()
    }

    pub fn decode(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Non-reserved tokens in id order.
    pub fn tokens(&self) -> impl Iterator<Item = (usize, &str)> {
        self.tokens.iter().enumerate().skip(2).map(|(i, t)| (i, t.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn build(texts: &[&str], min_count: usize) -> Vocabulary {
        let seqs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        Vocabulary::build(seqs.iter().map(Vec::as_slice), min_count)
    }

    #[test]
    fn frequency_then_lexicographic_order() {
        let v = build(&["a b", "b"], 1);
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("b"), Some(2));
        assert_eq!(v.id("a"), Some(3));
        assert_eq!(v.decode(PAD_ID), Some("<pad>"));
        assert_eq!(v.encode("zzz"), UNK_ID);

        let v = build(&["c a b", "c b a"], 1);
        assert_eq!(v.decode(2), Some("a"));
        assert_eq!(v.decode(3), Some("b"));
        assert_eq!(v.decode(4), Some("c"));
    }

    #[test]
    fn threshold_excludes_all() {
        let v = build(&["a b", "b"], 3);
        assert_eq!(v.len(), 2);
        assert!(v.is_empty());
    }

    #[test]
    fn deterministic_ids() {
        let texts = ["the food was good", "the service was slow", "good good food"];
        assert_eq!(build(&texts, 1), build(&texts, 1));
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(words in proptest::collection::vec("[a-f]{1,3}", 1..40)) {
            let v = Vocabulary::build(std::iter::once(words.as_slice()), 1);
            for w in &words {
                let id = v.encode(w);
                prop_assert!(id >= 2);
                prop_assert_eq!(v.decode(id), Some(w.as_str()));
            }
            for (id, tok) in v.tokens() {
                prop_assert_eq!(v.encode(tok), id);
            }
        }
    }
}
