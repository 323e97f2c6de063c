//! Sentence- and aspect-level records, tokenization, vocabulary and the
//! conversion of sampled sentences into pseudo aspect-level instances.

mod io;
mod lexicon;
mod text;
mod vocab;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{read_jsonl, write_jsonl};
pub use lexicon::{extract_pseudo_aspect, tag_nouns, PosLexicon, DEFAULT_NOUN_SUFFIXES};
pub use text::{split_sentences, tokenize};
pub use vocab::{Vocabulary, PAD_ID, UNK_ID};

/// Sentence-level polarity codes.
pub mod sentence_label {
    pub const POSITIVE: u8 = 0;
    pub const NEGATIVE: u8 = 1;
}

/// Aspect-level polarity codes for target data.
pub mod aspect_label {
    pub const POSITIVE: u8 = 0;
    pub const NEUTRAL: u8 = 1;
    pub const NEGATIVE: u8 = 2;
}

/// A raw review with a binary sentence-level label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub text: String,
    pub label: u8,
}

impl SentenceRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: u8) -> Result<Self> {
        let record = Self {
            id: id.into(),
            text: text.into(),
            label,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::InvalidInput(format!("record {:?} has empty text", self.id)));
        }
        if self.label > 1 {
            return Err(Error::InvalidInput(format!(
                "record {:?} has label {}, expected 0 or 1",
                self.id, self.label
            )));
        }
        Ok(())
    }
}

/// A tokenized sentence with one aspect span and its polarity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectInstance {
    pub id: String,
    pub tokens: Vec<String>,
    pub aspect_start: usize,
    pub aspect_end: usize,
    pub label: u8,
}

impl AspectInstance {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        span: Range<usize>,
        label: u8,
        num_classes: usize,
    ) -> Result<Self> {
        let inst = Self {
            id: id.into(),
            tokens,
            aspect_start: span.start,
            aspect_end: span.end,
            label,
        };
        inst.validate(num_classes)?;
        Ok(inst)
    }

    pub fn aspect_span(&self) -> Range<usize> {
        self.aspect_start..self.aspect_end
    }

    pub fn aspect_tokens(&self) -> &[String] {
        &self.tokens[self.aspect_span()]
    }

    /// Checks `0 <= start < end <= len(tokens)` and `label < num_classes`.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if !(self.aspect_start < self.aspect_end && self.aspect_end <= self.tokens.len()) {
            return Err(Error::InvalidInput(format!(
                "instance {:?}: aspect span {}..{} invalid for {} tokens",
                self.id,
                self.aspect_start,
                self.aspect_end,
                self.tokens.len()
            )));
        }
        if usize::from(self.label) >= num_classes {
            return Err(Error::InvalidInput(format!(
                "instance {:?}: label {} outside 0..{}",
                self.id, self.label, num_classes
            )));
        }
        Ok(())
    }
}
