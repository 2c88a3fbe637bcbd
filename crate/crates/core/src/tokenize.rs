//! Text normalization, tokenization and n-gram extraction.
//!
//! Every BLEU computation in the crate goes through this module so that the
//! original sentence and its back-translation are always split the same way.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("invalid n-gram order {0}: must be at least 1")]
    InvalidOrder(usize),
}

/// How text is split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    /// Whitespace-delimited words with punctuation detached as standalone tokens.
    #[default]
    Word,
    /// One token per non-whitespace Unicode scalar, for unsegmented scripts.
    Character,
}

impl fmt::Display for TokenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenMode::Word => f.write_str("word"),
            TokenMode::Character => f.write_str("character"),
        }
    }
}

impl std::str::FromStr for TokenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "word" => Ok(TokenMode::Word),
            "character" | "char" => Ok(TokenMode::Character),
            other => Err(format!("unknown tokenizer mode `{other}`")),
        }
    }
}

/// Tokenizer settings shared by both sides of a BLEU comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub mode: TokenMode,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            mode: TokenMode::Word,
            lowercase: true,
        }
    }
}

impl TokenizerConfig {
    pub fn tokenize(&self, text: &str) -> TokenSequence {
        tokenize(text, self.mode, self.lowercase)
    }
}

/// An ordered list of non-empty tokens produced under a single [`TokenMode`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    tokens: Vec<String>,
    mode: TokenMode,
}

impl TokenSequence {
    /// Builds a sequence from pre-split tokens, dropping empty strings.
    pub fn from_tokens<I, S>(tokens: I, mode: TokenMode) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t: &String| !t.is_empty())
            .collect();
        Self { tokens, mode }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined rendering of the tokens.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Splits `text` into tokens.
///
/// In word mode, maximal runs of alphanumeric characters form words and every
/// other non-whitespace character becomes a token of its own, so `"Imperfect?"`
/// yields `["imperfect", "?"]` when lowercasing.
pub fn tokenize(text: &str, mode: TokenMode, lowercase: bool) -> TokenSequence {
    let lowered;
    let text = if lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };

    let tokens = match mode {
        TokenMode::Word => split_words(text),
        TokenMode::Character => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    };
    TokenSequence { tokens, mode }
}

fn split_words(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() {
                word.push(c);
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

/// Multiset of n-token windows of a single order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramMultiset {
    order: usize,
    counts: HashMap<Vec<String>, usize>,
}

impl NgramMultiset {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn count(&self, ngram: &[String]) -> usize {
        self.counts.get(ngram).copied().unwrap_or(0)
    }

    /// Total number of windows, duplicates included.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct n-grams with their counts, in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (&[String], usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }
}

/// Counts every window of width `n` in `seq`.
pub fn extract_ngrams(seq: &TokenSequence, n: usize) -> Result<NgramMultiset, TokenizeError> {
    if n == 0 {
        return Err(TokenizeError::InvalidOrder(n));
    }
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for window in seq.tokens.windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    Ok(NgramMultiset { order: n, counts })
}
