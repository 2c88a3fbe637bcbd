use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, SentencePair};
use crate::sentence::{LanguageTag, Sentence};

/// Sentiment polarity used only to balance the sampled sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }
}

/// Score thresholds for numeric sentiment labels.
const POSITIVE_MIN: f64 = 0.6;
const NEGATIVE_MAX: f64 = 0.4;

fn read_lines(path: &Path) -> Result<Vec<String>, DatasetError> {
    let raw = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(raw.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
}

/// Picks `limit` of `n` indices uniformly with `seed`, returned ascending.
fn sample_indices(n: usize, limit: usize, seed: u64) -> Result<Vec<usize>, DatasetError> {
    if limit > n {
        return Err(DatasetError::LimitExceedsAvailable {
            requested: limit,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, limit).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

fn sample_pairs(
    rows: Vec<(usize, String, String)>,
    lang_a: &LanguageTag,
    lang_b: &LanguageTag,
    limit: usize,
    seed: u64,
) -> Result<Vec<SentencePair>, DatasetError> {
    if lang_a == lang_b {
        return Err(DatasetError::Config(format!("both corpus sides are `{lang_a}`")));
    }
    let mut seen = HashSet::new();
    let candidates: Vec<_> = rows
        .into_iter()
        .filter(|(_, a, b)| !a.trim().is_empty() && !b.trim().is_empty())
        .filter(|(_, a, _)| seen.insert(a.trim().to_string()))
        .collect();
    let picked = sample_indices(candidates.len(), limit, seed)?;
    Ok(picked
        .into_iter()
        .map(|i| {
            let (line, a, b) = &candidates[i];
            SentencePair {
                pair_id: format!("L{line:07}"),
                human_text: Sentence::new(a.trim(), lang_a.clone()).with_passes(0),
                foreign_text: Sentence::new(b.trim(), lang_b.clone()).with_passes(0),
            }
        })
        .collect())
}

/// Loads a line-aligned parallel corpus (Europarl layout: one sentence per
/// line, one file per language). `path_a` holds the human side.
///
/// Pairs with a blank side are dropped and repeated human sentences keep only
/// their first occurrence before `limit` pairs are sampled with `seed`. The
/// result is in file order and pair ids encode the 1-based line number.
pub fn load_parallel_corpus(
    path_a: impl AsRef<Path>,
    path_b: impl AsRef<Path>,
    lang_a: &LanguageTag,
    lang_b: &LanguageTag,
    limit: usize,
    seed: u64,
) -> Result<Vec<SentencePair>, DatasetError> {
    let (path_a, path_b) = (path_a.as_ref(), path_b.as_ref());
    let a = read_lines(path_a)?;
    let b = read_lines(path_b)?;
    if a.len() != b.len() {
        return Err(DatasetError::LineCountMismatch {
            path_a: path_a.to_path_buf(),
            count_a: a.len(),
            path_b: path_b.to_path_buf(),
            count_b: b.len(),
        });
    }
    let rows = a
        .into_iter()
        .zip(b)
        .enumerate()
        .map(|(i, (a, b))| (i + 1, a, b))
        .collect();
    sample_pairs(rows, lang_a, lang_b, limit, seed)
}

/// Loads a parallel corpus stored as `human TAB foreign` lines.
pub fn load_parallel_tsv(
    path: impl AsRef<Path>,
    lang_a: &LanguageTag,
    lang_b: &LanguageTag,
    limit: usize,
    seed: u64,
) -> Result<Vec<SentencePair>, DatasetError> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or_else(|| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected `human<TAB>foreign`".into(),
        })?;
        rows.push((i + 1, a.to_string(), b.to_string()));
    }
    sample_pairs(rows, lang_a, lang_b, limit, seed)
}

fn parse_polarity(label: &str) -> Result<Option<Polarity>, String> {
    match label.trim().to_ascii_lowercase().as_str() {
        "positive" | "pos" => return Ok(Some(Polarity::Positive)),
        "negative" | "neg" => return Ok(Some(Polarity::Negative)),
        "neutral" => return Ok(None),
        _ => {}
    }
    let score: f64 = label
        .trim()
        .parse()
        .map_err(|_| format!("unrecognized polarity label `{label}`"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("sentiment score {score} outside [0, 1]"));
    }
    Ok(if score >= POSITIVE_MIN {
        Some(Polarity::Positive)
    } else if score <= NEGATIVE_MAX {
        Some(Polarity::Negative)
    } else {
        None
    })
}

/// Loads a `sentence TAB label` sentiment file and samples `limit_per_class`
/// positive and negative sentences with `seed`.
///
/// Labels are `positive`/`negative` (or `pos`/`neg`, `neutral`) or a score in
/// `[0, 1]`: at least 0.6 is positive, at most 0.4 negative, anything between
/// is dropped. Lines starting with `#` are comments. Duplicate sentences keep
/// their first occurrence. The result is in file order.
pub fn load_sentiment_corpus(
    path: impl AsRef<Path>,
    language: &LanguageTag,
    limit_per_class: usize,
    seed: u64,
) -> Result<Vec<Sentence>, DatasetError> {
    let path = path.as_ref();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (text, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| parse_err("expected `sentence<TAB>label`".into()))?;
        let text = text.trim();
        let Some(polarity) = parse_polarity(label).map_err(parse_err)? else {
            continue;
        };
        if text.is_empty() || !seen.insert(text.to_string()) {
            continue;
        }
        match polarity {
            Polarity::Positive => positives.push((i, text.to_string())),
            Polarity::Negative => negatives.push((i, text.to_string())),
        }
    }

    let mut chosen = Vec::new();
    for (class, pool, class_seed) in [
        (Polarity::Positive, &positives, seed),
        (Polarity::Negative, &negatives, seed.wrapping_add(1)),
    ] {
        if pool.len() < limit_per_class {
            return Err(DatasetError::InsufficientClass {
                class,
                available: pool.len(),
                requested: limit_per_class,
            });
        }
        let picked = sample_indices(pool.len(), limit_per_class, class_seed)?;
        chosen.extend(picked.into_iter().map(|j| pool[j].clone()));
    }
    chosen.sort();
    Ok(chosen
        .into_iter()
        .map(|(_, text)| Sentence::new(text, language.clone()).with_passes(0))
        .collect())
}
