//! Labeled human/machine datasets and the paired train/test split.

mod build;
mod corpus;
pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{
    build_backtranslation_dataset, build_translation_dataset, featurize, DatasetBuild, FeaturizeConfig,
    ItemFailure,
};
pub use corpus::{load_parallel_corpus, load_parallel_tsv, load_sentiment_corpus, Polarity};

use crate::bleu::FeatureVector;
use crate::sentence::{LanguageTag, Sentence};
use crate::translator::BackTranslationRecord;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line counts differ: {path_a} has {count_a} lines, {path_b} has {count_b}")]
    LineCountMismatch {
        path_a: PathBuf,
        count_a: usize,
        path_b: PathBuf,
        count_b: usize,
    },
    #[error("requested {requested} items but only {available} are available")]
    LimitExceedsAvailable { requested: usize, available: usize },
    #[error("class `{class}` has {available} sentences, {requested} requested")]
    InsufficientClass {
        class: Polarity,
        available: usize,
        requested: usize,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("pair `{pair_id}` is malformed: {message}")]
    MalformedPairing { pair_id: String, message: String },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("language mismatch: expected `{expected}`, found `{found}`")]
    LanguageMismatch { expected: LanguageTag, found: LanguageTag },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Gold label. The machine class is the positive class throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Machine,
}

impl Label {
    /// `+1` for machine, `-1` for human.
    pub fn sign(self) -> f64 {
        match self {
            Label::Human => -1.0,
            Label::Machine => 1.0,
        }
    }

    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Machine
        } else {
            Label::Human
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Human => "human",
            Label::Machine => "machine",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(Label::Human),
            "machine" => Ok(Label::Machine),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Aligned sentences from a parallel corpus. `human_text` is the side used as
/// human-written text; `foreign_text` is the side a translator turns into
/// machine text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub pair_id: String,
    pub human_text: Sentence,
    pub foreign_text: Sentence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub example_id: String,
    pub pair_id: String,
    pub text: Sentence,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
    /// Round trip that generated this machine text, for back-translation data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_provenance: Option<BackTranslationRecord>,
    /// The detector's own back-translation of `text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub back_translation: Option<BackTranslationRecord>,
}

impl LabeledExample {
    pub fn new(pair_id: &str, text: Sentence, label: Label) -> Self {
        let suffix = match label {
            Label::Human => "h",
            Label::Machine => "m",
        };
        Self {
            example_id: format!("{pair_id}-{suffix}"),
            pair_id: pair_id.to_string(),
            text,
            label,
            features: None,
            generation_provenance: None,
            back_translation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub seed: u64,
}

/// Splits at pair granularity: pair ids are shuffled with `seed` and the first
/// `floor(train_fraction * pairs)` pairs go to the training set. Both members
/// of a pair always land in the same partition. Examples keep their input
/// order inside each partition.
pub fn paired_split(examples: &[LabeledExample], train_fraction: f64, seed: u64) -> Result<SplitDataset, DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    check_pairing(examples)?;

    let mut pair_ids: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for ex in examples {
        if seen.insert(ex.pair_id.as_str()) {
            pair_ids.push(&ex.pair_id);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pair_ids.shuffle(&mut rng);
    let n_train = (train_fraction * pair_ids.len() as f64).floor() as usize;
    let train_ids: HashSet<&str> = pair_ids[..n_train].iter().copied().collect();

    let (train, test) = examples
        .iter()
        .cloned()
        .partition(|ex| train_ids.contains(ex.pair_id.as_str()));
    Ok(SplitDataset { train, test, seed })
}

/// Checks that every pair id has exactly one human and one machine member and
/// that example ids are unique.
pub fn check_pairing(examples: &[LabeledExample]) -> Result<(), DatasetError> {
    let mut members: BTreeMap<&str, Vec<Label>> = BTreeMap::new();
    let mut ids = HashSet::new();
    for ex in examples {
        if !ids.insert(ex.example_id.as_str()) {
            return Err(DatasetError::MalformedPairing {
                pair_id: ex.pair_id.clone(),
                message: format!("duplicate example id `{}`", ex.example_id),
            });
        }
        members.entry(&ex.pair_id).or_default().push(ex.label);
    }
    for (pair_id, labels) in members {
        let ok = labels.len() == 2 && labels.contains(&Label::Human) && labels.contains(&Label::Machine);
        if !ok {
            return Err(DatasetError::MalformedPairing {
                pair_id: pair_id.to_string(),
                message: format!("expected one human and one machine member, found {labels:?}"),
            });
        }
    }
    Ok(())
}

/// Size and sentence-length summary of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub examples: usize,
    pub human: usize,
    pub machine: usize,
    pub avg_words: f64,
    pub avg_words_human: f64,
    pub avg_words_machine: f64,
}

impl DatasetStats {
    pub fn compute(examples: &[LabeledExample]) -> Self {
        let mean = |label: Option<Label>| {
            let counts: Vec<usize> = examples
                .iter()
                .filter(|e| label.is_none_or(|l| e.label == l))
                .map(|e| e.text.word_count())
                .collect();
            if counts.is_empty() {
                0.0
            } else {
                counts.iter().sum::<usize>() as f64 / counts.len() as f64
            }
        };
        Self {
            examples: examples.len(),
            human: examples.iter().filter(|e| e.label == Label::Human).count(),
            machine: examples.iter().filter(|e| e.label == Label::Machine).count(),
            avg_words: mean(None),
            avg_words_human: mean(Some(Label::Human)),
            avg_words_machine: mean(Some(Label::Machine)),
        }
    }
}
