//! Sentence-level BLEU and the seven-score similarity vector.
//!
//! The vector layout is fixed: individual 1..4-gram scores followed by
//! cumulative 2..4-gram scores. Cumulative order 1 is omitted because it is
//! always equal to the individual unigram score.
//!
//! Scores are unsmoothed by default, so a sentence pair without a shared
//! 4-gram gets a zero individual 4-gram score and zero cumulative scores from
//! that order up.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sentence::Sentence;
use crate::tokenize::{extract_ngrams, TokenSequence, TokenizerConfig};

/// Highest n-gram order used by the feature vector.
pub const MAX_ORDER: usize = 4;
/// Number of scores in a [`FeatureVector`].
pub const FEATURE_DIM: usize = 7;
/// Identifies the coordinate order of [`FeatureVector`]. Bump on any change.
pub const FEATURE_SCHEMA_VERSION: &str = "bleu7-v1";
/// Coordinate names, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["ind1", "ind2", "ind3", "ind4", "cum2", "cum3", "cum4"];

#[derive(Debug, Error, PartialEq)]
pub enum BleuError {
    #[error("invalid n-gram order {0}: must be within 1..={MAX_ORDER}")]
    InvalidOrder(usize),
    #[error("original sentence has no tokens; BLEU against an empty reference is undefined")]
    EmptyOriginal,
    #[error("feature value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("expected {FEATURE_DIM} feature values, got {0}")]
    WrongLength(usize),
}

/// Zero-count handling for n-gram precisions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Replace a zero match count by `epsilon` when the order has candidate n-grams.
    AddEpsilon { epsilon: f64 },
}

impl Smoothing {
    pub const DEFAULT_EPSILON: f64 = 0.1;
}

/// Clipped match count over candidate n-gram count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    pub matches: usize,
    pub total: usize,
}

impl Precision {
    /// Ratio as a real; `0` when there are no candidate n-grams.
    pub fn value(&self) -> f64 {
        self.smoothed(Smoothing::None)
    }

    fn smoothed(&self, smoothing: Smoothing) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        match smoothing {
            Smoothing::AddEpsilon { epsilon } if self.matches == 0 => {
                (epsilon / self.total as f64).min(1.0)
            }
            _ => self.matches as f64 / self.total as f64,
        }
    }
}

fn check_order(n: usize) -> Result<(), BleuError> {
    if (1..=MAX_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(BleuError::InvalidOrder(n))
    }
}

/// Modified n-gram precision of `candidate` against a single `reference`.
pub fn modified_precision(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    n: usize,
) -> Result<Precision, BleuError> {
    check_order(n)?;
    Ok(clipped_precision(candidate, reference, n))
}

fn clipped_precision(candidate: &TokenSequence, reference: &TokenSequence, n: usize) -> Precision {
    // n >= 1 is checked by callers
    let cand = extract_ngrams(candidate, n).expect("order checked");
    let refs = extract_ngrams(reference, n).expect("order checked");
    let matches = cand
        .iter()
        .map(|(gram, count)| count.min(refs.count(gram)))
        .sum();
    Precision {
        matches,
        total: cand.total(),
    }
}

/// `exp(1 - r/c)` for a candidate shorter than the reference, otherwise 1.
pub fn brevity_penalty(candidate_length: usize, reference_length: usize) -> f64 {
    if candidate_length >= reference_length {
        1.0
    } else if candidate_length == 0 {
        0.0
    } else {
        (1.0 - reference_length as f64 / candidate_length as f64).exp()
    }
}

/// Intermediate quantities for one candidate/reference pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuBreakdown {
    pub precisions: [Precision; MAX_ORDER],
    pub brevity_penalty: f64,
    pub candidate_length: usize,
    pub reference_length: usize,
}

impl BleuBreakdown {
    pub fn compute(candidate: &TokenSequence, reference: &TokenSequence) -> Self {
        let precisions = std::array::from_fn(|i| clipped_precision(candidate, reference, i + 1));
        Self {
            precisions,
            brevity_penalty: brevity_penalty(candidate.len(), reference.len()),
            candidate_length: candidate.len(),
            reference_length: reference.len(),
        }
    }

    pub fn precision(&self, n: usize) -> Result<Precision, BleuError> {
        check_order(n)?;
        Ok(self.precisions[n - 1])
    }

    pub fn individual(&self, n: usize, smoothing: Smoothing) -> Result<f64, BleuError> {
        check_order(n)?;
        Ok(self.brevity_penalty * self.precisions[n - 1].smoothed(smoothing))
    }

    pub fn cumulative(&self, max_n: usize, smoothing: Smoothing) -> Result<f64, BleuError> {
        check_order(max_n)?;
        // product-then-root keeps order 1 bit-identical to the individual score
        let product: f64 = self.precisions[..max_n]
            .iter()
            .map(|p| p.smoothed(smoothing))
            .product();
        if product == 0.0 {
            return Ok(0.0);
        }
        Ok(self.brevity_penalty * product.powf(1.0 / max_n as f64))
    }

    /// The seven scores in [`FEATURE_NAMES`] order.
    pub fn scores(&self, smoothing: Smoothing) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for n in 1..=MAX_ORDER {
            out[n - 1] = self.individual(n, smoothing).expect("order in range");
        }
        for n in 2..=MAX_ORDER {
            out[MAX_ORDER + n - 2] = self.cumulative(n, smoothing).expect("order in range");
        }
        out
    }
}

/// Brevity penalty times the order-`n` modified precision.
pub fn individual_bleu(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    n: usize,
) -> Result<f64, BleuError> {
    check_order(n)?;
    BleuBreakdown::compute(candidate, reference).individual(n, Smoothing::None)
}

/// Brevity penalty times the geometric mean of precisions `1..=max_n`.
pub fn cumulative_bleu(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    max_n: usize,
) -> Result<f64, BleuError> {
    check_order(max_n)?;
    BleuBreakdown::compute(candidate, reference).cumulative(max_n, Smoothing::None)
}

/// All seven unsmoothed scores. Total over all inputs, including empty ones.
pub fn bleu_scores(candidate: &TokenSequence, reference: &TokenSequence) -> [f64; FEATURE_DIM] {
    BleuBreakdown::compute(candidate, reference).scores(Smoothing::None)
}

/// Seven BLEU similarity scores between a sentence and its back-translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: [f64; FEATURE_DIM],
    schema_version: String,
}

impl FeatureVector {
    /// Validates the range invariant and stamps the current schema version.
    pub fn new(values: [f64; FEATURE_DIM]) -> Result<Self, BleuError> {
        Self::with_schema(values, FEATURE_SCHEMA_VERSION)
    }

    pub fn with_schema(
        values: [f64; FEATURE_DIM],
        schema_version: impl Into<String>,
    ) -> Result<Self, BleuError> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(BleuError::OutOfRange { index, value });
            }
        }
        Ok(Self {
            values,
            schema_version: schema_version.into(),
        })
    }

    pub fn from_slice(values: &[f64], schema_version: &str) -> Result<Self, BleuError> {
        let values: [f64; FEATURE_DIM] = values
            .try_into()
            .map_err(|_| BleuError::WrongLength(values.len()))?;
        Self::with_schema(values, schema_version)
    }

    pub fn values(&self) -> &[f64; FEATURE_DIM] {
        &self.values
    }

    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }
}

/// Computes [`FeatureVector`]s with the back-translation as BLEU candidate and
/// the original sentence as reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub tokenizer: TokenizerConfig,
    pub smoothing: Smoothing,
}

impl FeatureExtractor {
    pub fn new(tokenizer: TokenizerConfig) -> Self {
        Self {
            tokenizer,
            smoothing: Smoothing::None,
        }
    }

    pub fn extract(&self, original: &Sentence, back_translation: &Sentence) -> Result<FeatureVector, BleuError> {
        self.extract_text(&original.text, &back_translation.text)
    }

    pub fn extract_text(&self, original: &str, back_translation: &str) -> Result<FeatureVector, BleuError> {
        let reference = self.tokenizer.tokenize(original);
        if reference.is_empty() {
            return Err(BleuError::EmptyOriginal);
        }
        let candidate = self.tokenizer.tokenize(back_translation);
        let scores = BleuBreakdown::compute(&candidate, &reference).scores(self.smoothing);
        FeatureVector::new(scores)
    }
}

/// [`FeatureExtractor::extract`] under the default tokenizer, unsmoothed.
pub fn bleu_feature_vector(original: &Sentence, back_translation: &Sentence) -> Result<FeatureVector, BleuError> {
    FeatureExtractor::default().extract(original, back_translation)
}
