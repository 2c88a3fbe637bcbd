//! Back-translation generation through pluggable, cached translation engines.

mod backend;
pub mod cache;
pub mod fixture;
pub mod http;
pub mod replay;
mod setup;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, RetryPolicy, TranslatorBackend};
pub use cache::{CacheError, CacheKey, TranslationCache};
pub use fixture::{FixtureBackend, FixtureBuilder, FixtureError};
pub use http::{HttpBackend, JsonAdapter, WireAdapter};
pub use replay::ReplayBackend;
pub use setup::{BackendConfig, SetupError, TranslatorSettings, TRANSLATOR_KEYS};

use crate::sentence::{LanguageTag, Sentence};

/// `pass_count` value for text of unknown provenance.
pub const UNKNOWN_PASSES: i32 = -1;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("invalid language pair: source and target are both `{0}`")]
    InvalidLanguagePair(LanguageTag),
    #[error("{engine_id} {source_lang}->{target_lang} failed after {attempts} attempt(s): {error}")]
    Backend {
        engine_id: String,
        source_lang: LanguageTag,
        target_lang: LanguageTag,
        attempts: u32,
        #[source]
        error: BackendError,
    },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl TranslateError {
    pub fn backend_error(&self) -> Option<&BackendError> {
        match self {
            TranslateError::Backend { error, .. } => Some(error),
            _ => None,
        }
    }
}

/// Which half of a round trip failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Forward,
    Backward,
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Forward => "forward",
            Leg::Backward => "backward",
        })
    }
}

#[derive(Debug, Error)]
pub enum BackTranslateError {
    #[error("intermediate language `{0}` equals the sentence language")]
    SameIntermediate(LanguageTag),
    #[error("{leg} leg: {source}")]
    Leg {
        leg: Leg,
        #[source]
        source: TranslateError,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BatchConfigError {
    #[error("max_in_flight must be at least 1")]
    ZeroInFlight,
}

/// A sentence, its pivot translation and its back-translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackTranslationRecord {
    pub original: Sentence,
    pub pivot: Sentence,
    pub back_translation: Sentence,
    pub engine_id: String,
    /// Machine-translation passes from the text's true origin to
    /// `back_translation`, or [`UNKNOWN_PASSES`].
    pub pass_count: i32,
    /// Seconds since the Unix epoch; only set when timestamps are enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// Outcome of [`Translator::batch_back_translate`], in input order.
#[derive(Debug, Default)]
pub struct BatchReport {
    pub items: Vec<Result<BackTranslationRecord, BackTranslateError>>,
}

impl BatchReport {
    pub fn records(&self) -> impl Iterator<Item = &BackTranslationRecord> {
        self.items.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &BackTranslateError)> {
        self.items
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
    }

    pub fn failure_count(&self) -> usize {
        self.failures().count()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Cached, retrying front end over a [`TranslatorBackend`].
pub struct Translator {
    backend: Arc<dyn TranslatorBackend>,
    cache: Arc<TranslationCache>,
    retry: RetryPolicy,
    timestamps: bool,
    backend_calls: AtomicUsize,
}

impl fmt::Debug for Translator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Translator")
            .field("engine_id", &self.backend.engine_id())
            .field("cache_dir", &self.cache.dir())
            .field("retry", &self.retry)
            .finish()
    }
}

impl Translator {
    /// A translator with an in-memory cache and the default retry policy.
    pub fn new(backend: impl TranslatorBackend + 'static) -> Self {
        Self::from_arc(Arc::new(backend))
    }

    pub fn from_arc(backend: Arc<dyn TranslatorBackend>) -> Self {
        Self {
            backend,
            cache: Arc::new(TranslationCache::in_memory()),
            retry: RetryPolicy::default(),
            timestamps: false,
            backend_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_cache(mut self, cache: Arc<TranslationCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Stamp records with the wall-clock time. Off by default so that
    /// repeated runs produce identical records.
    pub fn with_timestamps(mut self, enabled: bool) -> Self {
        self.timestamps = enabled;
        self
    }

    pub fn engine_id(&self) -> &str {
        self.backend.engine_id()
    }

    pub fn cache(&self) -> &TranslationCache {
        &self.cache
    }

    /// Number of backend calls made so far, retries included.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::Relaxed)
    }

    /// Translates `text`, consulting the cache before the backend. Only
    /// successful translations are written to the cache.
    pub fn translate(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Result<String, TranslateError> {
        if source == target {
            return Err(TranslateError::InvalidLanguagePair(source.clone()));
        }
        let engine_id = self.backend.engine_id();
        let key = CacheKey::new(text, source, target, engine_id);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let (outcome, attempts) = self.retry.run(|| {
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            self.backend.translate(text, source, target)
        });
        let translation = outcome.map_err(|error| TranslateError::Backend {
            engine_id: engine_id.to_string(),
            source_lang: source.clone(),
            target_lang: target.clone(),
            attempts,
            error,
        })?;
        Ok(self.cache.insert(engine_id, source, target, text, &translation)?)
    }

    /// Translates a sentence into `target`, advancing its pass count.
    pub fn translate_sentence(&self, sentence: &Sentence, target: &LanguageTag) -> Result<Sentence, TranslateError> {
        let text = self.translate(&sentence.text, &sentence.language, target)?;
        Ok(Sentence {
            text,
            language: target.clone(),
            passes: sentence.passes.map(|p| p + 1),
        })
    }

    /// Round trip through `intermediate` and back to the sentence's language.
    pub fn back_translate(
        &self,
        sentence: &Sentence,
        intermediate: &LanguageTag,
    ) -> Result<BackTranslationRecord, BackTranslateError> {
        if *intermediate == sentence.language {
            return Err(BackTranslateError::SameIntermediate(intermediate.clone()));
        }
        let pivot = self
            .translate_sentence(sentence, intermediate)
            .map_err(|source| BackTranslateError::Leg {
                leg: Leg::Forward,
                source,
            })?;
        let back_translation = self
            .translate_sentence(&pivot, &sentence.language)
            .map_err(|source| BackTranslateError::Leg {
                leg: Leg::Backward,
                source,
            })?;
        let pass_count = back_translation
            .passes
            .map(|p| p as i32)
            .unwrap_or(UNKNOWN_PASSES);
        let timestamp = self.timestamps.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Ok(BackTranslationRecord {
            original: sentence.clone(),
            pivot,
            back_translation,
            engine_id: self.engine_id().to_string(),
            pass_count,
            timestamp,
        })
    }

    /// Back-translates every sentence with at most `max_in_flight` requests
    /// outstanding. Per-item failures are collected; results keep input order.
    pub fn batch_back_translate(
        &self,
        sentences: &[Sentence],
        intermediate: &LanguageTag,
        max_in_flight: usize,
    ) -> Result<BatchReport, BatchConfigError> {
        if max_in_flight == 0 {
            return Err(BatchConfigError::ZeroInFlight);
        }
        let items = self.parallel_map(sentences, max_in_flight, |s| self.back_translate(s, intermediate));
        Ok(BatchReport { items })
    }

    /// Applies `f` to every item on up to `workers` threads, preserving order.
    pub(crate) fn parallel_map<T, R, F>(&self, items: &[T], workers: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        let workers = workers.max(1).min(items.len());
        if workers <= 1 {
            return items.iter().map(&f).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= items.len() {
                        break;
                    }
                    let out = f(&items[i]);
                    slots.lock().expect("batch slots poisoned")[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("batch slots poisoned")
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::new(s).unwrap()
    }

    fn fixture() -> FixtureBackend {
        FixtureBackend::builder(tag("en"))
            .synonym("fine", "good")
            .entry(&tag("fr"), "good", "bon")
            .fail_on("boom")
            .build()
            .unwrap()
    }

    #[test]
    fn cache_hit_skips_backend() {
        let t = Translator::new(fixture());
        assert_eq!(t.translate("good", &tag("en"), &tag("fr")).unwrap(), "bon");
        assert_eq!(t.backend_calls(), 1);
        assert_eq!(t.translate("good", &tag("en"), &tag("fr")).unwrap(), "bon");
        assert_eq!(t.backend_calls(), 1);
    }

    #[test]
    fn same_language_pair_is_rejected() {
        let t = Translator::new(fixture());
        assert!(matches!(
            t.translate("good", &tag("en"), &tag("en")),
            Err(TranslateError::InvalidLanguagePair(_))
        ));
        assert_eq!(t.backend_calls(), 0);
        let s = Sentence::new("good", tag("en"));
        assert!(matches!(t.back_translate(&s, &tag("en")), Err(BackTranslateError::SameIntermediate(_))));
    }

    #[test]
    fn failures_are_retried_and_not_cached() {
        let t = Translator::new(fixture()).with_retry(RetryPolicy {
            max_retries: 3,
            initial_backoff: Duration::from_millis(1),
        });
        let err = t.translate("boom", &tag("en"), &tag("fr")).unwrap_err();
        assert_eq!(t.backend_calls(), 4);
        match err {
            TranslateError::Backend { attempts, ref engine_id, .. } => {
                assert_eq!(attempts, 4);
                assert_eq!(engine_id, fixture::FIXTURE_ENGINE_VERSION);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(t.cache().is_empty());
    }

    #[test]
    fn record_tracks_passes_and_languages() {
        let t = Translator::new(fixture());
        let s = Sentence::new("A fine day", tag("en")).with_passes(0);
        let rec = t.back_translate(&s, &tag("fr")).unwrap();
        assert_eq!(rec.pivot.language, tag("fr"));
        assert_eq!(rec.back_translation.language, tag("en"));
        assert_eq!(rec.back_translation.text, "a good day");
        assert_eq!(rec.pass_count, 2);
        assert_eq!(rec.pivot.passes, Some(1));
        assert!(rec.timestamp.is_none());

        let unknown = t.back_translate(&Sentence::new("day", tag("en")), &tag("fr")).unwrap();
        assert_eq!(unknown.pass_count, UNKNOWN_PASSES);

        let machine = Sentence::new("a good day", tag("en")).with_passes(1);
        assert_eq!(t.back_translate(&machine, &tag("fr")).unwrap().pass_count, 3);
    }

    #[test]
    fn back_translate_labels_failing_leg() {
        // "bon" decodes to "good" only on the way back, so fail on the pivot word
        let backend = FixtureBackend::builder(tag("en"))
            .entry(&tag("fr"), "good", "bon")
            .fail_on("bon")
            .build()
            .unwrap();
        let t = Translator::new(backend).with_retry(RetryPolicy::none());
        let err = t.back_translate(&Sentence::new("good", tag("en")), &tag("fr")).unwrap_err();
        assert!(matches!(err, BackTranslateError::Leg { leg: Leg::Backward, .. }));
        let err = t.back_translate(&Sentence::new("bon", tag("en")), &tag("fr")).unwrap_err();
        assert!(matches!(err, BackTranslateError::Leg { leg: Leg::Forward, .. }));
    }

    #[test]
    fn timestamps_are_opt_in() {
        let t = Translator::new(fixture()).with_timestamps(true);
        let rec = t.back_translate(&Sentence::new("day", tag("en")), &tag("fr")).unwrap();
        assert!(rec.timestamp.unwrap() > 0);
    }

    #[test]
    fn batch_rejects_zero_in_flight() {
        let t = Translator::new(fixture());
        assert_eq!(
            t.batch_back_translate(&[], &tag("fr"), 0).unwrap_err(),
            BatchConfigError::ZeroInFlight
        );
        assert!(t.batch_back_translate(&[], &tag("fr"), 4).unwrap().is_empty());
    }
}
