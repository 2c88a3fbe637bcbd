use std::path::Path;

use super::backend::{BackendError, TranslatorBackend};
use super::cache::{CacheError, CacheKey, TranslationCache};
use crate::sentence::LanguageTag;

/// Serves translations from a pre-recorded cache directory and never touches
/// the network. Requests missing from the recording fail with
/// [`BackendError::ReplayMiss`].
#[derive(Debug)]
pub struct ReplayBackend {
    engine_id: String,
    recording: TranslationCache,
}

impl ReplayBackend {
    /// `engine_id` must be the id of the engine that produced the recording.
    pub fn open(dir: impl AsRef<Path>, engine_id: impl Into<String>) -> Result<Self, CacheError> {
        Ok(Self {
            engine_id: engine_id.into(),
            recording: TranslationCache::open_existing(dir)?,
        })
    }

    pub fn len(&self) -> usize {
        self.recording.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recording.is_empty()
    }
}

impl TranslatorBackend for ReplayBackend {
    fn engine_id(&self) -> &str {
        &self.engine_id
    }

    fn translate(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Result<String, BackendError> {
        let key = CacheKey::new(text, source, target, &self.engine_id);
        self.recording.get(&key).ok_or(BackendError::ReplayMiss)
    }
}
