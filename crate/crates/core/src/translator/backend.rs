use std::time::Duration;

use thiserror::Error;

use crate::sentence::LanguageTag;

/// Failure reported by a translation backend for a single call.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    /// Network failure, timeout or server-side error. Retried.
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no recorded translation for this request")]
    ReplayMiss,
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Unreachable(_))
    }
}

/// A machine translation engine.
///
/// `engine_id` must change whenever the engine's outputs may change (model
/// update, different vendor), since it is part of every cache key.
pub trait TranslatorBackend: Send + Sync {
    fn engine_id(&self) -> &str;

    fn translate(
        &self,
        text: &str,
        source: &LanguageTag,
        target: &LanguageTag,
    ) -> Result<String, BackendError>;
}

impl<T: TranslatorBackend + ?Sized> TranslatorBackend for std::sync::Arc<T> {
    fn engine_id(&self) -> &str {
        (**self).engine_id()
    }

    fn translate(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Result<String, BackendError> {
        (**self).translate(text, source, target)
    }
}

/// Bounded retries with exponential backoff for retryable backend errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            initial_backoff: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff.saturating_mul(1u32 << retry.min(16))
    }

    /// Runs `call` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent. Returns the outcome and the number of attempts.
    pub fn run<T>(&self, mut call: impl FnMut() -> Result<T, BackendError>) -> (Result<T, BackendError>, u32) {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match call() {
                Err(e) if e.is_retryable() && attempt <= self.max_retries => {
                    let delay = self.backoff(attempt - 1);
                    log::debug!("retrying after {delay:?}: {e}");
                    std::thread::sleep(delay);
                }
                other => return (other, attempt),
            }
        }
    }
}
