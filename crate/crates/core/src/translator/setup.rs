//! Building a [`Translator`] from settings.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use super::backend::{RetryPolicy, TranslatorBackend};
use super::cache::{CacheError, TranslationCache};
use super::http::{HttpBackend, API_KEY_ENV, DEFAULT_HTTP_ENGINE_ID, ENDPOINT_ENV};
use super::replay::ReplayBackend;
use super::Translator;
use crate::config::{ConfigError, KeyValues};
use crate::dataset::synthetic;

/// Settings keys read by [`TranslatorSettings::from_settings`].
pub const TRANSLATOR_KEYS: &[&str] = &[
    "backend",
    "fixture_seed",
    "replay_dir",
    "engine_id",
    "endpoint",
    "min_interval_ms",
    "cache_dir",
    "retries",
    "backoff_ms",
    "max_in_flight",
];

#[derive(Debug, Clone, PartialEq)]
pub enum BackendConfig {
    /// The synthetic fixture translator with dictionaries seeded by `seed`.
    Fixture { seed: u64 },
    /// A recorded cache directory; misses are errors.
    Replay { dir: PathBuf, engine_id: String },
    /// A JSON translation API. `endpoint` falls back to `TRANSLATOR_ENDPOINT`.
    Http {
        endpoint: Option<String>,
        engine_id: String,
        min_interval: Duration,
    },
}

impl BackendConfig {
    pub fn name(&self) -> &'static str {
        match self {
            BackendConfig::Fixture { .. } => "fixture",
            BackendConfig::Replay { .. } => "replay",
            BackendConfig::Http { .. } => "http",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatorSettings {
    pub backend: BackendConfig,
    /// Persistent cache for fixture and HTTP backends.
    pub cache_dir: Option<PathBuf>,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl Default for TranslatorSettings {
    fn default() -> Self {
        Self {
            backend: BackendConfig::Fixture { seed: 0 },
            cache_dir: None,
            retry: RetryPolicy::default(),
            max_in_flight: 8,
        }
    }
}

impl TranslatorSettings {
    pub fn from_settings(kv: &KeyValues) -> Result<Self, ConfigError> {
        let defaults = Self::default();
        let backend = match kv.get("backend").unwrap_or("fixture") {
            "fixture" => BackendConfig::Fixture {
                seed: kv.parsed("fixture_seed")?.unwrap_or(0),
            },
            "replay" => BackendConfig::Replay {
                dir: kv
                    .get("replay_dir")
                    .map(PathBuf::from)
                    .ok_or_else(|| ConfigError::Invalid("backend `replay` needs `replay_dir`".into()))?,
                engine_id: kv.get("engine_id").unwrap_or(DEFAULT_HTTP_ENGINE_ID).to_string(),
            },
            "http" => BackendConfig::Http {
                endpoint: kv.get("endpoint").map(str::to_string),
                engine_id: kv.get("engine_id").unwrap_or(DEFAULT_HTTP_ENGINE_ID).to_string(),
                min_interval: Duration::from_millis(kv.parsed("min_interval_ms")?.unwrap_or(0)),
            },
            other => {
                return Err(ConfigError::invalid_value(
                    "backend",
                    other,
                    "expected fixture, replay or http",
                ))
            }
        };
        let retry = RetryPolicy {
            max_retries: kv.parsed("retries")?.unwrap_or(defaults.retry.max_retries),
            initial_backoff: kv
                .parsed::<u64>("backoff_ms")?
                .map(Duration::from_millis)
                .unwrap_or(defaults.retry.initial_backoff),
        };
        let max_in_flight = kv.parsed("max_in_flight")?.unwrap_or(defaults.max_in_flight);
        if max_in_flight == 0 {
            return Err(ConfigError::invalid_value("max_in_flight", "0", "must be at least 1"));
        }
        Ok(Self {
            backend,
            cache_dir: kv.get("cache_dir").filter(|s| !s.is_empty()).map(PathBuf::from),
            retry,
            max_in_flight,
        })
    }

    /// Inverse of [`from_settings`](Self::from_settings).
    pub fn to_settings(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("backend", self.backend.name());
        match &self.backend {
            BackendConfig::Fixture { seed } => kv.set("fixture_seed", seed.to_string()),
            BackendConfig::Replay { dir, engine_id } => {
                kv.set("replay_dir", dir.display().to_string());
                kv.set("engine_id", engine_id.clone());
            }
            BackendConfig::Http {
                endpoint,
                engine_id,
                min_interval,
            } => {
                if let Some(e) = endpoint {
                    kv.set("endpoint", e.clone());
                }
                kv.set("engine_id", engine_id.clone());
                kv.set("min_interval_ms", min_interval.as_millis().to_string());
            }
        }
        if let Some(dir) = &self.cache_dir {
            kv.set("cache_dir", dir.display().to_string());
        }
        kv.set("retries", self.retry.max_retries.to_string());
        kv.set("backoff_ms", self.retry.initial_backoff.as_millis().to_string());
        kv.set("max_in_flight", self.max_in_flight.to_string());
        kv
    }

    /// Checks what can be checked without contacting the backend.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let BackendConfig::Http { endpoint: None, .. } = &self.backend {
            if std::env::var(ENDPOINT_ENV).map_or(true, |v| v.is_empty()) {
                return Err(ConfigError::Invalid(format!(
                    "backend `http` needs `endpoint` or {ENDPOINT_ENV}"
                )));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Translator, SetupError> {
        self.validate()?;
        let backend: Arc<dyn TranslatorBackend> = match &self.backend {
            BackendConfig::Fixture { seed } => Arc::new(synthetic::fixture_backend(*seed)),
            BackendConfig::Replay { dir, engine_id } => Arc::new(ReplayBackend::open(dir, engine_id.clone())?),
            BackendConfig::Http {
                endpoint,
                engine_id,
                min_interval,
            } => {
                let endpoint = endpoint
                    .clone()
                    .or_else(|| std::env::var(ENDPOINT_ENV).ok())
                    .unwrap_or_default();
                let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
                let mut http = HttpBackend::new(endpoint, key).with_engine_id(engine_id.clone());
                if !min_interval.is_zero() {
                    http = http.with_min_interval(*min_interval);
                }
                Arc::new(http)
            }
        };
        let mut translator = Translator::from_arc(backend).with_retry(self.retry);
        if let (Some(dir), false) = (&self.cache_dir, matches!(self.backend, BackendConfig::Replay { .. })) {
            translator = translator.with_cache(Arc::new(TranslationCache::open(dir)?));
        }
        Ok(translator)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}
