//! Generic JSON-over-HTTP translation client.
//!
//! The default wire shape is a `POST` of `{"text", "source", "target"}`
//! answered by `{"translation"}`. Vendor-specific shapes plug in through
//! [`WireAdapter`].

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::backend::{BackendError, TranslatorBackend};
use crate::sentence::LanguageTag;

pub const ENDPOINT_ENV: &str = "TRANSLATOR_ENDPOINT";
pub const API_KEY_ENV: &str = "TRANSLATOR_API_KEY";
pub const DEFAULT_HTTP_ENGINE_ID: &str = "http-api/v1";

/// Maps translation requests and responses to a vendor's JSON shapes.
pub trait WireAdapter: Send + Sync {
    fn request_body(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Value;
    fn parse_response(&self, body: Value) -> Result<String, BackendError>;
}

/// `{text, source, target}` in, `{translation}` out.
#[derive(Debug, Default, Clone, Copy)]
pub struct JsonAdapter;

impl WireAdapter for JsonAdapter {
    fn request_body(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Value {
        json!({ "text": text, "source": source.as_str(), "target": target.as_str() })
    }

    fn parse_response(&self, body: Value) -> Result<String, BackendError> {
        body.get("translation")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::MalformedResponse(format!("missing `translation` in {body}")))
    }
}

pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    engine_id: String,
    agent: ureq::Agent,
    adapter: Box<dyn WireAdapter>,
    min_interval: Option<Duration>,
    last_request: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("engine_id", &self.engine_id)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            api_key,
            engine_id: DEFAULT_HTTP_ENGINE_ID.to_string(),
            agent,
            adapter: Box::new(JsonAdapter),
            min_interval: None,
            last_request: Mutex::new(None),
        }
    }

    /// Reads `TRANSLATOR_ENDPOINT` and the optional `TRANSLATOR_API_KEY`.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty())?;
        let key = std::env::var(API_KEY_ENV).ok().filter(|s| !s.is_empty());
        Some(Self::new(endpoint, key))
    }

    pub fn with_engine_id(mut self, engine_id: impl Into<String>) -> Self {
        self.engine_id = engine_id.into();
        self
    }

    pub fn with_adapter(mut self, adapter: impl WireAdapter + 'static) -> Self {
        self.adapter = Box::new(adapter);
        self
    }

    /// Spaces consecutive request starts by at least `interval`.
    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = Some(interval);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn throttle(&self) {
        let Some(interval) = self.min_interval else {
            return;
        };
        let mut last = self.last_request.lock().expect("throttle lock poisoned");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < interval {
                std::thread::sleep(interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

impl TranslatorBackend for HttpBackend {
    fn engine_id(&self) -> &str {
        &self.engine_id
    }

    fn translate(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Result<String, BackendError> {
        self.throttle();
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let body = self.adapter.request_body(text, source, target);
        let mut response = request
            .send_json(&body)
            .map_err(|e| BackendError::Unreachable(format!("POST {}: {e}", self.endpoint)))?;

        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            429 => return Err(BackendError::QuotaExceeded(format!("HTTP 429 from {}", self.endpoint))),
            500..=599 => return Err(BackendError::Unreachable(format!("HTTP {status} from {}", self.endpoint))),
            _ => {
                let detail = response.body_mut().read_to_string().unwrap_or_default();
                return Err(BackendError::Rejected(format!("HTTP {status}: {detail}")));
            }
        }
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        self.adapter.parse_response(value)
    }
}
