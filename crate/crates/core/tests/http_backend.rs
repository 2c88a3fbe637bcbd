//! HTTP backend against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use btdetect::translator::{BackendError, HttpBackend, RetryPolicy, TranslationCache, Translator, TranslatorBackend};
use btdetect::LanguageTag;
use serde_json::Value;

#[derive(Debug, Clone)]
struct Seen {
    authorization: Option<String>,
    body: Value,
}

/// Serves one scripted `(status, body)` per connection, then closes.
/// Returns the endpoint URL and the requests received.
fn serve(script: Vec<(u16, &'static str)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/translate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream);
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((name, value)) = line.split_once(':') {
                    match name.to_ascii_lowercase().as_str() {
                        "content-length" => length = value.trim().parse().unwrap(),
                        "authorization" => authorization = Some(value.trim().to_string()),
                        _ => {}
                    }
                }
            }
            let mut raw = vec![0; length];
            reader.read_exact(&mut raw).unwrap();
            log.lock().unwrap().push(Seen {
                authorization,
                body: serde_json::from_slice(&raw).unwrap_or(Value::Null),
            });
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, seen)
}

fn tags() -> (LanguageTag, LanguageTag) {
    (LanguageTag::new("en").unwrap(), LanguageTag::new("fr").unwrap())
}

#[test]
fn posts_json_and_reads_translation() {
    let (url, seen) = serve(vec![(200, r#"{"translation":"bonjour"}"#)]);
    let (en, fr) = tags();
    let backend = HttpBackend::new(url, Some("k3y".into()));
    assert_eq!(backend.translate("hello", &en, &fr).unwrap(), "bonjour");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer k3y"));
    assert_eq!(seen[0].body, serde_json::json!({"text": "hello", "source": "en", "target": "fr"}));
}

#[test]
fn status_codes_map_to_error_kinds() {
    let (en, fr) = tags();
    for (status, body, check) in [
        (429u16, "{}", (|e: &BackendError| matches!(e, BackendError::QuotaExceeded(_))) as fn(&BackendError) -> bool),
        (503, "{}", |e| matches!(e, BackendError::Unreachable(_))),
        (400, "bad", |e| matches!(e, BackendError::Rejected(_))),
        (200, r#"{"text":"x"}"#, |e| matches!(e, BackendError::MalformedResponse(_))),
        (200, "not json", |e| matches!(e, BackendError::MalformedResponse(_))),
    ] {
        let (url, _) = serve(vec![(status, body)]);
        let err = HttpBackend::new(url, None).translate("a", &en, &fr).unwrap_err();
        assert!(check(&err), "status {status} gave {err:?}");
    }
}

#[test]
fn server_errors_are_retried_then_cached() {
    let (url, seen) = serve(vec![(500, "{}"), (200, r#"{"translation":"chat"}"#)]);
    let (en, fr) = tags();
    let translator = Translator::new(HttpBackend::new(url, None))
        .with_retry(RetryPolicy {
            max_retries: 2,
            initial_backoff: Duration::from_millis(1),
        })
        .with_cache(Arc::new(TranslationCache::in_memory()));
    assert_eq!(translator.translate("cat", &en, &fr).unwrap(), "chat");
    assert_eq!(translator.backend_calls(), 2);
    // served from cache; the server has no script left
    assert_eq!(translator.translate("cat", &en, &fr).unwrap(), "chat");
    assert_eq!(translator.backend_calls(), 2);
    assert_eq!(seen.lock().unwrap().len(), 2);
}

#[test]
fn quota_errors_are_not_retried() {
    let (url, _) = serve(vec![(429, "{}"), (200, r#"{"translation":"x"}"#)]);
    let (en, fr) = tags();
    let translator = Translator::new(HttpBackend::new(url, None)).with_retry(RetryPolicy {
        max_retries: 3,
        initial_backoff: Duration::from_millis(1),
    });
    let err = translator.translate("a", &en, &fr).unwrap_err();
    assert!(matches!(err.backend_error(), Some(BackendError::QuotaExceeded(_))));
    assert_eq!(translator.backend_calls(), 1);
}

#[test]
fn closed_port_is_unreachable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let (en, fr) = tags();
    let err = HttpBackend::new(format!("http://127.0.0.1:{port}/t"), None)
        .translate("a", &en, &fr)
        .unwrap_err();
    assert!(matches!(err, BackendError::Unreachable(_)));
}

#[test]
fn min_interval_spaces_requests() {
    let (url, _) = serve(vec![(200, r#"{"translation":"a"}"#), (200, r#"{"translation":"b"}"#)]);
    let (en, fr) = tags();
    let backend = HttpBackend::new(url, None).with_min_interval(Duration::from_millis(150));
    let start = std::time::Instant::now();
    backend.translate("1", &en, &fr).unwrap();
    backend.translate("2", &en, &fr).unwrap();
    assert!(start.elapsed() >= Duration::from_millis(150));
}
