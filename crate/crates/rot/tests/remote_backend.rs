//! Remote backend behavior against a local stub server: retry on
//! transient statuses, no retry on client errors, at most one accepted
//! completion per request, and usage passthrough.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rot::backend::{Backend, BackendKind, GenerationRequest, RemoteBackend, RetryPolicy};
use rot::prompt::{ChatMessage, Role};
use rot::Error;

/// Serve `responses` (status, body) in order, one per connection;
/// returns (base_url, request_counter).
fn stub_server(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_server = Arc::clone(&hits);
    std::thread::spawn(move || {
        for (status, body) in responses {
            let Ok((mut stream, _)) = listener.accept() else {
                return;
            };
            // Drain the request: headers, then content-length bytes of body.
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).is_err() || line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = v.trim().parse().unwrap_or(0);
                }
            }
            let mut request_body = vec![0u8; content_length];
            let _ = reader.read_exact(&mut request_body);
            hits_server.fetch_add(1, Ordering::SeqCst);

            let reason = match status {
                200 => "OK",
                429 => "Too Many Requests",
                400 => "Bad Request",
                _ => "Internal Server Error",
            };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (format!("http://{addr}"), hits)
}

fn ok_body(text: &str, completion_tokens: usize) -> String {
    format!(
        r#"{{"choices":[{{"message":{{"role":"assistant","content":"{text}"}}}}],"usage":{{"prompt_tokens":12,"completion_tokens":{completion_tokens}}}}}"#
    )
}

fn request() -> GenerationRequest {
    GenerationRequest::new(
        vec![ChatMessage::new(Role::User, "2+2?")],
        "stub-model",
        "req-stub",
    )
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        base: Duration::from_millis(1),
        factor: 2,
        max_attempts: 5,
    }
}

#[test]
fn transient_errors_are_retried_until_success() {
    let (url, hits) = stub_server(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("Final Answer: 4", 5)),
    ]);
    let backend = RemoteBackend::new(&url, Some("key".into()))
        .unwrap()
        .with_retry(fast_retry());
    let result = backend.generate(&request()).unwrap();
    assert_eq!(result.text, "Final Answer: 4");
    assert_eq!(result.backend, BackendKind::Remote);
    assert_eq!(result.completion_tokens, Some(5));
    assert!(!result.tokens_estimated);
    assert_eq!(result.prompt_tokens, Some(12));
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn success_is_accepted_exactly_once() {
    let (url, hits) = stub_server(vec![
        (200, ok_body("done", 1)),
        (200, ok_body("should never be fetched", 1)),
    ]);
    let backend = RemoteBackend::new(&url, Some("key".into()))
        .unwrap()
        .with_retry(fast_retry());
    let result = backend.generate(&request()).unwrap();
    assert_eq!(result.text, "done");
    // Give any stray retry a moment to land, then confirm there was none.
    std::thread::sleep(Duration::from_millis(30));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn client_errors_fail_without_retry() {
    let (url, hits) = stub_server(vec![(400, r#"{"error":"bad request"}"#.into())]);
    let backend = RemoteBackend::new(&url, Some("key".into()))
        .unwrap()
        .with_retry(fast_retry());
    match backend.generate(&request()) {
        Err(Error::Endpoint { attempts, .. }) => assert_eq!(attempts, 1),
        other => panic!("expected endpoint error, got {other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn persistent_5xx_exhausts_all_attempts() {
    let (url, hits) = stub_server(vec![(503, "{}".into()); 5]);
    let backend = RemoteBackend::new(&url, Some("key".into()))
        .unwrap()
        .with_retry(fast_retry());
    match backend.generate(&request()) {
        Err(Error::Endpoint { attempts, message }) => {
            assert_eq!(attempts, 5);
            assert!(message.contains("503"), "message was {message:?}");
        }
        other => panic!("expected endpoint error, got {other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 5);
}

#[test]
fn missing_usage_flags_estimated_tokens() {
    let body = r#"{"choices":[{"message":{"role":"assistant","content":"three words here"}}]}"#;
    let (url, _) = stub_server(vec![(200, body.into())]);
    let backend = RemoteBackend::new(&url, Some("key".into()))
        .unwrap()
        .with_retry(fast_retry());
    let result = backend.generate(&request()).unwrap();
    assert_eq!(result.completion_tokens, None);
    assert!(result.tokens_estimated);
    assert_eq!(
        rot::trace::count_tokens(&result.text, result.completion_tokens),
        3
    );
}
