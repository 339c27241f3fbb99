//! In-process mock of an OpenAI-compatible completions endpoint.
//!
//! Speaks just enough HTTP/1.1 over a loopback listener for the runner's
//! client: POST {base}/completions with a JSON body, JSON response with
//! `choices[0].text`. The server honors `stop` sequences server-side,
//! records every request, and instruments concurrency so tests can assert
//! the client's parallelism bound.

use serde::Deserialize;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

/// One captured completion request, parsed from the wire.
#[derive(Debug, Clone, Deserialize)]
pub struct CapturedRequest {
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub prompt: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub max_tokens: u32,
    #[serde(default)]
    pub stop: Vec<String>,
    /// Request path, e.g. "/completions"; not part of the JSON body.
    #[serde(skip)]
    pub path: String,
    /// Authorization header, if the client sent one.
    #[serde(skip)]
    pub authorization: Option<String>,
}

type Responder = dyn Fn(&str) -> String + Send + Sync;

struct ServerState {
    respond: Box<Responder>,
    requests: Mutex<Vec<CapturedRequest>>,
    in_flight: AtomicUsize,
    high_water: AtomicUsize,
    latency_ms: AtomicU64,
    fail_next: AtomicUsize,
    raw_response: Mutex<Option<String>>,
    shutdown: AtomicBool,
}

/// A loopback completions endpoint for tests. Shuts down on drop.
pub struct MockServer {
    addr: SocketAddr,
    state: Arc<ServerState>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Start a server whose completion text is `respond(prompt)`. The text
    /// is truncated at the first requested stop sequence, mirroring how a
    /// real endpoint applies `stop`.
    pub fn start<F>(respond: F) -> MockServer
    where
        F: Fn(&str) -> String + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback listener");
        let addr = listener.local_addr().expect("listener address");
        let state = Arc::new(ServerState {
            respond: Box::new(respond),
            requests: Mutex::new(Vec::new()),
            in_flight: AtomicUsize::new(0),
            high_water: AtomicUsize::new(0),
            latency_ms: AtomicU64::new(0),
            fail_next: AtomicUsize::new(0),
            raw_response: Mutex::new(None),
            shutdown: AtomicBool::new(false),
        });
        let loop_state = Arc::clone(&state);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if loop_state.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let conn_state = Arc::clone(&loop_state);
                std::thread::spawn(move || handle_connection(stream, &conn_state));
            }
        });
        MockServer { addr, state, handle: Some(handle) }
    }

    /// Base URL to hand to the client (no trailing slash).
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<CapturedRequest> {
        self.state.requests.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.requests.lock().unwrap().len()
    }

    /// Highest number of simultaneously open requests seen so far.
    pub fn max_in_flight(&self) -> usize {
        self.state.high_water.load(Ordering::SeqCst)
    }

    /// Hold every request open this long before responding, so overlapping
    /// requests are observable.
    pub fn set_latency_ms(&self, ms: u64) {
        self.state.latency_ms.store(ms, Ordering::SeqCst);
    }

    /// Answer the next `n` requests with HTTP 500.
    pub fn fail_next(&self, n: usize) {
        self.state.fail_next.store(n, Ordering::SeqCst);
    }

    /// Override the response body verbatim (still HTTP 200), for exercising
    /// protocol-error handling. `None` restores normal behavior.
    pub fn set_raw_response(&self, body: Option<String>) {
        *self.state.raw_response.lock().unwrap() = body;
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.state.shutdown.store(true, Ordering::SeqCst);
        // Poke the listener so the accept loop notices the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(mut stream: TcpStream, state: &ServerState) {
    if state.shutdown.load(Ordering::SeqCst) {
        return;
    }
    let Some((path, authorization, body)) = read_request(&mut stream) else { return };

    let parsed: Result<CapturedRequest, _> = serde_json::from_str(&body);
    let Ok(mut request) = parsed else {
        write_response(&mut stream, 400, r#"{"error":"malformed JSON body"}"#);
        return;
    };
    request.path = path;
    request.authorization = authorization;
    let prompt = request.prompt.clone();
    let stop = request.stop.clone();
    state.requests.lock().unwrap().push(request);

    let live = state.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    state.high_water.fetch_max(live, Ordering::SeqCst);
    let ms = state.latency_ms.load(Ordering::SeqCst);
    if ms > 0 {
        std::thread::sleep(Duration::from_millis(ms));
    }

    let failing = state
        .fail_next
        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
        .is_ok();
    if failing {
        write_response(&mut stream, 500, r#"{"error":"injected failure"}"#);
    } else if let Some(raw) = state.raw_response.lock().unwrap().clone() {
        write_response(&mut stream, 200, &raw);
    } else {
        let mut text = (state.respond)(&prompt);
        for s in &stop {
            if let Some(at) = text.find(s.as_str()) {
                text.truncate(at);
            }
        }
        let body = serde_json::json!({
            "id": "cmpl-mock",
            "object": "text_completion",
            "choices": [{ "text": text, "index": 0, "finish_reason": "stop" }],
        });
        write_response(&mut stream, 200, &body.to_string());
    }
    state.in_flight.fetch_sub(1, Ordering::SeqCst);
}

/// Read one HTTP/1.1 request; returns (path, authorization, body).
fn read_request(stream: &mut TcpStream) -> Option<(String, Option<String>, String)> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        if let Some(at) = find_subslice(&buf, b"\r\n\r\n") {
            break at;
        }
        let n = stream.read(&mut chunk).ok()?;
        if n == 0 {
            return None;
        }
        buf.extend_from_slice(&chunk[..n]);
    };
    let head = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let mut lines = head.lines();
    let request_line = lines.next()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut content_length = 0usize;
    let mut authorization = None;
    for line in lines {
        let Some((name, value)) = line.split_once(':') else { continue };
        let value = value.trim();
        if name.eq_ignore_ascii_case("content-length") {
            content_length = value.parse().ok()?;
        } else if name.eq_ignore_ascii_case("authorization") {
            authorization = Some(value.to_string());
        }
    }
    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut chunk).ok()?;
        if n == 0 {
            break;
        }
        body.extend_from_slice(&chunk[..n]);
    }
    body.truncate(content_length);
    Some((path, authorization, String::from_utf8_lossy(&body).to_string()))
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

fn write_response(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        500 => "Internal Server Error",
        _ => "Unknown",
    };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\n\
         Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post_raw(addr: &SocketAddr, body: &str) -> String {
        let mut stream = TcpStream::connect(addr).unwrap();
        let request = format!(
            "POST /completions HTTP/1.1\r\nHost: localhost\r\n\
             Content-Type: application/json\r\nAuthorization: Bearer sk-test\r\n\
             Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        stream.write_all(request.as_bytes()).unwrap();
        let mut out = String::new();
        stream.read_to_string(&mut out).unwrap();
        out
    }

    #[test]
    fn serves_completions_and_applies_stop() {
        let server = MockServer::start(|prompt| format!("echo: {prompt}\nsecond line"));
        let addr = server.addr;
        let response = post_raw(
            &addr,
            r#"{"model":"m","prompt":"hi","temperature":0.0,"max_tokens":150,"stop":["\n"]}"#,
        );
        assert!(response.starts_with("HTTP/1.1 200 OK\r\n"));
        let body = response.split("\r\n\r\n").nth(1).unwrap();
        let json: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(json["choices"][0]["text"], "echo: hi");

        let captured = server.requests();
        assert_eq!(captured.len(), 1);
        assert_eq!(captured[0].path, "/completions");
        assert_eq!(captured[0].prompt, "hi");
        assert_eq!(captured[0].max_tokens, 150);
        assert_eq!(captured[0].stop, vec!["\n"]);
        assert_eq!(captured[0].authorization.as_deref(), Some("Bearer sk-test"));
    }

    #[test]
    fn injected_failures_return_500_then_recover() {
        let server = MockServer::start(|_| "ok".to_string());
        server.fail_next(1);
        let addr = server.addr;
        let first = post_raw(&addr, r#"{"prompt":"a"}"#);
        assert!(first.starts_with("HTTP/1.1 500"));
        let second = post_raw(&addr, r#"{"prompt":"a"}"#);
        assert!(second.starts_with("HTTP/1.1 200"));
        assert_eq!(server.request_count(), 2);
    }

    #[test]
    fn tracks_overlapping_requests() {
        let server = MockServer::start(|_| "ok".to_string());
        server.set_latency_ms(60);
        let addr = server.addr;
        let threads: Vec<_> = (0..3)
            .map(|i| {
                std::thread::spawn(move || post_raw(&addr, &format!(r#"{{"prompt":"p{i}"}}"#)))
            })
            .collect();
        for t in threads {
            assert!(t.join().unwrap().starts_with("HTTP/1.1 200"));
        }
        assert!(server.max_in_flight() >= 2, "overlap should be observed");
        assert!(server.max_in_flight() <= 3);
    }
}
