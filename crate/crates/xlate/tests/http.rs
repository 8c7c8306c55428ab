use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use xlate::http::{HttpBackend, HttpConfig};
use xlate_core::gateway::{Backend, BackendError};
use xlate_core::prompt::{bindings, render_prompt, GenerationParams, PromptTemplateId};

/// Serves one canned response and hands back the request it received.
fn serve_once(status: &str, body: &str) -> (String, mpsc::Receiver<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    let status = status.to_string();
    let body = body.to_string();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut len = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
            head.push_str(&line);
        }
        let mut req = vec![0u8; len];
        reader.read_exact(&mut req).unwrap();
        let mut stream = stream;
        write!(stream, "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
        stream.flush().unwrap();
        tx.send((head, String::from_utf8(req).unwrap())).unwrap();
    });
    (format!("http://{addr}/v1"), rx)
}

fn backend(endpoint: String) -> HttpBackend {
    HttpBackend::new(HttpConfig {
        endpoint,
        api_key: "test-key".into(),
        model: Some("local-model".into()),
        timeout: Duration::from_secs(10),
        backoff: Duration::ZERO,
    })
}

fn prompt() -> xlate_core::prompt::PromptInstance {
    let b = bindings([("source_lang", "C"), ("target_lang", "Python"), ("source_code", "int main(){}")]);
    render_prompt(PromptTemplateId::Translate, &b).unwrap()
}

#[test]
fn completion_round_trip() {
    let (url, rx) = serve_once("200 OK", r#"{"choices":[{"message":{"role":"assistant","content":"```python\nprint(1)\n```"}}]}"#);
    let text = backend(url).complete(&prompt(), &GenerationParams::default()).unwrap();
    assert_eq!(text, "```python\nprint(1)\n```");
    let (head, body) = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert!(head.starts_with("POST /v1/chat/completions"), "{head}");
    assert!(head.to_ascii_lowercase().contains("authorization: bearer test-key"));
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["model"], "local-model");
    assert_eq!(v["temperature"], 0.8);
    assert_eq!(v["max_tokens"], 8000);
    assert_eq!(v["messages"][0]["role"], "system");
}

#[test]
fn rate_limit_is_transient() {
    let (url, _rx) = serve_once("429 Too Many Requests", r#"{"error":"slow down"}"#);
    match backend(url).complete(&prompt(), &GenerationParams::default()) {
        Err(BackendError::Unavailable { transient, message }) => {
            assert!(transient);
            assert!(message.contains("429"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn client_error_is_permanent() {
    let (url, _rx) = serve_once("400 Bad Request", r#"{"error":"bad"}"#);
    match backend(url).complete(&prompt(), &GenerationParams::default()) {
        Err(BackendError::Unavailable { transient, .. }) => assert!(!transient),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_content_is_an_error() {
    let (url, _rx) = serve_once("200 OK", r#"{"choices":[]}"#);
    assert!(backend(url).complete(&prompt(), &GenerationParams::default()).is_err());
}
