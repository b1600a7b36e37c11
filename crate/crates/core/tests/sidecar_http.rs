//! Wire compatibility of the sidecar client against a minimal in-process HTTP
//! server: recorded fixtures for the exact protocol shapes, and a live fake
//! backed by the mock providers for end-to-end equivalence.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use common::*;
use kbmap::align::{knn_align, AlignDirection, KnnConfig};
use kbmap::embed::{EmbeddingProvider, MockEmbedder};
use kbmap::sidecar::{EmbedRequest, EmbedResponse, GenerateRequest, PromptCandidates, SidecarClient};
use kbmap::translate::{generations_to_jsonl, translate_kb, Generator, MockGenerator, TranslateConfig};
use serde_json::Value;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

struct Request {
    method: String,
    path: String,
    body: String,
}

type Handler = dyn Fn(&Request) -> (u16, String) + Send + Sync;
type Log = Arc<Mutex<Vec<(String, String, String)>>>;

/// Serves until the test process exits. Returns the base URL and a log of
/// received requests.
fn serve(handler: Arc<Handler>) -> (String, Log) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&log);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            if reader.read_line(&mut line).is_err() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let method = parts.next().unwrap_or_default().to_string();
            let path = parts.next().unwrap_or_default().to_string();
            let mut length = 0;
            loop {
                let mut header = String::new();
                reader.read_line(&mut header).unwrap();
                let header = header.trim_end();
                if header.is_empty() {
                    break;
                }
                if let Some((name, value)) = header.split_once(':') {
                    if name.eq_ignore_ascii_case("content-length") {
                        length = value.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let req = Request {
                method,
                path,
                body: String::from_utf8(body).unwrap(),
            };
            seen.lock()
                .unwrap()
                .push((req.method.clone(), req.path.clone(), req.body.clone()));
            let (status, body) = handler(&req);
            let reason = if status == 200 { "OK" } else { "Error" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (url, log)
}

fn client(url: &str) -> SidecarClient {
    SidecarClient::new(url, Duration::from_secs(10))
}

fn recorded() -> Arc<Handler> {
    Arc::new(|req: &Request| match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/health") => (200, fixture("health_response.json")),
        ("POST", "/embed") => {
            let body = json(&req.body);
            if body["texts"].as_array().is_some_and(|t| t.is_empty()) {
                (200, fixture("embed_empty_response.json"))
            } else if body == json(&fixture("embed_request.json")) {
                (200, fixture("embed_response.json"))
            } else {
                (400, fixture("error_response.json"))
            }
        }
        ("POST", "/generate") => {
            if json(&req.body) == json(&fixture("generate_request.json")) {
                (200, fixture("generate_response.json"))
            } else {
                (400, fixture("error_response.json"))
            }
        }
        _ => (404, r#"{"error": "not found"}"#.to_string()),
    })
}

#[test]
fn recorded_fixtures_deserialize_into_protocol_types() {
    let req: EmbedRequest = serde_json::from_str(&fixture("embed_request.json")).unwrap();
    assert_eq!(req.texts.len(), 3);
    let resp: EmbedResponse = serde_json::from_str(&fixture("embed_response.json")).unwrap();
    assert_eq!(resp.dim, 4);
    let req: GenerateRequest = serde_json::from_str(&fixture("generate_request.json")).unwrap();
    assert_eq!(req.k, 3);
    let resp: Vec<PromptCandidates> = serde_json::from_str(&fixture("generate_response.json")).unwrap();
    assert_eq!(resp.len(), 2);
    assert_eq!(resp[0].candidates[1].rank, 1);
}

#[test]
fn embed_round_trip_against_recorded_responses() {
    let (url, log) = serve(recorded());
    let c = client(&url);
    let req: EmbedRequest = serde_json::from_str(&fixture("embed_request.json")).unwrap();
    let vectors = c.embed(&req.texts).unwrap();
    assert_eq!(vectors.len(), 3);
    assert_eq!(vectors[0], vec![0.6, 0.8, 0.0, 0.0]);
    assert_eq!(vectors[0], vectors[2]);
    for v in &vectors {
        let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!((norm - 1.0).abs() < 1e-4);
    }
    assert!(c.embed(&[]).unwrap().is_empty());

    let log = log.lock().unwrap();
    assert_eq!((log[0].0.as_str(), log[0].1.as_str()), ("POST", "/embed"));
    assert_eq!(json(&log[0].2), json(&fixture("embed_request.json")));
}

#[test]
fn generate_round_trip_against_recorded_responses() {
    let (url, log) = serve(recorded());
    let c = client(&url);
    let req: GenerateRequest = serde_json::from_str(&fixture("generate_request.json")).unwrap();
    let out = c.generate(&req.prompts, req.k).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(out[0].len(), 3);
    assert_eq!(out[1][0].text, "bird, can, fly [SEP] bird, CapableOf, fly");
    assert_eq!(json(&log.lock().unwrap()[0].2), json(&fixture("generate_request.json")));

    // the same response fed through translation: the arity failure is counted
    let kb = kbmap::OpenKb::new(
        "o",
        vec![
            kbmap::OpenTriple::new("fish", "live in", "water"),
            kbmap::OpenTriple::new("bird", "can", "fly"),
        ],
    );
    let config = TranslateConfig { k: 3, ..TranslateConfig::default() };
    let t = translate_kb(&kb, &c, &schema(), config).unwrap();
    let texts: Vec<String> = t
        .generations
        .iter()
        .map(|g| format!("{}|{}|{}|{}", g.candidate.subject, g.candidate.relation, g.candidate.object, g.rank))
        .collect();
    assert_eq!(texts, ["fish|AtLocation|water|0", "fish|CapableOf|swim|1", "bird|CapableOf|fly|0"]);
    assert_eq!(t.rejected.values().sum::<usize>(), 1);
}

#[test]
fn health_and_errors() {
    let (url, _) = serve(recorded());
    let c = client(&url);
    let health = c.health().unwrap();
    assert_eq!(health["dim"], 4);

    let err = c.generate(&["other [SEP] ".to_string()], 99).unwrap_err().to_string();
    assert!(err.contains("400") && err.contains("k must be between 1 and 50"), "{err}");
    let err = c.embed(&["unrecorded".to_string()]).unwrap_err();
    assert!(matches!(err, kbmap::Error::Embedding { .. }), "{err}");

    let bad = client(&format!("{url}/nowhere"));
    assert!(bad.health().is_err());
}

#[test]
fn malformed_responses_are_rejected() {
    let (url, _) = serve(Arc::new(|req: &Request| match req.path.as_str() {
        "/embed" => (200, r#"{"embeddings": [[1.0, 0.0], [1.0]], "dim": 2}"#.to_string()),
        "/generate" => (200, r#"[{"candidates": []}]"#.to_string()),
        _ => (200, "not json".to_string()),
    }));
    let c = client(&url);
    assert!(c.embed(&["a".into(), "b".into()]).is_err());
    assert!(c.generate(&["a".into(), "b".into()], 1).is_err());
    assert!(c.health().is_err());
}

#[test]
fn unreachable_sidecar_is_an_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let c = SidecarClient::new(format!("http://127.0.0.1:{port}"), Duration::from_secs(2));
    assert!(c.embed(&["a".into()]).is_err());
}

/// A fake sidecar that answers with the in-repo mocks, so results through
/// HTTP can be compared with direct calls.
fn mock_backed(dim: usize) -> Arc<Handler> {
    let embedder = MockEmbedder::new(dim);
    let generator = MockGenerator::hashed(&schema());
    Arc::new(move |req: &Request| match req.path.as_str() {
        "/embed" => {
            let r: EmbedRequest = serde_json::from_str(&req.body).unwrap();
            let embeddings = embedder.embed(&r.texts).unwrap();
            (200, serde_json::to_string(&EmbedResponse { embeddings, dim }).unwrap())
        }
        "/generate" => {
            let r: GenerateRequest = serde_json::from_str(&req.body).unwrap();
            let out: Vec<PromptCandidates> = generator
                .generate(&r.prompts, r.k)
                .unwrap()
                .into_iter()
                .map(|candidates| PromptCandidates { candidates })
                .collect();
            (200, serde_json::to_string(&out).unwrap())
        }
        _ => (200, format!(r#"{{"dim": {dim}}}"#)),
    })
}

#[test]
fn http_and_in_process_providers_agree() {
    let (url, log) = serve(mock_backed(16));
    let c = client(&url);
    let mut r = rng(4);
    let open = random_open_kb(&mut r, 40);
    let closed = random_closed_kb(&mut r, 40);
    for direction in [AlignDirection::OpenToClosed, AlignDirection::ClosedToOpen] {
        let config = KnnConfig { direction, top_k: 25, batch_size: 16, concurrency: 2 };
        let via_http = knn_align(&open, &closed, &c, config).unwrap();
        let direct = knn_align(&open, &closed, &MockEmbedder::new(16), config).unwrap();
        assert_eq!(via_http.alignments(), direct.alignments());
    }
    let config = TranslateConfig { k: 4, batch_size: 8, concurrency: 3 };
    let via_http = translate_kb(&open, &c, &schema(), config).unwrap();
    let direct = translate_kb(&open, &MockGenerator::hashed(&schema()), &schema(), config).unwrap();
    assert_eq!(
        generations_to_jsonl(&via_http.generations).unwrap(),
        generations_to_jsonl(&direct.generations).unwrap()
    );
    let log = log.lock().unwrap();
    let embeds = log.iter().filter(|(_, p, _)| p == "/embed").count();
    assert_eq!(embeds, 2 * (80usize).div_ceil(16));
    assert_eq!(log.iter().filter(|(_, p, _)| p == "/generate").count(), 40usize.div_ceil(8));
}
