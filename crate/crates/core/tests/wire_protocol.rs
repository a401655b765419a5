//! The HTTP surface consumed from the NLP adapter service and the sidecar
//! file format, exercised against a loopback server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use adachunk::document::Sidecar;

use adachunk::providers::{
    health, CorefOutcome, CorefProvider, HttpTransport, ProviderError, RemoteCoref, RemoteEmbedder,
    RemoteEmbedderConfig,
};
use adachunk::{load_document, BlockKind, Document, EmbeddingProvider, EntityPronounPair};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    method: String,
    path: String,
    auth: Option<String>,
    body: Value,
}

/// Answers each connection with the next queued `(status, body)`.
struct MockServer {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

impl MockServer {
    fn start(replies: Vec<(u16, Value)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        thread::spawn(move || {
            for (status, reply) in replies {
                let Ok((stream, _)) = listener.accept() else {
                    return;
                };
                let request = read_request(&stream);
                log.lock().unwrap().push(request);
                respond(stream, status, &reply);
            }
        });
        Self { url, seen }
    }

    fn seen(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }

    fn transport(&self, key: Option<&str>) -> HttpTransport {
        HttpTransport::new(
            &format!("{}/", self.url),
            key.map(String::from),
            Duration::from_secs(5),
        )
    }
}

fn read_request(stream: &TcpStream) -> Seen {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    let mut parts = line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();
    let (mut length, mut auth) = (0, None);
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).unwrap();
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        let (name, value) = header.split_once(':').unwrap();
        match name.to_ascii_lowercase().as_str() {
            "content-length" => length = value.trim().parse().unwrap(),
            "authorization" => auth = Some(value.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let body = if body.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&body).unwrap()
    };
    Seen {
        method,
        path,
        auth,
        body,
    }
}

fn respond(mut stream: TcpStream, status: u16, body: &Value) {
    let text = body.to_string();
    let head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        text.len()
    );
    stream.write_all(head.as_bytes()).unwrap();
    stream.write_all(text.as_bytes()).unwrap();
}

fn english(text: &str, language: Option<&str>) -> Document {
    let n = text.chars().count();
    let sidecar = Sidecar {
        blocks: vec![(0, n, BlockKind::Paragraph)],
        language: language.map(String::from),
        ..Default::default()
    };
    Document::new("d", text.to_string(), sidecar).unwrap()
}

fn no_retry(batch_size: usize) -> RemoteEmbedderConfig {
    RemoteEmbedderConfig {
        name: "mock".into(),
        batch_size,
        retries: 0,
        backoff_ms: 1,
        ..Default::default()
    }
}

#[test]
fn embed_posts_texts_and_normalises_vectors() {
    let server = MockServer::start(vec![
        (200, json!({"dim": 2, "vectors": [[3.0, 4.0], [0.0, 0.0]]})),
        (
            200,
            json!({"dim": 2, "vectors": [[0.0, 2.0]], "truncated": [true]}),
        ),
    ]);
    let embedder = RemoteEmbedder::new(server.transport(Some("secret")), no_retry(2));
    let out = embedder.embed_batch(&["first", "", "third"]).unwrap();
    assert_eq!(out[0].values(), &[0.6, 0.8]);
    assert!(out[1].is_zero());
    assert_eq!(out[2].values(), &[0.0, 1.0]);
    assert_eq!(embedder.dimension(), 2);
    assert_eq!(embedder.truncated_count(), 1);
    let seen = server.seen();
    assert_eq!(seen.len(), 2);
    assert!(seen
        .iter()
        .all(|s| s.method == "POST" && s.path == "/embed"));
    assert_eq!(seen[0].body, json!({"texts": ["first", ""]}));
    assert_eq!(seen[1].body, json!({"texts": ["third"]}));
    assert_eq!(seen[0].auth.as_deref(), Some("Bearer secret"));
}

#[test]
fn embed_retries_server_errors() {
    let server = MockServer::start(vec![
        (503, json!({"error": "warming up"})),
        (200, json!({"dim": 1, "vectors": [[2.0]]})),
    ]);
    let cfg = RemoteEmbedderConfig {
        retries: 2,
        ..no_retry(8)
    };
    let embedder = RemoteEmbedder::new(server.transport(None), cfg);
    assert_eq!(embedder.embed_batch(&["x"]).unwrap()[0].values(), &[1.0]);
    assert_eq!(server.seen().len(), 2);
    assert_eq!(server.seen()[0].auth, None);
}

#[test]
fn embed_rejects_protocol_violations() {
    let cases = [
        (200, json!({"dim": 2, "vectors": [[1.0, 0.0]]}), "count"),
        (
            200,
            json!({"dim": 3, "vectors": [[1.0, 0.0], [0.0, 1.0]]}),
            "dimension",
        ),
        (200, json!({"vectors": []}), "protocol"),
        (400, json!({"error": "bad"}), "status"),
    ];
    for (status, reply, kind) in cases {
        let server = MockServer::start(vec![(status, reply)]);
        let err = RemoteEmbedder::new(server.transport(None), no_retry(8))
            .embed_batch(&["a", "b"])
            .unwrap_err();
        let ok = match kind {
            "count" => matches!(
                err,
                ProviderError::CountMismatch {
                    expected: 2,
                    got: 1
                }
            ),
            "dimension" => matches!(err, ProviderError::DimensionMismatch { .. }),
            "protocol" => matches!(err, ProviderError::Protocol(_)),
            _ => matches!(err, ProviderError::Status { status: 400, .. }),
        };
        assert!(ok, "{kind}: {err}");
    }
}

#[test]
fn embed_reports_unreachable_server_as_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let t = HttpTransport::new(
        &format!("http://127.0.0.1:{port}"),
        None,
        Duration::from_secs(2),
    );
    let err = RemoteEmbedder::new(t, no_retry(8))
        .embed_batch(&["a"])
        .unwrap_err();
    assert!(matches!(err, ProviderError::Transport(_)), "{err}");
    assert!(err.is_transient());
}

#[test]
fn health_is_a_get() {
    let server = MockServer::start(vec![(
        200,
        json!({"ok": true, "models": {"embed": "e5", "coref": null}}),
    )]);
    let h = health(&server.transport(None)).unwrap();
    assert!(h.ok);
    assert_eq!(h.models["embed"], json!("e5"));
    let seen = server.seen();
    assert_eq!(
        (seen[0].method.as_str(), seen[0].path.as_str()),
        ("GET", "/health")
    );
}

#[test]
fn coref_accepts_pairs() {
    let text = "Zoë ate. She left.";
    let server = MockServer::start(vec![(
        200,
        json!({"pairs": [{"entity_start": 0, "pronoun_end": 12, "entity_text": "Zoë", "pronoun_text": "She"}]}),
    )]);
    let outcome = RemoteCoref::new(server.transport(None))
        .extract_pairs(&english(text, Some("en")))
        .unwrap();
    let expected = EntityPronounPair {
        entity_start: 0,
        pronoun_end: 12,
        entity_text: "Zoë".into(),
        pronoun_text: "She".into(),
    };
    assert_eq!(outcome, CorefOutcome::Pairs(vec![expected]));
    assert_eq!(server.seen()[0].path, "/coref");
    assert_eq!(server.seen()[0].body, json!({"text": text}));
}

#[test]
fn coref_maps_clusters_client_side() {
    let server = MockServer::start(vec![(200, json!({"clusters": [[[0, 5], [17, 20]]]}))]);
    let doc = english("Alice went home. She slept.", Some("en"));
    let CorefOutcome::Pairs(pairs) = RemoteCoref::new(server.transport(None))
        .extract_pairs(&doc)
        .unwrap()
    else {
        panic!("expected pairs");
    };
    assert_eq!((pairs[0].entity_start, pairs[0].pronoun_end), (0, 20));
    assert_eq!(pairs[0].pronoun_text, "She");
}

#[test]
fn coref_rejects_out_of_range_pairs() {
    let server = MockServer::start(vec![(
        200,
        json!({"pairs": [{"entity_start": 0, "pronoun_end": 99}]}),
    )]);
    let err = RemoteCoref::new(server.transport(None))
        .extract_pairs(&english("short", Some("en")))
        .unwrap_err();
    assert!(matches!(err, ProviderError::Protocol(_)));
}

#[test]
fn coref_skips_non_english_without_a_request() {
    let server = MockServer::start(vec![]);
    let outcome = RemoteCoref::new(server.transport(None))
        .extract_pairs(&english("Il dort.", Some("fr")))
        .unwrap();
    assert_eq!(outcome, CorefOutcome::NotApplicable);
    assert!(server.seen().is_empty());
}

#[test]
fn sidecar_round_trips_through_json() {
    let raw = json!({
        "blocks": [[0, 8, "title"], [8, 30, "paragraph"], [30, 40, "header_footer"], [40, 45, "caption"]],
        "page_breaks": [30],
        "sentences": [[8, 20], [21, 29]],
        "coref_pairs": [{"entity_start": 8, "pronoun_end": 25, "entity_text": "Ann", "pronoun_text": "she"}],
        "language": "en"
    });
    let sidecar: Sidecar = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(sidecar.blocks[3].2, BlockKind::Other);
    let back: Sidecar = serde_json::from_value(serde_json::to_value(&sidecar).unwrap()).unwrap();
    assert_eq!(back, sidecar);
    let minimal: Sidecar =
        serde_json::from_value(json!({"blocks": [[0, 3, "paragraph"]]})).unwrap();
    assert_eq!(
        serde_json::to_value(&minimal).unwrap(),
        json!({"blocks": [[0, 3, "paragraph"]]})
    );
}

#[test]
fn sidecar_loads_with_markdown_and_records_missing_fields() {
    let dir = tempfile::tempdir().unwrap();
    let text = "# Título\n\nÉlan vital.\n";
    let n = text.chars().count();
    std::fs::write(dir.path().join("note.md"), text).unwrap();
    let sidecar = json!({"blocks": [[0, 10, "title"], [10, n, "paragraph"]]});
    std::fs::write(dir.path().join("note.json"), sidecar.to_string()).unwrap();
    let doc = load_document(&dir.path().join("note.md"), &dir.path().join("note.json")).unwrap();
    assert_eq!(doc.id, "note");
    assert_eq!(doc.len(), n);
    assert_eq!(doc.slice(10, n), "Élan vital.\n");
    assert!(doc.missing.contains(&"coref_pairs"));
    assert!(doc.missing.contains(&"language"));

    std::fs::write(
        dir.path().join("note.json"),
        json!({"blocks": [[0, 4, "title"]]}).to_string(),
    )
    .unwrap();
    assert!(load_document(&dir.path().join("note.md"), &dir.path().join("note.json")).is_err());
}
