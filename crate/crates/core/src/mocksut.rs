//! A small HTTP service with one endpoint per observable flakiness source.
//!
//! | endpoint              | behaviour                                          |
//! |-----------------------|----------------------------------------------------|
//! | `GET /price/estimate` | `{base, jitter, total}`, jitter uniform in 0..=9   |
//! | `GET /time`           | current timestamp                                  |
//! | `GET /token`          | fresh UUID                                         |
//! | `GET /hash?pw=`       | salted SHA-256 digest                              |
//! | `GET /tags`           | fixed tag set in shuffled order                    |
//! | `POST /malformed`     | 400 with an identity hash and a stack frame        |
//! | `GET /counter`        | per-process increasing integer                     |
//! | `GET /stable`         | constant document                                  |
//! | `GET /wrong`          | constant document that contradicts the fixture     |
//!
//! With `deterministic_mode` every endpoint is a pure function of its request.
//! With a seed, the random source and the clock behind `/time` are derived
//! from the seed, so a seeded process replays the same response sequence.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use chrono::{Duration as ChronoDuration, NaiveDateTime, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tiny_http::{Header, Method, Request, Response, Server};

pub const FIXTURE_SUITE: &str = include_str!("../fixtures/mock_suite.json");

pub const FROZEN_TIME: &str = "2026-12-03T06:38:31.272230";
pub const FROZEN_TOKEN: &str = "3f2b8c1e-9d4a-4e7b-8c6f-1a2b3c4d5e6f";
pub const FROZEN_JITTER: u32 = 3;
const FROZEN_SALT: &[u8] = b"fixed-salt";
const FROZEN_STREAM: &str = "java.io.ByteArrayInputStream@72c11c70";
const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.6f";
pub const TAGS: [&str; 8] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"];

#[derive(Debug, Error)]
pub enum MockError {
    #[error("cannot bind mock SUT on port {port}: {reason}")]
    Bind { port: u16, reason: String },
}

#[derive(Debug, Clone, Default)]
pub struct MockConfig {
    /// 0 picks a free port.
    pub port: u16,
    pub seed: Option<u64>,
    pub deterministic_mode: bool,
}

struct State {
    rng: StdRng,
    counter: u64,
    /// Logical clock for seeded runs; `None` means wall-clock time.
    clock: Option<NaiveDateTime>,
}

pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(config: MockConfig) -> Result<Self, MockError> {
        let server = Server::http(("127.0.0.1", config.port)).map_err(|e| MockError::Bind {
            port: config.port,
            reason: e.to_string(),
        })?;
        let addr = server
            .server_addr()
            .to_ip()
            .expect("bound to an IP address");
        let server = Arc::new(server);
        let state = Mutex::new(State {
            rng: match config.seed {
                Some(s) => StdRng::seed_from_u64(s),
                None => StdRng::from_entropy(),
            },
            counter: 0,
            clock: config
                .seed
                .map(|_| NaiveDateTime::parse_from_str(FROZEN_TIME, TIME_FORMAT).expect("valid constant")),
        });
        let deterministic = config.deterministic_mode;
        let srv = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for request in srv.incoming_requests() {
                handle(request, &state, deterministic);
            }
        });
        log::info!("mock SUT listening on http://{addr}");
        Ok(Self {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server is stopped from another thread.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn serve(config: MockConfig) -> Result<MockServer, MockError> {
    MockServer::start(config)
}

fn handle(mut request: Request, state: &Mutex<State>, deterministic: bool) {
    let url = request.url().to_string();
    let (path, query) = url.split_once('?').unwrap_or((url.as_str(), ""));
    let params: Vec<(String, String)> = url::form_urlencoded::parse(query.as_bytes()).into_owned().collect();
    let param = |k: &str| params.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
    let mut body = String::new();
    let _ = request.as_reader().read_to_string(&mut body);

    let method = request.method().clone();
    let (status, doc) = {
        let mut st = state.lock().unwrap_or_else(|p| p.into_inner());
        route(&method, path, &param, &mut st, deterministic)
    };
    let bytes = serde_json::to_vec(&doc).expect("documents serialize");
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let response = Response::from_data(bytes).with_status_code(status).with_header(header);
    if let Err(e) = request.respond(response) {
        log::debug!("mock SUT failed to respond: {e}");
    }
}

fn route(
    method: &Method,
    path: &str,
    param: &dyn Fn(&str) -> Option<String>,
    st: &mut State,
    det: bool,
) -> (u16, Value) {
    let get = *method == Method::Get;
    match path {
        "/price/estimate" if get => match param("base").and_then(|b| b.parse::<i64>().ok()) {
            Some(base) => {
                let jitter = if det { FROZEN_JITTER } else { st.rng.gen_range(0..10) };
                (200, json!({"base": base, "jitter": jitter, "total": base + i64::from(jitter)}))
            }
            None => (400, json!({"status": 400, "error": "Bad Request", "message": "missing or non-integer base", "path": path})),
        },
        "/time" if get => {
            let now = if det {
                FROZEN_TIME.to_string()
            } else if let Some(clock) = st.clock.as_mut() {
                *clock += ChronoDuration::microseconds(st.rng.gen_range(1..=1_000_000));
                clock.format(TIME_FORMAT).to_string()
            } else {
                Utc::now().naive_utc().format(TIME_FORMAT).to_string()
            };
            (200, json!({"calculatedPastTime": now}))
        }
        "/token" if get => {
            let token = if det {
                FROZEN_TOKEN.to_string()
            } else {
                uuid::Builder::from_random_bytes(st.rng.gen()).into_uuid().to_string()
            };
            (200, json!({"token": token, "type": "bearer"}))
        }
        "/hash" if get => {
            let pw = param("pw").unwrap_or_default();
            let salt: Vec<u8> = if det { FROZEN_SALT.to_vec() } else { st.rng.gen::<[u8; 16]>().to_vec() };
            (200, json!({"algorithm": "sha256", "digest": salted_digest(&salt, &pw)}))
        }
        "/tags" if get => {
            let mut tags = TAGS.to_vec();
            if !det {
                tags.shuffle(&mut st.rng);
            }
            (200, json!({"count": tags.len(), "tags": tags}))
        }
        "/malformed" if *method == Method::Post => {
            let stream = if det {
                FROZEN_STREAM.to_string()
            } else {
                let class = if st.rng.gen_bool(0.5) { "ByteArrayInputStream" } else { "PushbackInputStream" };
                format!("java.io.{class}@{:08x}", st.rng.gen::<u32>())
            };
            (
                400,
                json!({
                    "status": 400,
                    "error": "Bad Request",
                    "exception": "org.springframework.http.converter.HttpMessageNotReadableException",
                    "message": malformed_message(&stream),
                    "path": "/malformed",
                }),
            )
        }
        "/counter" if get => {
            let value = if det {
                1
            } else {
                st.counter += 1;
                st.counter
            };
            (200, json!({"value": value}))
        }
        "/stable" if get => (
            200,
            json!({"name": "stable", "version": 1, "features": ["a", "b", "c"], "empty": []}),
        ),
        "/wrong" if get => (200, json!({"answer": 41})),
        "/price/estimate" | "/time" | "/token" | "/hash" | "/tags" | "/malformed" | "/counter" | "/stable" | "/wrong" => {
            (405, json!({"status": 405, "error": "Method Not Allowed", "path": path}))
        }
        _ => (404, json!({"status": 404, "error": "Not Found", "path": path})),
    }
}

pub fn salted_digest(salt: &[u8], pw: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(pw.as_bytes());
    hex::encode(h.finalize())
}

pub fn malformed_message(stream: &str) -> String {
    format!(
        "Could not read document: Can not deserialize instance of java.util.HashSet out of START_OBJECT token\n at [Source: {stream}; line: 1, column: 20] (through reference chain: com.example.mock.Admin[\"roles\"])\n\tat com.example.mock.JsonReader.read(JsonReader.java:118)"
    )
}
