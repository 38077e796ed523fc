//! HTTP surface of the interactive oracle.
//!
//! | route | result |
//! |---|---|
//! | `GET /api/query` | 200 with the pending query, or 204 |
//! | `POST /api/label` `{"doc_id": n, "label": "pos"}` | 200 accepted, 409 stale id, 400 bad body |
//! | `GET /api/status` | 200 with run progress |
//! | `GET /*` | static console assets, when an asset directory is set |
//!
//! Every JSON payload carries a top-level `v` version field.

use std::io;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};
use tiny_http::{Header, Method, Request, Response, Server, StatusCode};

use crate::corpus::Polarity;
use crate::oracle::{LabelDesk, SubmitOutcome, WIRE_VERSION};

/// Body of `POST /api/label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAnswer {
    #[serde(default = "wire_version")]
    pub v: u32,
    pub doc_id: u64,
    pub label: String,
}

fn wire_version() -> u32 {
    WIRE_VERSION
}

/// Reply to `POST /api/label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReply {
    pub v: u32,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct LabelService {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl LabelService {
    /// Binds `addr` (port 0 picks a free port) and serves in a background
    /// thread.
    pub fn start(addr: &str, desk: LabelDesk, assets: Option<PathBuf>) -> io::Result<Self> {
        let server = Server::http(addr).map_err(io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::other("label service is not bound to an IP address"))?;
        let server = Arc::new(server);
        let worker = {
            let server = Arc::clone(&server);
            thread::Builder::new()
                .name("label-service".into())
                .spawn(move || {
                    for request in server.incoming_requests() {
                        if let Err(e) = handle(request, &desk, assets.as_deref()) {
                            log::warn!("label service: failed to respond: {e}");
                        }
                    }
                })?
        };
        Ok(LabelService {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for LabelService {
    fn drop(&mut self) {
        self.stop();
    }
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn json<T: Serialize>(status: u16, body: &T) -> Response<io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("payload serializes");
    Response::from_data(bytes)
        .with_status_code(StatusCode(status))
        .with_header(json_header())
}

fn reply(status: u16, word: &str, error: Option<String>) -> Response<io::Cursor<Vec<u8>>> {
    json(
        status,
        &LabelReply {
            v: WIRE_VERSION,
            status: word.into(),
            error,
        },
    )
}

fn handle(mut request: Request, desk: &LabelDesk, assets: Option<&Path>) -> io::Result<()> {
    let path = request.url().split('?').next().unwrap_or("").to_owned();
    let method = request.method().clone();
    match (method, path.as_str()) {
        (Method::Get, "/api/query") => match desk.pending() {
            Some(q) => request.respond(json(200, &q)),
            None => request.respond(Response::empty(204)),
        },
        (Method::Get, "/api/status") => request.respond(json(200, &desk.status())),
        (Method::Post, "/api/label") => {
            let mut body = String::new();
            if let Err(e) = request.as_reader().read_to_string(&mut body) {
                return request.respond(reply(400, "bad-request", Some(e.to_string())));
            }
            let response = match serde_json::from_str::<LabelAnswer>(&body) {
                Err(e) => reply(400, "bad-request", Some(e.to_string())),
                Ok(answer) if answer.v != WIRE_VERSION => {
                    reply(400, "bad-request", Some(format!("unsupported version {}", answer.v)))
                }
                Ok(answer) => match answer.label.parse::<Polarity>() {
                    Err(e) => reply(400, "bad-request", Some(e.to_string())),
                    Ok(label) => match desk.submit(answer.doc_id, label) {
                        SubmitOutcome::Accepted => reply(200, "accepted", None),
                        SubmitOutcome::Conflict => reply(409, "conflict", None),
                    },
                },
            };
            request.respond(response)
        }
        (_, p) if p.starts_with("/api/") => request.respond(Response::empty(405)),
        (Method::Get, p) => match assets.and_then(|dir| resolve_asset(dir, p)) {
            Some(file) => match std::fs::File::open(&file) {
                Ok(f) => {
                    let mut resp = Response::from_file(f);
                    if let Some(ct) = content_type(&file) {
                        resp.add_header(Header::from_bytes("Content-Type", ct).expect("static header"));
                    }
                    request.respond(resp)
                }
                Err(_) => request.respond(Response::empty(404)),
            },
            None => request.respond(Response::empty(404)),
        },
        _ => request.respond(Response::empty(405)),
    }
}

/// Maps a URL path to a file inside `dir`, refusing anything that would
/// escape it.
fn resolve_asset(dir: &Path, url_path: &str) -> Option<PathBuf> {
    let rel = url_path.trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return None;
    }
    let full = dir.join(rel);
    full.is_file().then_some(full)
}

fn content_type(path: &Path) -> Option<&'static str> {
    Some(match path.extension()?.to_str()? {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        _ => return None,
    })
}
